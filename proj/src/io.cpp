#include "pnft/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

namespace pnft::io {

using nlohmann::json;

namespace {

json cjson(Complex z) { return json::array({z.real(), z.imag()}); }

Complex cparse(const json& j) {
    if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::ParseError, "complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json cvec(const CVector& v) {
    json a = json::array();
    for (const Complex& z : v) a.push_back(cjson(z));
    return a;
}

CVector cvec_parse(const json& j) {
    CVector v;
    for (const auto& e : j) v.push_back(cparse(e));
    return v;
}

json params_json(const algcurve::ThetaParameters& p) {
    json tau = json::array();
    for (Eigen::Index r = 0; r < p.tau.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < p.tau.cols(); ++c) row.push_back(cjson(p.tau(r, c)));
        tau.push_back(row);
    }
    auto rvec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    CVector dm(p.delta_minus.data(), p.delta_minus.data() + p.delta_minus.size());
    return json{{"genus", p.genus},
                {"tau", tau},
                {"omega", rvec(p.omega)},
                {"k", rvec(p.kvec)},
                {"omega0", p.omega0},
                {"k0", p.k0},
                {"K0", cjson(p.K0)},
                {"delta_minus", cvec(dm)},
                {"delta_plus", rvec(p.delta_plus)},
                {"condition_number", p.condition_number}};
}

algcurve::ThetaParameters params_parse(const json& j) {
    algcurve::ThetaParameters p;
    p.genus = j.at("genus").get<int>();
    const auto g = static_cast<Eigen::Index>(p.genus);
    p.tau.resize(g, g);
    for (Eigen::Index r = 0; r < g; ++r) {
        for (Eigen::Index c = 0; c < g; ++c) p.tau(r, c) = cparse(j.at("tau").at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)));
    }
    auto rvec = [g](const json& a) {
        const auto v = a.get<std::vector<double>>();
        if (static_cast<Eigen::Index>(v.size()) != g) throw Error(ErrorCode::ParseError, "vector length differs from genus");
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), g));
    };
    p.omega = rvec(j.at("omega"));
    p.kvec = rvec(j.at("k"));
    p.omega0 = j.at("omega0").get<double>();
    p.k0 = j.at("k0").get<double>();
    p.K0 = cparse(j.at("K0"));
    const CVector dm = cvec_parse(j.at("delta_minus"));
    if (static_cast<Eigen::Index>(dm.size()) != g) throw Error(ErrorCode::ParseError, "delta_minus length differs from genus");
    p.delta_minus = Eigen::Map<const Eigen::VectorXcd>(dm.data(), g);
    p.delta_plus = rvec(j.at("delta_plus"));
    p.condition_number = j.value("condition_number", 0.0);
    return p;
}

template <class F>
auto guarded(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, what + ": " + e.what());
    }
}

}  // namespace

std::string to_json(const algcurve::ThetaParameters& p) { return params_json(p).dump(2); }

algcurve::ThetaParameters params_from_json(const std::string& text) {
    return guarded("theta parameters", [&] { return params_parse(json::parse(text)); });
}

std::string to_json(const zs::SpectrumEstimate& s) {
    return json{{"eigenvalues", cvec(s.eigenvalues)}, {"residuals", s.residuals}, {"spurious_removed", s.spurious_removed}}
        .dump();
}

std::string to_json(const fgsynth::Constellation& c) {
    json syms = json::array();
    for (const auto& s : c.symbols) {
        syms.push_back(json{{"bits", s.bits},
                            {"params", params_json(s.params)},
                            {"reference_spectrum", cvec(s.reference_spectrum.points())},
                            {"seed_spectrum", cvec(s.seed_spectrum.points())},
                            {"start_offset", s.start_offset},
                            {"global_phase", s.global_phase},
                            {"drift", s.drift}});
    }
    json j{{"format", "pnft-constellation"},
           {"version", 1},
           {"period", c.period},
           {"cp_fraction", c.cp_fraction},
           {"group_velocity", c.group_velocity},
           {"samples_per_period", c.samples_per_period},
           {"symbols", syms}};
    return j.dump(2);
}

fgsynth::Constellation constellation_from_json(const std::string& text) {
    return guarded("constellation", [&] {
        const json j = json::parse(text);
        if (j.value("format", "") != "pnft-constellation") throw Error(ErrorCode::ParseError, "not a constellation file");
        fgsynth::Constellation c;
        c.period = j.at("period").get<double>();
        c.cp_fraction = j.at("cp_fraction").get<double>();
        c.group_velocity = j.at("group_velocity").get<double>();
        c.samples_per_period = j.at("samples_per_period").get<int>();
        for (const auto& s : j.at("symbols")) {
            fgsynth::ConstellationSymbol sym;
            sym.bits = s.at("bits").get<std::string>();
            sym.params = params_parse(s.at("params"));
            sym.reference_spectrum = algcurve::MainSpectrum(cvec_parse(s.at("reference_spectrum")));
            sym.seed_spectrum = algcurve::MainSpectrum(cvec_parse(s.at("seed_spectrum")));
            sym.start_offset = s.at("start_offset").get<double>();
            sym.global_phase = s.at("global_phase").get<double>();
            sym.drift = s.at("drift").get<double>();
            c.symbols.push_back(std::move(sym));
        }
        if (c.symbols.empty()) throw Error(ErrorCode::ParseError, "constellation has no symbols");
        return c;
    });
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
    out << text;
}

void save_constellation(const std::string& path, const fgsynth::Constellation& c) { write_text(path, to_json(c) + "\n"); }

fgsynth::Constellation load_constellation(const std::string& path) { return constellation_from_json(read_text(path)); }

std::vector<algcurve::MainSpectrum> parse_seed_spectra(std::istream& in, const std::string& name) {
    std::vector<algcurve::MainSpectrum> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::string tok;
        CVector pts;
        auto fail = [&](const std::string& why) {
            throw Error(ErrorCode::ParseError, name + ":" + std::to_string(lineno) + ": " + why);
        };
        while (ls >> tok) {
            const auto comma = tok.find(',');
            if (comma == std::string::npos) fail("expected re,im but got '" + tok + "'");
            double re = 0.0;
            double im = 0.0;
            const char* b = tok.data();
            const auto r1 = std::from_chars(b, b + comma, re);
            const auto r2 = std::from_chars(b + comma + 1, b + tok.size(), im);
            if (r1.ec != std::errc{} || r1.ptr != b + comma || r2.ec != std::errc{} || r2.ptr != b + tok.size()) {
                fail("malformed number in '" + tok + "'");
            }
            pts.emplace_back(re, im);
        }
        try {
            out.emplace_back(pts);
        } catch (const Error& e) {
            fail(e.what());
        }
    }
    if (out.empty()) throw Error(ErrorCode::ParseError, name + ": no spectra");
    return out;
}

std::vector<algcurve::MainSpectrum> load_seed_spectra(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    return parse_seed_spectra(in, path);
}

channel::LinkConfig link_from_json(const std::string& text, channel::LinkConfig l) {
    return guarded("link configuration", [&] {
        const json j = json::parse(text);
        const json& s = j.contains("link") ? j.at("link") : j;
        l.beta2 = s.value("beta2", l.beta2);
        l.gamma_nl = s.value("gamma_nl", l.gamma_nl);
        l.alpha_db = s.value("alpha_db", l.alpha_db);
        l.span_km = s.value("span_km", l.span_km);
        l.n_spans = s.value("n_spans", l.n_spans);
        l.noise_figure_db = s.value("noise_figure_db", l.noise_figure_db);
        l.center_wavelength_nm = s.value("center_wavelength_nm", l.center_wavelength_nm);
        l.step_km = s.value("step_km", l.step_km);
        l.noise_on = s.value("noise_on", l.noise_on);
        l.loss_on = s.value("loss_on", l.loss_on);
        l.effective_model = s.value("effective_model", l.effective_model);
        l.max_nonlinear_phase = s.value("max_nonlinear_phase", l.max_nonlinear_phase);
        l.validate();
        return l;
    });
}

channel::LinkConfig load_link(const std::string& path, channel::LinkConfig base) {
    return link_from_json(read_text(path), base);
}

std::string to_json(const channel::LinkConfig& l) {
    return json{{"beta2", l.beta2},
                {"gamma_nl", l.gamma_nl},
                {"alpha_db", l.alpha_db},
                {"span_km", l.span_km},
                {"n_spans", l.n_spans},
                {"noise_figure_db", l.noise_figure_db},
                {"center_wavelength_nm", l.center_wavelength_nm},
                {"step_km", l.step_km},
                {"noise_on", l.noise_on},
                {"loss_on", l.loss_on},
                {"effective_model", l.effective_model},
                {"max_nonlinear_phase", l.max_nonlinear_phase}}
        .dump(2);
}

void write_waveform(const std::string& path, const Waveform& wf, const std::string& extra_json) {
    static_assert(std::endian::native == std::endian::little, "waveform files are little-endian");
    json h = guarded("waveform header", [&] { return json::parse(extra_json); });
    h["format"] = "pnft-waveform";
    h["version"] = 1;
    h["dt"] = wf.dt;
    h["period"] = wf.period;
    h["units"] = wf.units == Units::Physical ? "physical" : "dimensionless";
    h["phase_slope"] = wf.phase_slope;
    h["n"] = wf.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
    out << h.dump() << '\n';
    out.write(reinterpret_cast<const char*>(wf.samples.data()),
              static_cast<std::streamsize>(wf.samples.size() * sizeof(Complex)));
}

Waveform read_waveform(const std::string& path, std::string* header_json) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    std::string line;
    std::getline(in, line);
    return guarded(path, [&] {
        const json h = json::parse(line);
        if (h.value("format", "") != "pnft-waveform") throw Error(ErrorCode::ParseError, path + ": not a waveform file");
        Waveform wf;
        wf.dt = h.at("dt").get<double>();
        wf.period = h.at("period").get<double>();
        wf.units = h.at("units").get<std::string>() == "physical" ? Units::Physical : Units::Dimensionless;
        wf.phase_slope = h.value("phase_slope", 0.0);
        wf.samples.resize(h.at("n").get<std::size_t>());
        in.read(reinterpret_cast<char*>(wf.samples.data()), static_cast<std::streamsize>(wf.samples.size() * sizeof(Complex)));
        if (static_cast<std::size_t>(in.gcount()) != wf.samples.size() * sizeof(Complex)) {
            throw Error(ErrorCode::ParseError, path + ": truncated sample data");
        }
        if (header_json) *header_json = line;
        return wf;
    });
}

CsvWriter::CsvWriter(std::ostream& out, const std::string& schema, const std::vector<std::string>& columns)
    : out_(out), width_(columns.size()) {
    out_ << "# pnft-csv " << schema << " v" << kVersion << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error(ErrorCode::LengthMismatch, "CSV row width differs from header");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
}

std::string CsvWriter::num(double v) {
    std::ostringstream ss;
    ss << std::setprecision(10) << v;
    return ss.str();
}

const std::vector<std::string>& csv_columns(const std::string& schema) {
    static const std::map<std::string, std::vector<std::string>> tables{
        {"ber", {"distance_km", "cp_fraction", "ber", "n_errors", "n_bits"}},
        {"reach", {"cp_fraction", "threshold", "reach_km", "censored"}},
        {"spacetime", {"z_km", "t_ps", "abs_a"}},
        {"cloud", {"slot", "symbol_label", "decided_label", "re", "im"}},
    };
    const auto it = tables.find(schema);
    if (it == tables.end()) throw Error(ErrorCode::InvalidArgument, "unknown CSV schema " + schema);
    return it->second;
}

}  // namespace pnft::io
