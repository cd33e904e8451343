#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "pnft/channel.hpp"
#include "pnft/experiment.hpp"
#include "pnft/fgsynth.hpp"
#include "pnft/io.hpp"
#include "pnft/txrx.hpp"
#include "pnft/zs_spectrum.hpp"

using namespace pnft;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    int threads = 1;
};

json load_config(const Globals& g) {
    if (g.config.empty()) return json::object();
    try {
        return json::parse(io::read_text(g.config));
    } catch (const json::exception& e) {
        throw Usage(g.config + ": " + e.what());
    }
}

channel::LinkConfig link_of(const json& cfg) {
    return cfg.contains("link") ? io::link_from_json(cfg.at("link").dump()) : channel::LinkConfig{};
}

std::string out_path(const Globals& g, const std::string& name) {
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / name).string();
}

fgsynth::Constellation constellation_of(const std::string& flag, const json& cfg) {
    std::string path = flag;
    if (path.empty()) path = cfg.value("constellation", "");
    if (path.empty()) throw Usage("no constellation given (--constellation or \"constellation\" in the config)");
    if (!std::filesystem::exists(path)) throw Usage("constellation file " + path + " does not exist");
    return io::load_constellation(path);
}

// The frame header written by modulate carries everything the receiver needs
// to rebuild the slot layout and the unit map.
struct FrameHeader {
    std::string bits;
    double cp_fraction = 0.0;
    bool stitch_phase = true;
    int guard_symbols = 0;
    int samples_per_period = 32;
    double t0 = 1.0;
    double beta2_abs = 1.0;
    double gamma = 1.0;
    double distance_km = 0.0;

    json to_json() const {
        return {{"bits", bits},
                {"cp_fraction", cp_fraction},
                {"stitch_phase", stitch_phase},
                {"guard_symbols", guard_symbols},
                {"samples_per_period", samples_per_period},
                {"t0_ps", t0},
                {"beta2_abs", beta2_abs},
                {"gamma_eff", gamma},
                {"distance_km", distance_km}};
    }

    static FrameHeader from_json(const json& h, const std::string& path) {
        if (!h.contains("bits")) throw Usage(path + " is not a modulated frame");
        FrameHeader f;
        f.bits = h.at("bits").get<std::string>();
        f.cp_fraction = h.at("cp_fraction").get<double>();
        f.stitch_phase = h.at("stitch_phase").get<bool>();
        f.guard_symbols = h.at("guard_symbols").get<int>();
        f.samples_per_period = h.at("samples_per_period").get<int>();
        f.t0 = h.at("t0_ps").get<double>();
        f.beta2_abs = h.at("beta2_abs").get<double>();
        f.gamma = h.at("gamma_eff").get<double>();
        f.distance_km = h.at("distance_km").get<double>();
        return f;
    }

    channel::UnitMap units() const { return {t0, beta2_abs, gamma}; }
};

struct LoadedFrame {
    FrameHeader header;
    Waveform wf;
};

LoadedFrame load_frame(const std::string& path) {
    if (!std::filesystem::exists(path)) throw Usage("waveform file " + path + " does not exist");
    std::string text;
    LoadedFrame f;
    f.wf = io::read_waveform(path, &text);
    f.header = FrameHeader::from_json(json::parse(text), path);
    return f;
}

txrx::Frame layout_of(const FrameHeader& h, fgsynth::Constellation& c) {
    c.cp_fraction = h.cp_fraction;
    txrx::FrameOptions fo;
    fo.samples_per_period = h.samples_per_period;
    fo.stitch_phase = h.stitch_phase;
    fo.guard_symbols = h.guard_symbols;
    return txrx::assemble_frame(h.bits, c, fo);
}

txrx::ReceiverOptions receiver_of(const json& cfg, const fgsynth::Constellation& c, const FrameHeader& h) {
    const json p = cfg.value("plan", json::object());
    txrx::ReceiverOptions ro;
    ro.upsample_to = p.value("upsample_to", std::size_t{256});
    ro.window_position = p.value("window_position", 0.5);
    ro.lowpass_cutoff = p.value("rx_filter_harmonics", 4.0) * 2.0 * kPi / c.period;
    ro.timing_offset = c.group_velocity * h.distance_km / h.units().z0();
    return ro;
}

// Plan fields come from the "plan" object of the config; flags given on the
// command line take precedence.
struct PlanFlags {
    std::optional<double> max_km;
    std::vector<double> distances;
    std::vector<double> cps;
    std::optional<int> n_symbols;
    std::vector<std::uint64_t> seeds;
    std::vector<double> thresholds;
    std::string constellation;
};

experiment::SweepPlan plan_of(const Globals& g, const json& cfg, const PlanFlags& f, const channel::LinkConfig& link) {
    const json p = cfg.value("plan", json::object());
    experiment::SweepPlan plan;
    plan.distances_km = p.value("distances_km", std::vector<double>{});
    if (p.contains("max_km")) plan.distances_km = experiment::span_grid(link.span_km, p.at("max_km").get<double>());
    plan.cp_fractions = p.value("cp_fractions", std::vector<double>{0.0, 0.5, 2.0 / 3.0, 0.75});
    plan.n_symbols = p.value("n_symbols", plan.n_symbols);
    plan.seeds = p.value("seeds", std::vector<std::uint64_t>{g.seed});
    plan.ber_thresholds = p.value("ber_thresholds", plan.ber_thresholds);
    plan.period_ps = p.value("period_ps", plan.period_ps);
    plan.stitch_phase = p.value("stitch_phase", plan.stitch_phase);
    plan.guard_symbols = p.value("guard_symbols", plan.guard_symbols);
    plan.upsample_to = p.value("upsample_to", plan.upsample_to);
    plan.window_position = p.value("window_position", plan.window_position);
    plan.rx_filter_harmonics = p.value("rx_filter_harmonics", plan.rx_filter_harmonics);
    plan.stop_ber = p.value("stop_ber", plan.stop_ber);

    if (f.max_km) plan.distances_km = experiment::span_grid(link.span_km, *f.max_km);
    if (!f.distances.empty()) plan.distances_km = f.distances;
    if (!f.cps.empty()) plan.cp_fractions = f.cps;
    if (f.n_symbols) plan.n_symbols = *f.n_symbols;
    if (!f.seeds.empty()) plan.seeds = f.seeds;
    if (!f.thresholds.empty()) plan.ber_thresholds = f.thresholds;
    plan.threads = g.threads;

    if (plan.distances_km.empty()) throw Usage("empty distance list (--max-km, --distances or plan.distances_km)");
    if (plan.n_symbols < 100) throw Usage("a sweep needs at least 100 symbols");
    try {
        plan.validate();
    } catch (const Error& e) {
        throw Usage(e.what());
    }
    return plan;
}

void add_plan_flags(CLI::App* cmd, PlanFlags& f) {
    cmd->add_option("--constellation", f.constellation, "constellation file");
    cmd->add_option("--max-km", f.max_km, "sweep every span up to this distance");
    cmd->add_option("--distances", f.distances, "explicit distance grid in km");
    cmd->add_option("--cp", f.cps, "cyclic prefix fractions");
    cmd->add_option("--symbols", f.n_symbols, "symbols per run");
    cmd->add_option("--seeds", f.seeds, "Monte Carlo seeds");
    cmd->add_option("--thresholds", f.thresholds, "BER thresholds");
}

std::vector<experiment::BerCell> run_sweep(const Globals& g, const PlanFlags& f, experiment::SweepPlan& plan) {
    const json cfg = load_config(g);
    const channel::LinkConfig link = link_of(cfg);
    const fgsynth::Constellation c = constellation_of(f.constellation, cfg);
    plan = plan_of(g, cfg, f, link);
    const auto cells = experiment::ber_sweep(c, link, plan);

    std::ofstream out(out_path(g, "ber.csv"));
    io::CsvWriter w(out, "ber", io::csv_columns("ber"));
    for (const auto& cell : cells) {
        w.row({io::CsvWriter::num(cell.distance_km), io::CsvWriter::num(cell.cp_fraction), io::CsvWriter::num(cell.ber()),
               io::CsvWriter::num(cell.errors), std::to_string(cell.bits)});
    }
    return cells;
}

void cmd_design(const Globals& g, const std::string& seeds_file, double period, double cp, const std::string& name) {
    const auto seeds = seeds_file.empty() ? fgsynth::default_seeds() : io::load_seed_spectra(seeds_file);
    if (seeds.empty()) throw Usage("no seed spectra in " + seeds_file);
    const auto c = fgsynth::design_constellation(seeds, period, cp);
    const std::string path = out_path(g, name);
    io::save_constellation(path, c);
    std::cout << c.symbols.size() << " symbols, period " << c.period << ", written to " << path << '\n';
}

void cmd_modulate(const Globals& g, const std::string& cfile, int n_symbols, std::optional<double> cp,
                  const std::string& name) {
    const json cfg = load_config(g);
    const channel::LinkConfig link = link_of(cfg);
    fgsynth::Constellation c = constellation_of(cfile, cfg);
    const json p = cfg.value("plan", json::object());
    FrameHeader h;
    h.bits = experiment::random_bits(static_cast<std::size_t>(n_symbols) * static_cast<std::size_t>(c.bits_per_symbol()),
                                     g.seed);
    h.cp_fraction = cp.value_or(c.cp_fraction);
    h.stitch_phase = p.value("stitch_phase", true);
    h.guard_symbols = p.value("guard_symbols", 0);
    h.samples_per_period = c.samples_per_period;
    const auto units = channel::UnitMap::for_period(c.period, p.value("period_ps", 500.0), link);
    h.t0 = units.t0;
    h.beta2_abs = units.beta2_abs;
    h.gamma = units.gamma;
    const txrx::Frame frame = layout_of(h, c);
    const std::string path = out_path(g, name);
    io::write_waveform(path, channel::to_physical(frame.signal, units), h.to_json().dump());
    std::cout << n_symbols << " symbols, " << frame.signal.size() << " samples, written to " << path << '\n';
}

void cmd_propagate(const Globals& g, const std::string& in, double km, const std::string& name) {
    const json cfg = load_config(g);
    channel::LinkConfig link = link_of(cfg);
    LoadedFrame f = load_frame(in);
    const double spans = km / link.span_km;
    if (km < 0.0 || std::abs(spans - std::round(spans)) > 1e-9) throw Usage("distance must be a whole number of spans");
    link.n_spans = static_cast<int>(std::round(spans));
    const Waveform out = link.n_spans > 0 ? channel::propagate(f.wf, link, g.seed) : f.wf;
    f.header.distance_km += km;
    const std::string path = out_path(g, name);
    io::write_waveform(path, out, f.header.to_json().dump());
    std::cout << "propagated " << km << " km, written to " << path << '\n';
}

struct Demodulated {
    fgsynth::Constellation c;
    txrx::Frame layout;
    txrx::Reception rec;
};

Demodulated demodulate(const Globals& g, const std::string& in, const std::string& cfile) {
    const json cfg = load_config(g);
    Demodulated d{constellation_of(cfile, cfg), {}, {}};
    const LoadedFrame f = load_frame(in);
    d.layout = layout_of(f.header, d.c);
    const Waveform rx = channel::to_dimensionless(f.wf, f.header.units());
    d.rec = txrx::receive_frame(rx, d.layout, d.c, receiver_of(cfg, d.c, f.header));
    return d;
}

void cmd_demod(const Globals& g, const std::string& in, const std::string& cfile, const std::string& name) {
    const Demodulated d = demodulate(g, in, cfile);
    const std::string path = out_path(g, name);
    std::ofstream out(path);
    for (const auto& r : d.rec.per_symbol) {
        json line{{"decided_symbol", r.decided_symbol},
                  {"decided_label", r.decided_symbol >= 0 ? d.c.symbols[static_cast<std::size_t>(r.decided_symbol)].bits : ""},
                  {"metric_values", r.metric_values},
                  {"recovered", json::parse(io::to_json(r.recovered))}};
        out << line.dump() << '\n';
    }
    const std::string ref = txrx::decided_payload(d.layout);
    std::cout << "ber " << txrx::ber(ref, d.rec.bits) << " (" << txrx::bit_errors(ref, d.rec.bits) << " of " << ref.size()
              << " bits, " << d.rec.erasures << " erasures), decisions written to " << path << '\n';
}

void cmd_spectrum_cloud(const Globals& g, const std::string& in, const std::string& cfile, const std::string& name) {
    const Demodulated d = demodulate(g, in, cfile);
    std::ofstream out(out_path(g, name));
    io::CsvWriter w(out, "cloud", io::csv_columns("cloud"));
    const std::size_t first = static_cast<std::size_t>(d.layout.guard_symbols);
    for (std::size_t k = 0; k < d.rec.per_symbol.size(); ++k) {
        const auto& slot = d.layout.slots[first + k];
        const auto& r = d.rec.per_symbol[k];
        const std::string sent = d.c.symbols[static_cast<std::size_t>(slot.symbol)].bits;
        const std::string got = r.decided_symbol >= 0 ? d.c.symbols[static_cast<std::size_t>(r.decided_symbol)].bits : "x";
        for (auto z : r.recovered.eigenvalues) {
            w.row({std::to_string(first + k), sent, got, io::CsvWriter::num(z.real()), io::CsvWriter::num(z.imag())});
        }
    }
}

void cmd_spacetime(const Globals& g, const std::string& cfile, const std::string& label, double km, double dz,
                   const std::string& name) {
    const json cfg = load_config(g);
    channel::LinkConfig link = link_of(cfg);
    const fgsynth::Constellation c = constellation_of(cfile, cfg);
    const int index = c.find_label(label);
    if (index < 0) throw Usage("no symbol labelled " + label);
    if (!(dz > 0.0) || !(km >= 0.0)) throw Usage("distance and record step must be positive");

    // One period made periodic by removing its carrier rotation; this is a
    // real spectral shift and leaves the intensity pattern unchanged.
    const Waveform one = fgsynth::symbol_waveform(c, static_cast<std::size_t>(index), c.samples_per_period);
    Waveform q = zs::dealias_with_phase(one, one.phase_slope * one.period).periodic;
    q.phase_slope = 0.0;
    const json p = cfg.value("plan", json::object());
    const auto units = channel::UnitMap::for_period(c.period, p.value("period_ps", 500.0), link);
    const Waveform tx = channel::to_physical(q, units);

    int every = 1;
    if (link.effective_model) {
        link.span_km = dz;
    } else {
        const double r = dz / link.span_km;
        if (std::abs(r - std::round(r)) > 1e-9 || r < 1.0) throw Usage("record step must be a whole number of spans");
        every = static_cast<int>(std::round(r));
    }
    link.n_spans = static_cast<int>(std::floor(km / link.span_km + 1e-9));

    std::ofstream out(out_path(g, name));
    io::CsvWriter w(out, "spacetime", io::csv_columns("spacetime"));
    auto record = [&](double z, const Waveform& field) {
        for (std::size_t i = 0; i < field.size(); ++i) {
            w.row({io::CsvWriter::num(z), io::CsvWriter::num(static_cast<double>(i) * field.dt),
                   io::CsvWriter::num(std::abs(field.samples[i]))});
        }
    };
    record(0.0, tx);
    if (link.n_spans > 0) {
        channel::propagate(tx, link, g.seed, [&](int span, double z, const Waveform& field) {
            if (span % every == 0) record(z, field);
            return true;
        });
    }
}

int exit_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::UnknownLabel:
    case ErrorCode::LengthMismatch:
    case ErrorCode::UnitMismatch:
    case ErrorCode::StepTooCoarse:
        return kExitUsage;
    default:
        return kExitNumerical;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic nonlinear Fourier transmission: design, simulate and evaluate"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON file with \"link\", \"plan\" and \"constellation\" entries");
    app.add_option("--seed", g.seed, "payload and noise seed");
    app.add_option("--out-dir", g.out_dir, "directory for output files");
    app.add_option("--threads", g.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);

    std::string seeds_file, cfile, in, label = "00";
    std::map<std::string, std::string> names;
    double period = 3.0, design_cp = 0.5, km = 0.0, dz = 75.0;
    std::optional<double> cp;
    int n_symbols = 1000;
    PlanFlags pf;

    auto* design = app.add_subcommand("design", "build a constellation lookup table from seed spectra");
    design->add_option("--seeds", seeds_file, "seed spectra, one symbol per line of re,im pairs");
    design->add_option("--period", period, "dimensionless symbol period");
    design->add_option("--cp", design_cp, "cyclic prefix fraction");
    design->add_option("--out", names["design"], "output file name")->default_val("constellation.json");

    auto* modulate = app.add_subcommand("modulate", "random payload to a physical frame");
    modulate->add_option("--constellation", cfile, "constellation file");
    modulate->add_option("--symbols", n_symbols, "number of symbols")->check(CLI::PositiveNumber);
    modulate->add_option("--cp", cp, "cyclic prefix fraction (default: the constellation's)");
    modulate->add_option("--out", names["modulate"], "output file name")->default_val("tx.pnftw");

    auto* propagate = app.add_subcommand("propagate", "send a frame over the link");
    propagate->add_option("--in", in, "input waveform")->required();
    propagate->add_option("--km", km, "distance, a whole number of spans")->required();
    propagate->add_option("--out", names["propagate"], "output file name")->default_val("rx.pnftw");

    auto* demod = app.add_subcommand("demod", "decide symbols and report the BER");
    demod->add_option("--in", in, "received waveform")->required();
    demod->add_option("--constellation", cfile, "constellation file");
    demod->add_option("--out", names["demod"], "output file name")->default_val("demod.jsonl");

    auto* ber_sweep = app.add_subcommand("ber-sweep", "BER over distance and prefix length");
    add_plan_flags(ber_sweep, pf);

    auto* reach_sweep = app.add_subcommand("reach-sweep", "reach per prefix length and BER threshold");
    add_plan_flags(reach_sweep, pf);

    auto* spacetime = app.add_subcommand("spacetime", "intensity of one symbol along the link");
    spacetime->add_option("--constellation", cfile, "constellation file");
    spacetime->add_option("--symbol", label, "symbol label");
    spacetime->add_option("--km", km, "distance")->required();
    spacetime->add_option("--dz", dz, "record step in km");
    spacetime->add_option("--out", names["spacetime"], "output file name")->default_val("spacetime.csv");

    auto* cloud = app.add_subcommand("spectrum-cloud", "recovered eigenvalues of every slot");
    cloud->add_option("--in", in, "received waveform")->required();
    cloud->add_option("--constellation", cfile, "constellation file");
    cloud->add_option("--out", names["cloud"], "output file name")->default_val("cloud.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*design) {
            cmd_design(g, seeds_file, period, design_cp, names["design"]);
        } else if (*modulate) {
            cmd_modulate(g, cfile, n_symbols, cp, names["modulate"]);
        } else if (*propagate) {
            cmd_propagate(g, in, km, names["propagate"]);
        } else if (*demod) {
            cmd_demod(g, in, cfile, names["demod"]);
        } else if (*ber_sweep) {
            experiment::SweepPlan plan;
            run_sweep(g, pf, plan);
        } else if (*reach_sweep) {
            experiment::SweepPlan plan;
            const auto cells = run_sweep(g, pf, plan);
            std::ofstream out(out_path(g, "reach.csv"));
            io::CsvWriter w(out, "reach", io::csv_columns("reach"));
            for (const auto& r : experiment::reach_from_ber(cells, plan.ber_thresholds)) {
                w.row({io::CsvWriter::num(r.cp_fraction), io::CsvWriter::num(r.threshold), io::CsvWriter::num(r.reach_km),
                       r.censored ? "1" : "0"});
            }
        } else if (*spacetime) {
            cmd_spacetime(g, cfile, label, km, dz, names["spacetime"]);
        } else if (*cloud) {
            cmd_spectrum_cloud(g, in, cfile, names["cloud"]);
        }
    } catch (const Usage& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const json::exception& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << error_name(e.code()) << ": " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
