#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pnft/algcurve.hpp"
#include "pnft/channel.hpp"
#include "pnft/fgsynth.hpp"
#include "pnft/waveform.hpp"
#include "pnft/zs_spectrum.hpp"

// File formats. Complex numbers are written as [re, im] pairs in JSON. All
// readers throw ParseError with the offending file and, where meaningful, the
// line number.
namespace pnft::io {

std::string to_json(const algcurve::ThetaParameters& p);
algcurve::ThetaParameters params_from_json(const std::string& text);

std::string to_json(const zs::SpectrumEstimate& s);

std::string to_json(const fgsynth::Constellation& c);
fgsynth::Constellation constellation_from_json(const std::string& text);
void save_constellation(const std::string& path, const fgsynth::Constellation& c);
fgsynth::Constellation load_constellation(const std::string& path);

// Seed spectra, one per line as whitespace separated "re,im" pairs. Blank
// lines and lines starting with '#' are skipped.
std::vector<algcurve::MainSpectrum> parse_seed_spectra(std::istream& in, const std::string& name = "<input>");
std::vector<algcurve::MainSpectrum> load_seed_spectra(const std::string& path);

// Link configuration from a JSON object; absent keys keep their defaults.
channel::LinkConfig link_from_json(const std::string& text, channel::LinkConfig base = {});
channel::LinkConfig load_link(const std::string& path, channel::LinkConfig base = {});
std::string to_json(const channel::LinkConfig& link);

// Waveform file: one JSON header line, then interleaved little-endian float64
// (re, im) samples. `extra` is merged into the header.
void write_waveform(const std::string& path, const Waveform& wf, const std::string& extra_json = "{}");
Waveform read_waveform(const std::string& path, std::string* header_json = nullptr);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

// CSV output with a leading "# pnft-csv <schema> v<version>" line.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::string& schema, const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& cells);
    static std::string num(double v);

    static constexpr int kVersion = 1;

private:
    std::ostream& out_;
    std::size_t width_;
};

// Column lists of the CLI tables: "ber", "reach", "spacetime" and "cloud".
// Throws InvalidArgument for other names.
const std::vector<std::string>& csv_columns(const std::string& schema);

}  // namespace pnft::io
