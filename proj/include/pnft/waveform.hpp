#pragma once

#include <cstddef>

#include "pnft/common.hpp"

namespace pnft {

enum class Units { Dimensionless, Physical };

// Uniformly sampled complex envelope. In physical units dt and period are in
// picoseconds and samples in sqrt(W); phase_slope is phi / period, the carrier
// rotation accumulated over one quasi-period divided by its length.
struct Waveform {
    CVector samples;
    double dt = 0.0;
    double period = 0.0;
    Units units = Units::Dimensionless;
    double phase_slope = 0.0;

    std::size_t size() const { return samples.size(); }
    double duration() const { return dt * static_cast<double>(samples.size()); }
    // Samples per period, rounded.
    std::size_t period_samples() const;
};

// Throws InvalidArgument unless samples are finite and cover an integer number
// of periods within half a sample.
void check_waveform(const Waveform& wf);

double mean_power(const CVector& samples);
double peak_amplitude(const CVector& samples);

}  // namespace pnft
