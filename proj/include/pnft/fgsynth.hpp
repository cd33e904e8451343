#pragma once

#include <string>
#include <vector>

#include "pnft/algcurve.hpp"
#include "pnft/waveform.hpp"

namespace pnft::fgsynth {

using algcurve::MainSpectrum;
using algcurve::ThetaParameters;

// q(t_i, z) = K0 theta((w t + k z + d-)/2pi) / theta((w t + k z + d+)/2pi)
//             * exp(i w0 t + i k0 z)
// on t_i = t_start + i t_span / n_samples. The period field is the quasi-period
// when t_span is a multiple of it, and t_span otherwise.
Waveform synthesize(const ThetaParameters& params, int n_samples, double t_span, double z, double t_start = 0.0);

struct ResidualGrid {
    int n_samples = 1024;
    double t_span = 0.0;  // 0 selects one quasi-period (or one period of the fastest phase)
    double z = 0.0;
    double dz = 0.0;      // 0 selects the time step
};

// max |i q_z + q_tt + 2|q|^2 q| / max |q| with fourth-order central differences.
double nlse_residual(const ThetaParameters& params, const ResidualGrid& grid = {});

// Smallest T > 0 with w_j T / 2pi integral for every nonzero w_j, from
// continued-fraction approximations of the ratios with denominators up to
// denom_bound.
double quasi_period(const ThetaParameters& params, int denom_bound = 16);

// Index of the smallest nonzero |w_j|, or -1 if all vanish.
int smallest_frequency(const ThetaParameters& params);

ThetaParameters force_frequency_zero(const ThetaParameters& params, int j);

// lambda -> s lambda: w0, w, K0 scale by s; k0, k by s^2.
ThetaParameters scale_params(const ThetaParameters& params, double s);

// lambda -> lambda + shift, realized as q(t, z) -> q(t + 4 shift z, z)
// exp(-2i shift t - 4i shift^2 z), the Galilean image of the solution.
ThetaParameters shift_spectrum(const ThetaParameters& params, double shift);

// Carrier rotation over one quasi-period, wrapped to (-pi, pi].
double carrier_rotation(const ThetaParameters& params, double period);

// Rate at which the intensity pattern moves in time per unit distance,
// measured by propagating the waveform with the dimensionless lossless NLSE
// and tracking the cyclic cross-correlation peak of |q| over n_probes
// consecutive legs of length probe_distance. Each leg must move the pattern by
// less than a quarter period.
double estimate_group_velocity(const Waveform& wf, double probe_distance, int n_probes = 1);

struct StartSelection {
    int offset = 0;            // index of the amplitude minimum
    double fine_offset = 0.0;  // sub-sample position from a three-point parabola
    Waveform rotated;
};

// Rotate one period so that it starts at the minimum of |q|; samples wrapped
// around the end pick up the carrier rotation of the quasi-period.
StartSelection select_start(const Waveform& wf);

struct ConstellationSymbol {
    ThetaParameters params;
    MainSpectrum reference_spectrum;
    MainSpectrum seed_spectrum;
    std::string bits;
    double start_offset = 0.0;  // in units of the design sample interval
    double global_phase = 0.0;
    double drift = 0.0;         // measured group velocity, time per unit distance
};

struct Constellation {
    std::vector<ConstellationSymbol> symbols;
    double period = 0.0;
    double cp_fraction = 0.0;
    double group_velocity = 0.0;
    int samples_per_period = 32;

    int bits_per_symbol() const;
    int find_label(const std::string& bits) const;  // -1 if absent
};

struct DesignOptions {
    int samples_per_period = 32;
    int reference_samples = 1024;  // resolution used to fix the reference spectra
    double probe_distance = 0.05;
    int probe_legs = 20;
    int drift_iterations = 3;
    // Allowed drift spread: 2% of the period over `spread_distance`.
    double spread_distance = 0.4;
    int denom_bound = 16;
};

// Per seed: theta parameters, smallest frequency set to zero, quasi-period,
// scaling to the target period; then group velocities equalized to their mean
// by spectral shifts, start at the amplitude minimum, reference spectrum by
// forward transform, and labels with nearest neighbours one bit apart.
Constellation design_constellation(const std::vector<MainSpectrum>& seeds, double target_period, double cp_fraction,
                                   const DesignOptions& opts = {});

// One period of a symbol as stored in the lookup table, starting at its
// selected offset.
Waveform symbol_waveform(const Constellation& c, std::size_t index, int samples_per_period);

// Demapping distance between two spectra: sum of squared point distances
// under the best assignment of points.
double spectrum_metric(const CVector& a, const CVector& b);

// Default seeds {i, 0.45i + g, 0.45i - g} for the four g used by the reference
// constellation; the symmetric one comes first.
std::vector<MainSpectrum> default_seeds();

}  // namespace pnft::fgsynth
