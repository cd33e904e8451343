#pragma once

#include <cstdint>
#include <functional>

#include "pnft/common.hpp"
#include "pnft/waveform.hpp"

namespace pnft::channel {

// Fiber link. Times are in ps, distances in km, powers in W.
struct LinkConfig {
    double beta2 = -21.5;        // ps^2/km
    double gamma_nl = 2.23;      // 1/(W km)
    double alpha_db = 0.2;       // dB/km
    double span_km = 75.0;
    int n_spans = 0;
    double noise_figure_db = 5.5;
    double center_wavelength_nm = 1550.0;
    double step_km = 0.1;
    bool noise_on = true;
    bool loss_on = true;
    // Propagate the lossless NLSE with gamma_eff in place of the lossy span
    // (no amplifiers, no noise).
    bool effective_model = false;
    double max_nonlinear_phase = 0.05;  // rad per step

    void validate() const;
    double alpha_per_km() const;  // field power attenuation in 1/km
    double carrier_frequency_hz() const;
};

// Path-averaged nonlinearity gamma (1 - exp(-alpha L)) / (alpha L); equals gamma
// for a lossless link.
double gamma_eff(const LinkConfig& link);

// Normalization T = t0 t, Z = z0 z, A = sqrt(P0) q of the dimensionless NLSE
// i q_z + q_tt + 2 |q|^2 q = 0 with z0 = 2 t0^2 / |beta2| and
// P0 = |beta2| / (gamma_eff t0^2).
struct UnitMap {
    double t0 = 1.0;          // ps
    double beta2_abs = 21.5;  // ps^2/km
    double gamma = 1.0;       // effective nonlinearity, 1/(W km)

    double z0() const { return 2.0 * t0 * t0 / beta2_abs; }
    double power() const { return beta2_abs / (gamma * t0 * t0); }

    // t0 chosen so that a dimensionless period maps onto period_ps.
    static UnitMap for_period(double dimensionless_period, double period_ps, const LinkConfig& link);
};

Waveform to_physical(const Waveform& wf, const UnitMap& units);
Waveform to_dimensionless(const Waveform& wf, const UnitMap& units);

// Called after every amplifier (or every span of the effective model) with the
// span index (1-based), the distance travelled and the field. Returning false
// stops the propagation there.
using SpanObserver = std::function<bool(int span, double distance_km, const Waveform& field)>;

// Symmetric split-step propagation over link.n_spans spans. The window is
// treated as periodic. Deterministic for a given seed.
Waveform propagate(const Waveform& wf, const LinkConfig& link, std::uint64_t rng_seed,
                   const SpanObserver& observer = {});

// Lossless noiseless propagation of the dimensionless NLSE over `distance`
// with `steps` symmetric split steps.
CVector propagate_dimensionless(const CVector& q, double dt, double distance, int steps);

// Dispersive broadening 2 pi |beta2| z B, in seconds, for B in Hz, z in km and
// beta2 in ps^2/km.
double dispersion_broadening(double bandwidth_hz, double distance_km, double beta2);

// Width of the centered frequency band holding `fraction` of the energy, in Hz
// for physical waveforms (dt in ps) and in cycles per unit time otherwise.
double occupied_bandwidth(const Waveform& wf, double fraction = 0.99);

}  // namespace pnft::channel
