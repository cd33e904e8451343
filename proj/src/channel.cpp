#include "pnft/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pnft/fft.hpp"

namespace pnft::channel {

namespace {
constexpr double kPlanck = 6.62607015e-34;
constexpr double kLightSpeed = 299792458.0;
}  // namespace

void LinkConfig::validate() const {
    if (!(span_km > 0.0)) throw Error(ErrorCode::InvalidArgument, "span length must be positive");
    if (!(step_km > 0.0) || step_km > span_km) throw Error(ErrorCode::InvalidArgument, "step must lie in (0, span]");
    if (n_spans < 0) throw Error(ErrorCode::InvalidArgument, "span count must be non-negative");
    if (!(alpha_db >= 0.0)) throw Error(ErrorCode::InvalidArgument, "attenuation must be non-negative");
    if (!(center_wavelength_nm > 0.0)) throw Error(ErrorCode::InvalidArgument, "wavelength must be positive");
}

double LinkConfig::alpha_per_km() const { return alpha_db * std::log(10.0) / 10.0; }

double LinkConfig::carrier_frequency_hz() const { return kLightSpeed / (center_wavelength_nm * 1e-9); }

double gamma_eff(const LinkConfig& link) {
    const double aL = link.alpha_per_km() * link.span_km;
    if (!link.loss_on || aL < 1e-12) return link.gamma_nl;
    return link.gamma_nl * (1.0 - std::exp(-aL)) / aL;
}

UnitMap UnitMap::for_period(double dimensionless_period, double period_ps, const LinkConfig& link) {
    if (!(dimensionless_period > 0.0) || !(period_ps > 0.0)) throw Error(ErrorCode::InvalidArgument, "periods must be positive");
    UnitMap u;
    u.t0 = period_ps / dimensionless_period;
    u.beta2_abs = std::abs(link.beta2);
    u.gamma = gamma_eff(link);
    if (!(u.beta2_abs > 0.0) || !(u.gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "unit map needs nonzero beta2 and gamma");
    return u;
}

Waveform to_physical(const Waveform& wf, const UnitMap& units) {
    if (wf.units != Units::Dimensionless) throw Error(ErrorCode::UnitMismatch, "waveform is already physical");
    Waveform out = wf;
    const double a = std::sqrt(units.power());
    for (auto& v : out.samples) v *= a;
    out.dt = wf.dt * units.t0;
    out.period = wf.period * units.t0;
    out.phase_slope = wf.phase_slope / units.t0;
    out.units = Units::Physical;
    return out;
}

Waveform to_dimensionless(const Waveform& wf, const UnitMap& units) {
    if (wf.units != Units::Physical) throw Error(ErrorCode::UnitMismatch, "waveform is already dimensionless");
    Waveform out = wf;
    const double a = 1.0 / std::sqrt(units.power());
    for (auto& v : out.samples) v *= a;
    out.dt = wf.dt / units.t0;
    out.period = wf.period / units.t0;
    out.phase_slope = wf.phase_slope * units.t0;
    out.units = Units::Dimensionless;
    return out;
}

namespace {

// Split-step stepper for dA/dZ = -(a/2) A - i (b2/2) A_TT + i g |A|^2 A on a
// periodic grid.
class Stepper {
public:
    Stepper(std::size_t n, double dt, double beta2, double gamma, double alpha)
        : fft_(n, n >= 4096), gamma_(gamma), alpha_(alpha), omega2_(n) {
        for (std::size_t k = 0; k < n; ++k) {
            const double w = fft_frequency(k, n, dt);
            omega2_[k] = 0.5 * beta2 * w * w;
        }
    }

    // Symmetric steps of length h; `count` steps in a row share the half-step
    // linear operators between neighbours.
    void run(CVector& a, double h, int count, double max_phase) {
        const std::size_t n = a.size();
        CVector half(n);
        CVector full(n);
        for (std::size_t k = 0; k < n; ++k) {
            half[k] = std::exp(Complex(-0.25 * alpha_ * h, 0.5 * omega2_[k] * h));
            full[k] = half[k] * half[k];
        }
        fft_.forward(a);
        for (std::size_t k = 0; k < n; ++k) a[k] *= half[k];
        for (int s = 0; s < count; ++s) {
            fft_.inverse(a);
            double peak = 0.0;
            for (auto& v : a) {
                const double p = std::norm(v);
                peak = std::max(peak, p);
                v *= std::polar(1.0, gamma_ * p * h);
            }
            if (gamma_ * peak * h > max_phase) {
                throw Error(ErrorCode::StepTooCoarse, "nonlinear phase per step " + std::to_string(gamma_ * peak * h) + " rad");
            }
            fft_.forward(a);
            const CVector& lin = (s + 1 == count) ? half : full;
            for (std::size_t k = 0; k < n; ++k) a[k] *= lin[k];
        }
        fft_.inverse(a);
    }

private:
    Fft fft_;
    double gamma_;
    double alpha_;
    std::vector<double> omega2_;
};

}  // namespace

CVector propagate_dimensionless(const CVector& q, double dt, double distance, int steps) {
    if (steps < 1) throw Error(ErrorCode::InvalidArgument, "need at least one step");
    CVector a(q);
    if (distance == 0.0) return a;
    // beta2 = -2 and gamma = 2 turn the physical operator into the dimensionless one.
    Stepper st(a.size(), dt, -2.0, 2.0, 0.0);
    st.run(a, distance / steps, steps, std::numeric_limits<double>::infinity());
    return a;
}

Waveform propagate(const Waveform& wf, const LinkConfig& link, std::uint64_t rng_seed, const SpanObserver& observer) {
    link.validate();
    if (wf.units != Units::Physical) throw Error(ErrorCode::UnitMismatch, "propagation expects a physical waveform");
    Waveform out = wf;
    const std::size_t n = wf.size();
    if (n == 0) return out;
    const bool effective = link.effective_model;
    const double alpha = (link.loss_on && !effective) ? link.alpha_per_km() : 0.0;
    const double gamma = effective ? gamma_eff(link) : link.gamma_nl;
    Stepper stepper(n, wf.dt, link.beta2, gamma, alpha);
    const int steps = static_cast<int>(std::ceil(link.span_km / link.step_km - 1e-9));
    const double h = link.span_km / steps;

    const double gain = std::exp(alpha * link.span_km);
    const double fs = 1e12 / wf.dt;
    const double per_quadrature = (gain - 1.0) * kPlanck * link.carrier_frequency_hz() *
                                  std::pow(10.0, link.noise_figure_db / 10.0) / 2.0 * fs;
    const bool add_noise = link.noise_on && !effective && gain > 1.0;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(per_quadrature));
    const double amp = std::sqrt(gain);

    for (int span = 1; span <= link.n_spans; ++span) {
        stepper.run(out.samples, h, steps, link.max_nonlinear_phase);
        if (alpha > 0.0) {
            for (auto& v : out.samples) v *= amp;
        }
        if (add_noise) {
            for (auto& v : out.samples) {
                const double re = normal(rng);
                const double im = normal(rng);
                v += Complex(re, im);
            }
        }
        if (observer && !observer(span, span * link.span_km, out)) break;
    }
    return out;
}

double dispersion_broadening(double bandwidth_hz, double distance_km, double beta2) {
    if (bandwidth_hz < 0.0 || distance_km < 0.0) throw Error(ErrorCode::InvalidArgument, "bandwidth and distance must be non-negative");
    return 2.0 * kPi * std::abs(beta2) * 1e-24 * distance_km * bandwidth_hz;
}

double occupied_bandwidth(const Waveform& wf, double fraction) {
    const std::size_t n = wf.size();
    if (n == 0) return 0.0;
    CVector spec(wf.samples);
    Fft(n).forward(spec);
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = std::norm(spec[k]);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (!(total > 0.0)) return 0.0;
    // Grow a band [lo, hi] of bins around the power centroid until it holds
    // the requested share.
    std::vector<long> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = (k <= n / 2) ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
    double centroid = 0.0;
    for (std::size_t k = 0; k < n; ++k) centroid += p[k] * static_cast<double>(order[k]);
    centroid /= total;
    const long c = std::lround(centroid);
    auto power_at = [&](long bin) {
        long k = bin % static_cast<long>(n);
        if (k < 0) k += static_cast<long>(n);
        return p[static_cast<std::size_t>(k)];
    };
    double acc = power_at(c);
    long lo = c;
    long hi = c;
    while (acc < fraction * total && hi - lo + 1 < static_cast<long>(n)) {
        const double left = power_at(lo - 1);
        const double right = power_at(hi + 1);
        if (left >= right) {
            acc += left;
            --lo;
        } else {
            acc += right;
            ++hi;
        }
    }
    const double df = 1.0 / (static_cast<double>(n) * wf.dt);
    const double width = static_cast<double>(hi - lo + 1) * df;
    return wf.units == Units::Physical ? width * 1e12 : width;
}

}  // namespace pnft::channel
