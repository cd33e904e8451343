#include "pnft/fgsynth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "pnft/channel.hpp"
#include "pnft/fft.hpp"
#include "pnft/theta.hpp"
#include "pnft/zs_spectrum.hpp"

namespace pnft::fgsynth {

using algcurve::CVec;
using algcurve::RVec;

namespace {

double wrap_phase(double phi) {
    phi = std::remainder(phi, 2.0 * kPi);
    if (phi <= -kPi) phi += 2.0 * kPi;
    return phi;
}

long gcd_long(long a, long b) { return b == 0 ? std::abs(a) : gcd_long(b, a % b); }

// Best continued-fraction approximation p/q of x >= 0 with q <= bound that
// lies within tol; returns q, or 0 if none does.
long rational_denominator(double x, int bound, double tol) {
    long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double r = x;
    for (int it = 0; it < 64; ++it) {
        const double a = std::floor(r);
        const long ai = static_cast<long>(a);
        const long h2 = ai * h1 + h0;
        const long k2 = ai * k1 + k0;
        if (k2 > bound) return 0;
        if (std::abs(x - static_cast<double>(h2) / static_cast<double>(k2)) <= tol) return k2;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        const double frac = r - a;
        if (frac < 1e-15) return 0;
        r = 1.0 / frac;
    }
    return 0;
}

}  // namespace

Waveform synthesize(const ThetaParameters& p, int n_samples, double t_span, double z, double t_start) {
    algcurve::validate(p);
    if (n_samples < 2 || !(t_span > 0.0)) throw Error(ErrorCode::InvalidArgument, "need at least two samples over a positive span");
    const double wmax = p.omega.cwiseAbs().maxCoeff();
    if (2.0 * wmax * t_span / (2.0 * kPi) > n_samples) {
        throw Error(ErrorCode::InvalidArgument, "too few samples for the fastest theta frequency");
    }
    const double dt = t_span / n_samples;
    std::vector<double> t(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) t[static_cast<std::size_t>(i)] = t_start + i * dt;

    theta::RiemannTheta th(p.tau);
    const CVec kz = (p.kvec * z).cast<Complex>();
    const CVec base_den = (kz + p.delta_plus.cast<Complex>()) / (2.0 * kPi);
    const CVec base_num = (kz + p.delta_minus) / (2.0 * kPi);
    const RVec v = p.omega / (2.0 * kPi);
    const CVector lden = th.log_line(base_den, v, t);
    const CVector lnum = th.log_line(base_num, v, t, false);

    Waveform wf;
    wf.dt = dt;
    wf.units = Units::Dimensionless;
    wf.samples.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        wf.samples[i] = p.K0 * std::exp(lnum[i] - lden[i] + kI * (p.omega0 * t[i] + p.k0 * z));
    }
    wf.period = t_span;
    try {
        const double T = quasi_period(p);
        const double m = std::round(t_span / T);
        if (m >= 1.0 && std::abs(t_span - m * T) <= 0.5 * dt) wf.period = T;
    } catch (const Error&) {
    }
    wf.phase_slope = carrier_rotation(p, wf.period) / wf.period;
    return wf;
}

double nlse_residual(const ThetaParameters& p, const ResidualGrid& grid) {
    double T = grid.t_span;
    if (!(T > 0.0)) {
        try {
            T = quasi_period(p);
        } catch (const Error&) {
            const double wmax = p.omega.cwiseAbs().maxCoeff();
            T = wmax > 0.0 ? 2.0 * kPi / wmax : 2.0 * kPi;
        }
    }
    const int n = grid.n_samples;
    const double dt = T / n;
    const double h = grid.dz > 0.0 ? grid.dz : dt;
    const int m = n + 4;
    auto level = [&](double z) { return synthesize(p, m, m * dt, z, -2.0 * dt).samples; };
    const CVector q0 = level(grid.z);
    const CVector zp1 = level(grid.z + h);
    const CVector zm1 = level(grid.z - h);
    const CVector zp2 = level(grid.z + 2.0 * h);
    const CVector zm2 = level(grid.z - 2.0 * h);
    double worst = 0.0;
    double peak = 0.0;
    for (int i = 2; i < n + 2; ++i) {
        const auto u = static_cast<std::size_t>(i);
        const Complex qtt = (-q0[u + 2] + 16.0 * q0[u + 1] - 30.0 * q0[u] + 16.0 * q0[u - 1] - q0[u - 2]) / (12.0 * dt * dt);
        const Complex qz = (-zp2[u] + 8.0 * zp1[u] - 8.0 * zm1[u] + zm2[u]) / (12.0 * h);
        const Complex r = kI * qz + qtt + 2.0 * std::norm(q0[u]) * q0[u];
        worst = std::max(worst, std::abs(r));
        peak = std::max(peak, std::abs(q0[u]));
    }
    return peak > 0.0 ? worst / peak : worst;
}

double quasi_period(const ThetaParameters& p, int denom_bound) {
    if (denom_bound < 1) throw Error(ErrorCode::InvalidArgument, "denominator bound must be positive");
    int ref = -1;
    for (int j = 0; j < p.omega.size(); ++j) {
        if (p.omega(j) != 0.0 && (ref < 0 || std::abs(p.omega(j)) > std::abs(p.omega(ref)))) ref = j;
    }
    if (ref < 0) throw Error(ErrorCode::InvalidArgument, "all frequencies vanish");
    long lcm = 1;
    for (int j = 0; j < p.omega.size(); ++j) {
        if (j == ref || p.omega(j) == 0.0) continue;
        const double ratio = std::abs(p.omega(j) / p.omega(ref));
        const long q = rational_denominator(ratio, denom_bound, 1e-6);
        if (q == 0) throw Error(ErrorCode::Incommensurate, "frequency ratio has no rational approximation within the bound");
        lcm = lcm / gcd_long(lcm, q) * q;
    }
    return 2.0 * kPi * static_cast<double>(lcm) / std::abs(p.omega(ref));
}

int smallest_frequency(const ThetaParameters& p) {
    int best = -1;
    for (int j = 0; j < p.omega.size(); ++j) {
        if (p.omega(j) != 0.0 && (best < 0 || std::abs(p.omega(j)) < std::abs(p.omega(best)))) best = j;
    }
    return best;
}

ThetaParameters force_frequency_zero(const ThetaParameters& p, int j) {
    if (j < 0 || j >= p.omega.size()) throw Error(ErrorCode::InvalidArgument, "frequency index out of range");
    ThetaParameters out = p;
    out.omega(j) = 0.0;
    return out;
}

ThetaParameters scale_params(const ThetaParameters& p, double s) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale factor must be positive");
    ThetaParameters out = p;
    out.omega *= s;
    out.omega0 *= s;
    out.K0 *= s;
    out.kvec *= s * s;
    out.k0 *= s * s;
    return out;
}

ThetaParameters shift_spectrum(const ThetaParameters& p, double shift) {
    ThetaParameters out = p;
    out.kvec = p.kvec + 4.0 * shift * p.omega;
    out.k0 = p.k0 + 4.0 * shift * p.omega0 - 4.0 * shift * shift;
    out.omega0 = p.omega0 - 2.0 * shift;
    return out;
}

double carrier_rotation(const ThetaParameters& p, double period) { return wrap_phase(p.omega0 * period); }

double estimate_group_velocity(const Waveform& wf, double probe_distance, int n_probes) {
    if (!(probe_distance > 0.0) || n_probes < 1) throw Error(ErrorCode::InvalidArgument, "probe distance and count must be positive");
    const double phi = wf.phase_slope * wf.period;
    const zs::Dealiased d = zs::dealias_with_phase(wf, phi);
    const Waveform fine = zs::upsample(d.periodic, std::max<std::size_t>(256, d.periodic.size()));
    const std::size_t n = fine.size();
    const double dt = fine.dt;

    auto centered_amplitude = [](const CVector& q) {
        CVector a(q.size());
        double mean = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) mean += std::abs(q[i]);
        mean /= static_cast<double>(q.size());
        double spread = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            a[i] = std::abs(q[i]) - mean;
            spread = std::max(spread, std::abs(a[i].real()));
        }
        return std::make_pair(a, spread / std::max(mean, 1e-300));
    };

    Fft fft(n);
    CVector q = fine.samples;
    auto [prev, contrast] = centered_amplitude(q);
    if (contrast < 1e-9) return 2.0 * phi / wf.period;
    fft.forward(prev);

    // Steps keep the split-step phase error well below the tracking resolution.
    const int steps = std::max(8, static_cast<int>(std::ceil(probe_distance / (0.5 * dt * dt))));
    double displacement = 0.0;
    for (int leg = 0; leg < n_probes; ++leg) {
        q = channel::propagate_dimensionless(q, dt, probe_distance, std::min(steps, 4000));
        auto [cur, c2] = centered_amplitude(q);
        (void)c2;
        fft.forward(cur);
        CVector cc(n);
        for (std::size_t k = 0; k < n; ++k) cc[k] = std::conj(prev[k]) * cur[k];
        prev = cur;
        fft.inverse(cc);
        // Legs are short, so the pattern moves by less than a quarter window;
        // this also separates the true peak from aliases of symmetric profiles.
        const std::size_t reach = n / 4;
        auto in_window = [&](std::size_t k) { return k < reach || k > n - reach; };
        std::size_t best = 0;
        for (std::size_t k = 1; k < n; ++k) {
            if (in_window(k) && cc[k].real() > cc[best].real()) best = k;
        }
        const double peak = cc[best].real();
        for (std::size_t k = 0; k < n; ++k) {
            if (k == best || !in_window(k)) continue;
            const double l = cc[(k + n - 1) % n].real();
            const double r = cc[(k + 1) % n].real();
            const double c = cc[k].real();
            if (c >= l && c >= r && c >= 0.99 * peak) {
                throw Error(ErrorCode::AmbiguousDrift, "cross-correlation peak is not unique");
            }
        }
        const double l = cc[(best + n - 1) % n].real();
        const double r = cc[(best + 1) % n].real();
        const double den = l - 2.0 * peak + r;
        const double frac = den != 0.0 ? 0.5 * (l - r) / den : 0.0;
        double shift = static_cast<double>(best) + frac;
        if (shift > 0.5 * static_cast<double>(n)) shift -= static_cast<double>(n);
        displacement += shift * dt;
    }
    return displacement / (probe_distance * n_probes) + 2.0 * phi / wf.period;
}

StartSelection select_start(const Waveform& wf) {
    const std::size_t n = wf.period_samples();
    if (n < 3 || n > wf.size()) throw Error(ErrorCode::InvalidArgument, "waveform does not hold a full period");
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(wf.samples[i]) < std::abs(wf.samples[best])) best = i;
    }
    StartSelection out;
    out.offset = static_cast<int>(best);
    const double l = std::abs(wf.samples[(best + n - 1) % n]);
    const double c = std::abs(wf.samples[best]);
    const double r = std::abs(wf.samples[(best + 1) % n]);
    const double den = l - 2.0 * c + r;
    double fine = static_cast<double>(best) + (den > 0.0 ? 0.5 * (l - r) / den : 0.0);
    if (fine < 0.0) fine += static_cast<double>(n);
    out.fine_offset = fine;
    const Complex turn = std::polar(1.0, wf.phase_slope * wf.period);
    out.rotated = wf;
    out.rotated.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = i + best;
        out.rotated.samples[i] = src < n ? wf.samples[src] : wf.samples[src - n] * turn;
    }
    return out;
}

int Constellation::bits_per_symbol() const {
    int b = 0;
    while ((std::size_t{1} << b) < symbols.size()) ++b;
    return b;
}

int Constellation::find_label(const std::string& bits) const {
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (symbols[i].bits == bits) return static_cast<int>(i);
    }
    return -1;
}

double spectrum_metric(const CVector& a, const CVector& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "spectra differ in size");
    std::vector<std::size_t> perm(b.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[perm[i]]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

Waveform symbol_waveform(const Constellation& c, std::size_t index, int samples_per_period) {
    if (index >= c.symbols.size()) throw Error(ErrorCode::InvalidArgument, "symbol index out of range");
    const ConstellationSymbol& sym = c.symbols[index];
    const double t_start = sym.start_offset * c.period / c.samples_per_period;
    return synthesize(sym.params, samples_per_period, c.period, 0.0, t_start);
}

std::vector<MainSpectrum> default_seeds() {
    const Complex a{0.0, 1.0};
    const Complex b{0.0, 0.45};
    const Complex gammas[] = {{0.4, 0.0}, {0.28, 0.28}, {0.0, 0.4}, {-0.28, 0.28}};
    std::vector<MainSpectrum> out;
    for (const Complex& g : gammas) out.emplace_back(CVector{a, b + g, b - g});
    return out;
}

namespace {

std::string to_bits(std::size_t value, int width) {
    std::string s(static_cast<std::size_t>(width), '0');
    for (int i = 0; i < width; ++i) {
        if (value & (std::size_t{1} << (width - 1 - i))) s[static_cast<std::size_t>(i)] = '1';
    }
    return s;
}

// Labels with the first symbol fixed to all zeros. Among labelings whose
// closest pair differs in one bit, the one minimizing sum hamming / metric is kept.
std::vector<std::size_t> assign_labels(const std::vector<CVector>& spectra) {
    const std::size_t n = spectra.size();
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    std::size_t ci = 0, cj = 1;
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dist[i][j] = dist[j][i] = spectrum_metric(spectra[i], spectra[j]);
            if (dist[i][j] < closest) {
                closest = dist[i][j];
                ci = i;
                cj = j;
            }
        }
    }
    std::vector<std::size_t> labels(n);
    std::iota(labels.begin(), labels.end(), 0);
    std::vector<std::size_t> best = labels;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        if (labels[0] != 0) continue;
        if (n > 1 && std::popcount(labels[ci] ^ labels[cj]) != 1) continue;
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                cost += std::popcount(labels[i] ^ labels[j]) / std::max(dist[i][j], 1e-300);
            }
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = labels;
        }
    } while (std::next_permutation(labels.begin(), labels.end()));
    return best;
}

}  // namespace

Constellation design_constellation(const std::vector<MainSpectrum>& seeds, double target_period, double cp_fraction,
                                   const DesignOptions& opts) {
    const std::size_t n = seeds.size();
    if (n < 2 || (n & (n - 1)) != 0) throw Error(ErrorCode::InvalidArgument, "constellation size must be a power of two >= 2");
    if (!(target_period > 0.0)) throw Error(ErrorCode::InvalidArgument, "target period must be positive");
    if (!(cp_fraction >= 0.0 && cp_fraction < 1.0)) throw Error(ErrorCode::InvalidArgument, "cp fraction must lie in [0, 1)");

    Constellation c;
    c.period = target_period;
    c.cp_fraction = cp_fraction;
    c.samples_per_period = opts.samples_per_period;
    c.symbols.resize(n);

    auto tagged = [](std::size_t i, const Error& e) {
        return Error(e.code(), "symbol " + std::to_string(i) + ": " + e.what());
    };

    for (std::size_t i = 0; i < n; ++i) {
        try {
            ConstellationSymbol& sym = c.symbols[i];
            sym.seed_spectrum = seeds[i];
            ThetaParameters p = algcurve::theta_parameters(algcurve::build_curve(seeds[i]));
            const int nonzero = static_cast<int>((p.omega.array() != 0.0).count());
            if (nonzero >= 2) p = force_frequency_zero(p, smallest_frequency(p));
            const double T = quasi_period(p, opts.denom_bound);
            sym.params = scale_params(p, T / target_period);
        } catch (const Error& e) {
            throw tagged(i, e);
        }
    }

    const double tolerance = 0.02 * target_period / opts.spread_distance;
    std::vector<double> drift(n, 0.0);
    for (int it = 0; it <= opts.drift_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                const Waveform wf = synthesize(c.symbols[i].params, std::max(64, opts.samples_per_period), target_period, 0.0);
                drift[i] = estimate_group_velocity(wf, opts.probe_distance, opts.probe_legs);
            } catch (const Error& e) {
                throw tagged(i, e);
            }
        }
        const double mean = std::accumulate(drift.begin(), drift.end(), 0.0) / static_cast<double>(n);
        const auto [lo, hi] = std::minmax_element(drift.begin(), drift.end());
        c.group_velocity = mean;
        if (*hi - *lo < tolerance || it == opts.drift_iterations) break;
        // A shift by L moves the pattern by -4 L per unit distance.
        for (std::size_t i = 0; i < n; ++i) {
            c.symbols[i].params = shift_spectrum(c.symbols[i].params, (drift[i] - mean) / 4.0);
        }
    }

    std::vector<CVector> refs(n);
    for (std::size_t i = 0; i < n; ++i) {
        ConstellationSymbol& sym = c.symbols[i];
        sym.drift = drift[i];
        try {
            const Waveform coarse = synthesize(sym.params, opts.samples_per_period, target_period, 0.0);
            sym.start_offset = select_start(coarse).fine_offset;
            const double t_start = sym.start_offset * target_period / opts.samples_per_period;
            const Waveform fine = synthesize(sym.params, opts.reference_samples, target_period, 0.0, t_start);
            const zs::Dealiased d = zs::dealias_with_phase(fine, carrier_rotation(sym.params, target_period));
            zs::SearchOptions so;
            const int g = sym.params.genus;
            zs::SpectrumEstimate est = zs::main_spectrum(d.periodic, g + 1, so);
            for (auto& v : est.eigenvalues) v += d.shift;
            sym.reference_spectrum = MainSpectrum(est.eigenvalues, 0.0);
            refs[i] = sym.reference_spectrum.points();
        } catch (const Error& e) {
            throw tagged(i, e);
        }
    }
    const std::vector<std::size_t> labels = assign_labels(refs);
    const int width = c.bits_per_symbol();
    for (std::size_t i = 0; i < n; ++i) c.symbols[i].bits = to_bits(labels[i], width);
    return c;
}

}  // namespace pnft::fgsynth
