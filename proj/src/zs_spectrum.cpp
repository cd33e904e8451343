#include "pnft/zs_spectrum.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "pnft/fft.hpp"

namespace pnft::zs {

namespace {

// 2x2 product accumulator written out by hand; this loop dominates the cost of
// every spectral computation.
struct Mat2 {
    Complex a{1.0, 0.0}, b{0.0, 0.0}, c{0.0, 0.0}, d{1.0, 0.0};
};

inline Mat2 mul(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

inline Mat2 add(const Mat2& x, const Mat2& y) { return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d}; }

// exp(h [[-i l, -q], [conj q, i l]]) = cosh(k h) I + sinh(k h)/k M with
// k^2 = -l^2 - |q|^2; with `deriv` also its derivative in l.
template <bool deriv>
inline void layer(Complex lambda, Complex q, double h, Mat2& e, Mat2& de) {
    const Complex k2 = -lambda * lambda - std::norm(q);
    const Complex kappa = std::sqrt(k2);
    const Complex x = kappa * h;
    Complex ch;
    Complex sh;  // sinh(k h) / k
    Complex rest;  // (h cosh(k h) - sinh(k h)/k) / k^2
    if (std::abs(x) < 1e-2) {
        const Complex x2 = x * x;
        ch = 1.0 + x2 * (0.5 + x2 * (1.0 / 24.0 + x2 * (1.0 / 720.0 + x2 / 40320.0)));
        sh = h * (1.0 + x2 * (1.0 / 6.0 + x2 * (1.0 / 120.0 + x2 * (1.0 / 5040.0 + x2 / 362880.0))));
        if constexpr (deriv) {
            rest = h * h * h * (1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (1.0 / 840.0 + x2 / 45360.0)));
        }
    } else {
        const Complex ex = std::exp(x);
        const Complex ei = 1.0 / ex;
        ch = 0.5 * (ex + ei);
        sh = 0.5 * (ex - ei) / kappa;
        if constexpr (deriv) rest = (h * ch - sh) / k2;
    }
    const Complex il = kI * lambda * sh;
    e = {ch - il, -q * sh, std::conj(q) * sh, ch + il};
    if constexpr (deriv) {
        const Complex dch = -lambda * h * sh;
        const Complex dsh = -lambda * rest;
        const Complex dil = kI * (sh + lambda * dsh);
        de = {dch - dil, -q * dsh, std::conj(q) * dsh, dch + dil};
    }
}

Mat2 transfer(const Complex* q, std::size_t n, double dt, Complex lambda) {
    Mat2 m;
    Mat2 e;
    Mat2 unused;
    for (std::size_t i = 0; i < n; ++i) {
        layer<false>(lambda, q[i], dt, e, unused);
        m = mul(e, m);
    }
    return m;
}

// Transfer matrix and its derivative in lambda.
std::pair<Mat2, Mat2> transfer_with_derivative(const Complex* q, std::size_t n, double dt, Complex lambda) {
    Mat2 m;
    Mat2 dm{0.0, 0.0, 0.0, 0.0};
    Mat2 e;
    Mat2 de;
    for (std::size_t i = 0; i < n; ++i) {
        layer<true>(lambda, q[i], dt, e, de);
        dm = add(mul(de, m), mul(e, dm));
        m = mul(e, m);
    }
    return {m, dm};
}

double waveform_scale(const CVector& q, const SearchOptions& opts) {
    if (opts.scale > 0.0) return opts.scale;
    const double peak = peak_amplitude(q);
    return peak > 0.0 ? peak : 1.0;
}

struct Root {
    Complex lambda;
    double residual;
};

// Newton iteration from each seed; `fd` returns the function value and its
// derivative. Iterates that converge only linearly (step ratio near 1/2) are
// approaching a multiple root and are abandoned, as are those that run into a
// root already found. `simple` decides whether a converged point is kept.
template <class FD, class S>
std::vector<Root> newton_roots(FD&& fd, S&& simple, const std::vector<Complex>& seeds, double scale,
                               const SearchOptions& opts) {
    std::vector<Root> roots;
    const double merge = opts.dedupe * scale;
    int settled = 0;
    for (const Complex& seed : seeds) {
        Complex lam = seed;
        bool ok = false;
        bool dropped = false;
        double prev_len = 0.0;
        int linear = 0;
        for (int it = 0; it < opts.max_iterations; ++it) {
            const auto [f0, fp] = fd(lam);
            if (fp == Complex{0.0, 0.0} || !std::isfinite(std::abs(fp))) break;
            Complex step = f0 / fp;
            const double len = std::abs(step);
            if (!std::isfinite(len)) break;
            if (len > 0.5 * scale) step *= 0.5 * scale / len;
            lam -= step;
            if (lam.imag() < -0.25 * scale || std::abs(lam) > 20.0 * scale) break;
            if (len < opts.newton_tol * scale) {
                ok = true;
                break;
            }
            const double ratio = prev_len > 0.0 ? len / prev_len : 0.0;
            linear = (ratio > 0.3 && ratio < 0.7 && len < 1e-2 * scale) ? linear + 1 : 0;
            prev_len = len;
            if (linear >= 4) {
                dropped = true;
                break;
            }
            if (it >= 2 && len < 1e-4 * scale) {
                for (const Root& r : roots) {
                    if (std::abs(r.lambda - lam) < 1e-4 * scale) dropped = true;
                }
                if (dropped) break;
            }
        }
        if (dropped) {
            ++settled;
            continue;
        }
        if (!ok) continue;
        ++settled;
        if (!(lam.imag() > 0.0)) continue;
        bool dup = false;
        for (const Root& r : roots) {
            if (std::abs(r.lambda - lam) < merge) dup = true;
        }
        const auto [fv, fpv] = fd(lam);
        if (dup || !simple(fpv)) continue;
        roots.push_back({lam, std::abs(fv)});
    }
    if (settled == 0 && !seeds.empty()) {
        throw Error(ErrorCode::NoConvergence, "Newton iteration failed from every seed");
    }
    return roots;
}

std::vector<Complex> seed_grid(double scale, const SearchOptions& opts) {
    std::vector<Complex> seeds(opts.extra_seeds.begin(), opts.extra_seeds.end());
    for (int j = opts.grid_im; j >= 1; --j) {
        const double im = opts.im_extent * scale * j / opts.grid_im;
        for (int i = 0; i < opts.grid_re; ++i) {
            const double re = opts.grid_re == 1
                                  ? 0.0
                                  : opts.re_extent * scale * (-1.0 + 2.0 * i / (opts.grid_re - 1));
            seeds.emplace_back(re, im);
        }
    }
    return seeds;
}

CVector period_of(const Waveform& wf) {
    const std::size_t n = wf.period_samples();
    if (n == 0 || n > wf.size()) throw Error(ErrorCode::InvalidArgument, "waveform does not hold a full period");
    return CVector(wf.samples.begin(), wf.samples.begin() + static_cast<long>(n));
}

std::vector<Root> main_roots(const CVector& q, double dt, const SearchOptions& opts) {
    const double scale = waveform_scale(q, opts);
    const double T = dt * static_cast<double>(q.size());
    auto fd = [&](Complex lam) {
        const auto [m, dm] = transfer_with_derivative(q.data(), q.size(), dt, lam);
        const Complex d = 0.5 * (m.a + m.d);
        const Complex dd = 0.5 * (dm.a + dm.d);
        return std::pair<Complex, Complex>(d * d - 1.0, 2.0 * d * dd);
    };
    // At a degenerate point Delta^2 - 1 has a double zero and a vanishing
    // derivative; the reference slope is that of a plane wave of amplitude `scale`.
    auto simple = [&](Complex fp) { return std::abs(fp) > 1e-4 * T * T * scale; };
    return newton_roots(fd, simple, seed_grid(scale, opts), scale, opts);
}

}  // namespace

Complex discriminant(const CVector& q, double dt, Complex lambda) {
    const Mat2 m = transfer(q.data(), q.size(), dt, lambda);
    return 0.5 * (m.a + m.d);
}

Complex scattering_a(const CVector& q, double dt, Complex lambda) {
    const Mat2 m = transfer(q.data(), q.size(), dt, lambda);
    return m.a * std::exp(kI * lambda * (dt * static_cast<double>(q.size())));
}

Monodromy monodromy(const Waveform& wf, Complex lambda) {
    const CVector q = period_of(wf);
    const Mat2 m = transfer(q.data(), q.size(), wf.dt, lambda);
    Monodromy out;
    out.matrix << m.a, m.b, m.c, m.d;
    out.lambda = lambda;
    return out;
}

CVector all_roots(const Waveform& wf, const SearchOptions& opts) {
    const CVector q = period_of(wf);
    CVector out;
    for (const Root& r : main_roots(q, wf.dt, opts)) out.push_back(r.lambda);
    return out;
}

SpectrumEstimate main_spectrum(const Waveform& wf, int expected_count, const SearchOptions& opts) {
    if (expected_count < 1) throw Error(ErrorCode::InvalidArgument, "expected_count must be positive");
    const CVector q = period_of(wf);
    std::vector<Root> roots = main_roots(q, wf.dt, opts);
    std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) { return a.lambda.imag() > b.lambda.imag(); });
    SpectrumEstimate est;
    std::vector<Root> kept;
    for (const Root& r : roots) {
        if (r.lambda.imag() < opts.spurious_threshold || static_cast<int>(kept.size()) == expected_count) {
            ++est.spurious_removed;
        } else {
            kept.push_back(r);
        }
    }
    if (static_cast<int>(kept.size()) < expected_count) {
        throw Error(ErrorCode::InsufficientRoots, "found " + std::to_string(kept.size()) + " of " +
                                                      std::to_string(expected_count) + " main spectrum points");
    }
    std::sort(kept.begin(), kept.end(), [](const Root& a, const Root& b) {
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
        return a.lambda.imag() < b.lambda.imag();
    });
    for (const Root& r : kept) {
        est.eigenvalues.push_back(r.lambda);
        est.residuals.push_back(r.residual);
    }
    return est;
}

Dealiased dealias_with_phase(const Waveform& wf, double phi) {
    const std::size_t n = wf.period_samples();
    if (n == 0 || n > wf.size()) throw Error(ErrorCode::InvalidArgument, "waveform does not hold a full period");
    Dealiased out;
    out.periodic = wf;
    out.periodic.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.periodic.samples[i] *= std::polar(1.0, -phi * static_cast<double>(i) / static_cast<double>(n));
    }
    out.periodic.phase_slope = 0.0;
    out.shift = -phi / (2.0 * wf.period);
    return out;
}

Dealiased dealias_quasi_periodic(const Waveform& wf) {
    const std::size_t n = wf.period_samples();
    if (n < 3 || n > wf.size()) throw Error(ErrorCode::InvalidArgument, "waveform does not hold a full period");
    const CVector q(wf.samples.begin(), wf.samples.begin() + static_cast<long>(n));
    const double peak = peak_amplitude(q);
    if (std::abs(q[0]) < 1e-6 * peak) throw Error(ErrorCode::PhaseUndefined, "start amplitude too small to fix the phase");
    const Complex end = 3.0 * q[n - 1] - 3.0 * q[n - 2] + q[n - 3];
    const double guess = std::arg(end / q[0]);
    if (n < 8) return dealias_with_phase(wf, guess);

    // A wrong phi leaves a jump at the period boundary whose energy leaks into
    // the upper half of the band; the leakage is minimal at the true phi.
    Fft fft(n);
    const std::size_t edge = n / 4;
    auto leakage = [&](double phi) {
        CVector x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = q[i] * std::polar(1.0, -phi * static_cast<double>(i) / static_cast<double>(n));
        fft.forward(x);
        double e = 0.0;
        for (std::size_t k = edge; k <= n - edge; ++k) e += std::norm(x[k]);
        return e;
    };
    const auto best = boost::math::tools::brent_find_minima(leakage, guess - 0.5, guess + 0.5, 40);
    double phi = std::remainder(best.first, 2.0 * kPi);
    if (phi <= -kPi) phi += 2.0 * kPi;
    return dealias_with_phase(wf, phi);
}

Waveform upsample(const Waveform& wf, std::size_t n) {
    const CVector q = period_of(wf);
    Waveform out = wf;
    out.samples = fourier_resample(q, std::max(n, q.size()));
    out.dt = wf.period / static_cast<double>(out.samples.size());
    return out;
}

SpectrumEstimate recover_spectrum(const Waveform& wf, int expected_count, std::size_t upsample_to,
                                  const SearchOptions& opts) {
    const Dealiased d = dealias_quasi_periodic(wf);
    const Waveform fine = upsample(d.periodic, upsample_to);
    SearchOptions local = opts;
    for (auto& s : local.extra_seeds) s -= d.shift;
    SpectrumEstimate est = main_spectrum(fine, expected_count, local);
    for (auto& v : est.eigenvalues) v += d.shift;
    return est;
}

SolitonContent soliton_content(const Waveform& wf, const SearchOptions& opts) {
    const CVector& q = wf.samples;
    if (q.empty() || !(wf.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "empty waveform");
    const double scale = waveform_scale(q, opts);
    const double L = wf.dt * static_cast<double>(q.size());
    auto fd = [&](Complex lam) {
        const auto [m, dm] = transfer_with_derivative(q.data(), q.size(), wf.dt, lam);
        const Complex ph = std::exp(kI * lam * L);
        return std::pair<Complex, Complex>(m.a * ph, (dm.a + kI * L * m.a) * ph);
    };
    auto simple = [](Complex) { return true; };
    // Unlike the periodic discriminant, a(lambda) may have no zeros at all.
    std::vector<Root> roots;
    try {
        roots = newton_roots(fd, simple, seed_grid(scale, opts), scale, opts);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoConvergence) throw;
    }
    SolitonContent out;
    double discrete = 0.0;
    for (const Root& r : roots) {
        if (r.lambda.imag() < opts.spurious_threshold) continue;
        out.discrete_points.push_back(r.lambda);
        discrete += 4.0 * r.lambda.imag();
    }
    double energy = 0.0;
    for (const Complex& v : q) energy += std::norm(v);
    energy *= wf.dt;
    out.energy_fraction = energy > 0.0 ? discrete / energy : 0.0;
    std::sort(out.discrete_points.begin(), out.discrete_points.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return out;
}

}  // namespace pnft::zs
