#include <doctest.h>

#include <random>

#include "pnft/channel.hpp"
#include "pnft/fgsynth.hpp"
#include "pnft/zs_spectrum.hpp"
#include "support.hpp"

using namespace pnft;

namespace {

Waveform constant(Complex q0, double period, std::size_t n) {
    Waveform w;
    w.dt = period / static_cast<double>(n);
    w.period = period;
    w.samples.assign(n, q0);
    return w;
}

Waveform sech(double amp, double half_width, std::size_t n) {
    Waveform w;
    w.dt = 2.0 * half_width / static_cast<double>(n);
    w.period = 2.0 * half_width;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = -half_width + (static_cast<double>(i) + 0.5) * w.dt;
        w.samples.push_back(amp / std::cosh(t));
    }
    return w;
}

// One period of a symmetric genus-2 solution, strictly periodic.
Waveform periodic_symbol(int n) {
    auto p = fgsynth::force_frequency_zero(testing::params_for(CVector{{-0.4, 0.45}, {0.0, 1.0}, {0.4, 0.45}}), 0);
    const double period = fgsynth::quasi_period(p);
    const Waveform w = fgsynth::synthesize(p, n, period, 0.0);
    return zs::dealias_with_phase(w, w.phase_slope * w.period).periodic;
}

}  // namespace

TEST_CASE("constant potential discriminant") {
    const double a = 0.8;
    const double period = 1.3;
    const Waveform w = constant(std::polar(a, 0.4), period, 64);
    for (Complex lam : {Complex(0.0, 0.0), Complex(0.7, 0.0), Complex(0.3, 0.5), Complex(-1.1, 0.9), Complex(0.0, 0.79)}) {
        const Complex expected = std::cos(period * std::sqrt(lam * lam + a * a));
        CHECK(std::abs(zs::monodromy(w, lam).half_trace() - expected) < 1e-6);
    }
}

TEST_CASE("free equation") {
    const Waveform w = constant(0.0, 2.0, 32);
    for (Complex lam : {Complex(0.4, 0.0), Complex(-0.3, 0.6)}) {
        CHECK(std::abs(zs::discriminant(w.samples, w.dt, lam) - std::cos(lam * 2.0)) < 1e-12);
    }
}

TEST_CASE("monodromy is unimodular") {
    const Waveform w = periodic_symbol(128);
    for (double re = -2.0; re <= 2.0; re += 0.5) {
        for (double im = 0.05; im <= 2.0; im += 0.4) {
            CHECK(std::abs(zs::monodromy(w, Complex(re, im)).matrix.determinant() - 1.0) < 1e-8);
        }
    }
}

TEST_CASE("discretization is second order") {
    auto p = fgsynth::force_frequency_zero(testing::params_for(CVector{{-0.4, 0.45}, {0.0, 1.0}, {0.4, 0.45}}), 0);
    const double period = fgsynth::quasi_period(p);
    const Complex lam(0.3, 0.6);
    const Complex ref = zs::discriminant(fgsynth::synthesize(p, 4096, period, 0.0).samples, period / 4096, lam);
    const double e1 = std::abs(zs::discriminant(fgsynth::synthesize(p, 64, period, 0.0).samples, period / 64, lam) - ref);
    const double e2 = std::abs(zs::discriminant(fgsynth::synthesize(p, 128, period, 0.0).samples, period / 128, lam) - ref);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
}

TEST_CASE("conjugate symmetry of the discriminant") {
    const Waveform w = periodic_symbol(64);
    for (Complex lam : {Complex(0.3, 0.2), Complex(-0.8, 1.1)}) {
        const Complex up = zs::discriminant(w.samples, w.dt, lam);
        const Complex down = zs::discriminant(w.samples, w.dt, std::conj(lam));
        CHECK(std::abs(down - std::conj(up)) < 1e-10 * std::max(1.0, std::abs(up)));
    }
}

TEST_CASE("plane wave main spectrum") {
    const double a = 0.9;
    // Short period keeps the other roots (double points) off the imaginary axis.
    const Waveform w = constant(a, 1.5, 64);
    const auto est = zs::main_spectrum(w, 1);
    REQUIRE(est.eigenvalues.size() == 1);
    CHECK(std::abs(est.eigenvalues[0] - Complex(0.0, a)) < 1e-6);
}

TEST_CASE("too few roots are reported") {
    const Waveform w = constant(0.9, 1.5, 64);
    try {
        zs::main_spectrum(w, 3);
        FAIL("missing roots not reported");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientRoots);
    }
}

TEST_CASE("soliton content of sech potentials") {
    const auto one = zs::soliton_content(sech(1.0, 20.0, 2048));
    REQUIRE(one.discrete_points.size() == 1);
    CHECK(std::abs(one.discrete_points[0] - Complex(0.0, 0.5)) < 1e-3);
    CHECK(std::abs(one.energy_fraction - 1.0) < 1e-3);

    const auto weak = zs::soliton_content(sech(0.4, 20.0, 2048));
    CHECK(weak.discrete_points.empty());
    CHECK(weak.energy_fraction == 0.0);
}

TEST_CASE("scattering coefficient of a sech potential") {
    const Waveform w = sech(1.0, 20.0, 4096);
    // a(lambda) = (lambda - i/2) / (lambda + i/2) for the fundamental soliton.
    for (Complex lam : {Complex(0.3, 0.2), Complex(-0.5, 0.8)}) {
        const Complex expected = (lam - 0.5 * kI) / (lam + 0.5 * kI);
        CHECK(std::abs(zs::scattering_a(w.samples, w.dt, lam) - expected) < 1e-4);
    }
}

TEST_CASE("dealiasing") {
    const Waveform base = periodic_symbol(64);
    SUBCASE("periodic input has no shift") {
        CHECK(std::abs(zs::dealias_quasi_periodic(base).shift) < 1e-6);
    }
    SUBCASE("known rotation is recovered") {
        for (double phi0 : {-2.5, -0.7, 0.3, 1.9}) {
            Waveform w = base;
            for (std::size_t i = 0; i < w.size(); ++i) {
                w.samples[i] *= std::polar(1.0, phi0 * static_cast<double>(i) / static_cast<double>(w.size()));
            }
            CHECK(std::abs(zs::dealias_quasi_periodic(w).shift + phi0 / (2.0 * w.period)) < 1e-6);
        }
    }
    SUBCASE("rotation beyond pi aliases by pi / T") {
        const double phi0 = kPi + 0.1;
        Waveform w = base;
        for (std::size_t i = 0; i < w.size(); ++i) {
            w.samples[i] *= std::polar(1.0, phi0 * static_cast<double>(i) / static_cast<double>(w.size()));
        }
        const double got = zs::dealias_quasi_periodic(w).shift;
        CHECK(std::abs(got - (-(phi0 - 2.0 * kPi) / (2.0 * w.period))) < 1e-6);
    }
    SUBCASE("zero start amplitude") {
        Waveform w = base;
        w.samples[0] = 0.0;
        try {
            zs::dealias_quasi_periodic(w);
            FAIL("undefined phase accepted");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::PhaseUndefined);
        }
    }
}

TEST_CASE("shift and scaling equivariance of the forward transform") {
    const auto& c = testing::default_constellation();
    for (std::size_t i = 0; i < c.symbols.size(); ++i) {
        const Waveform w = fgsynth::symbol_waveform(c, i, 64);
        const auto ref = zs::recover_spectrum(w, 3, 1024);

        // q exp(-2 i L t) has spectrum lambda + L.
        const double lam = 0.05;
        Waveform shifted = w;
        for (std::size_t k = 0; k < w.size(); ++k) shifted.samples[k] *= std::polar(1.0, -2.0 * lam * static_cast<double>(k) * w.dt);
        CVector expected;
        for (auto z : ref.eigenvalues) expected.push_back(z + lam);
        CHECK(algcurve::spectrum_distance(zs::recover_spectrum(shifted, 3, 1024).eigenvalues, expected) < 1e-4);

        // s q(s t) has spectrum s lambda.
        const double s = 1.6;
        Waveform scaled = w;
        scaled.dt = w.dt / s;
        scaled.period = w.period / s;
        for (auto& v : scaled.samples) v *= s;
        CVector expected2;
        for (auto z : ref.eigenvalues) expected2.push_back(s * z);
        CHECK(algcurve::spectrum_distance(zs::recover_spectrum(scaled, 3, 1024).eigenvalues, expected2) < 1e-4);
    }
}

TEST_CASE("main spectrum is invariant under lossless propagation") {
    const Waveform w = periodic_symbol(256);
    const auto before = zs::main_spectrum(w, 3);
    Waveform after = w;
    after.samples = channel::propagate_dimensionless(w.samples, w.dt, 10.0, 20000);
    const auto est = zs::main_spectrum(after, 3);
    CHECK(algcurve::spectrum_distance(est.eigenvalues, before.eigenvalues) < 1e-3);
}

TEST_CASE("upsampling is band-limited interpolation") {
    const Waveform w = periodic_symbol(32);
    const Waveform up = zs::upsample(w, 256);
    const Waveform fine = periodic_symbol(256);
    CHECK(testing::max_abs_diff(up.samples, fine.samples) < 1e-6);
}

TEST_CASE("noisy symbol still decodes to its reference") {
    const auto& c = testing::default_constellation();
    std::mt19937_64 rng(17);
    for (std::size_t s = 0; s < c.symbols.size(); ++s) {
        const Waveform w = fgsynth::symbol_waveform(c, s, c.samples_per_period);
        // Complex white noise at 20 dB SNR over the sampled band.
        const double sigma = std::sqrt(mean_power(w.samples) * 0.01 / 2.0);
        std::normal_distribution<double> nd(0.0, sigma);
        for (int trial = 0; trial < 5; ++trial) {
            Waveform noisy = w;
            for (auto& v : noisy.samples) v += Complex(nd(rng), nd(rng));
            const auto est = zs::recover_spectrum(noisy, 3, 256);
            double best = 1e300;
            std::size_t arg = 0;
            for (std::size_t k = 0; k < c.symbols.size(); ++k) {
                const double m = fgsynth::spectrum_metric(c.symbols[k].reference_spectrum.points(), est.eigenvalues);
                if (m < best) {
                    best = m;
                    arg = k;
                }
            }
            CHECK(arg == s);
        }
    }
}
