#include <doctest.h>

#include <bit>

#include "pnft/fgsynth.hpp"
#include "pnft/zs_spectrum.hpp"
#include "support.hpp"

using namespace pnft;
using namespace pnft::fgsynth;

namespace {

ThetaParameters with_frequencies(std::vector<double> w) {
    ThetaParameters p;
    p.genus = static_cast<int>(w.size());
    p.omega = Eigen::Map<Eigen::VectorXd>(w.data(), p.genus);
    p.kvec = Eigen::VectorXd::Zero(p.genus);
    p.tau = Eigen::MatrixXcd::Identity(p.genus, p.genus) * kI;
    p.delta_minus = Eigen::VectorXcd::Zero(p.genus);
    p.delta_plus = Eigen::VectorXd::Zero(p.genus);
    return p;
}

const CVector kSymmetric{{-0.4, 0.45}, {0.0, 1.0}, {0.4, 0.45}};
const CVector kSkewed{{-0.28, 0.17}, {0.0, 1.0}, {0.28, 0.73}};

}  // namespace

TEST_CASE("finite-gap waveforms solve the NLSE") {
    for (const CVector& pts : {kSymmetric, kSkewed, CVector{{0.0, 0.6}, {0.35, 1.0}},
                               CVector{{-0.3, 0.5}, {0.1, 0.9}, {0.5, 0.4}}}) {
        const auto p = testing::params_for(pts);
        ResidualGrid grid;
        grid.t_span = 4.0;
        grid.z = 0.3;
        CHECK(nlse_residual(p, grid) < 1e-4);
    }
}

TEST_CASE("certified parameters of every default seed solve the NLSE") {
    for (const auto& seed : default_seeds()) {
        const auto p = algcurve::theta_parameters(algcurve::build_curve(seed));
        CHECK(nlse_residual(p) < 1e-4);
    }
}

TEST_CASE("residual is sensitive to corrupted wavenumbers") {
    const auto p = testing::params_for(kSkewed);
    const double base = nlse_residual(p);
    auto q = p;
    q.kvec *= 1.01;
    CHECK(nlse_residual(q) > 10.0 * base);
}

TEST_CASE("quasi-period from commensurate frequencies") {
    CHECK(std::abs(quasi_period(with_frequencies({1.0, 2.0})) - 2.0 * kPi) < 1e-12);
    CHECK(std::abs(quasi_period(with_frequencies({0.0, 2.0})) - kPi) < 1e-12);
    CHECK(std::abs(quasi_period(with_frequencies({1.5, 2.5})) - 4.0 * kPi) < 1e-12);
    try {
        quasi_period(with_frequencies({1.0, std::sqrt(2.0)}));
        FAIL("incommensurate pair accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Incommensurate);
    }
}

TEST_CASE("forcing the smallest frequency to zero") {
    const auto p = with_frequencies({0.01, 5.3});
    CHECK(smallest_frequency(p) == 0);
    const auto q = force_frequency_zero(p, 0);
    CHECK(q.omega(0) == 0.0);
    CHECK(q.omega(1) == 5.3);
    const auto r = force_frequency_zero(q, 0);
    CHECK(r.omega == q.omega);
}

TEST_CASE("scaling covariance holds pointwise") {
    const auto p = testing::params_for(kSkewed);
    const double s = 2.0;
    const auto ps = scale_params(p, s);
    CHECK(scale_params(p, 1.0).omega == p.omega);
    const double span = 3.0;
    const Waveform a = synthesize(ps, 128, span / s, 0.05);
    const Waveform b = synthesize(p, 128, span, 4.0 * 0.05);
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a.samples[i] - s * b.samples[i]));
    CHECK(err < 1e-8);
}

TEST_CASE("scaling to a target period") {
    const auto p = force_frequency_zero(testing::params_for(kSymmetric), 0);
    const double t = quasi_period(p);
    const auto q = scale_params(p, t / 3.0);
    CHECK(std::abs(quasi_period(q) - 3.0) < 1e-12);
}

TEST_CASE("spectral shift moves the forward transform and the drift") {
    const auto base = force_frequency_zero(testing::params_for(kSymmetric), 0);
    const double period = quasi_period(base);
    const Waveform w0 = synthesize(base, 128, period, 0.0);
    const double shift = 0.07;
    const auto shifted = shift_spectrum(base, shift);
    CHECK(shift_spectrum(base, 0.0).omega0 == base.omega0);
    const Waveform w1 = synthesize(shifted, 128, period, 0.0);

    const auto s0 = zs::recover_spectrum(w0, 3, 1024);
    const auto s1 = zs::recover_spectrum(w1, 3, 1024);
    CVector expected;
    for (auto z : s0.eigenvalues) expected.push_back(z + shift);
    CHECK(algcurve::spectrum_distance(s1.eigenvalues, expected) < 1e-4);

    // The shift changes omega0 by -2 shift, a frequency offset that moves the
    // pattern by 2 (-2 shift) per unit distance.
    const double v0 = estimate_group_velocity(w0, 0.02, 5);
    const double v1 = estimate_group_velocity(w1, 0.02, 5);
    CHECK(std::abs((v1 - v0) - (-4.0 * shift)) < 0.02 * 4.0 * shift);
}

TEST_CASE("plane wave does not drift") {
    Waveform w;
    w.dt = 0.05;
    w.period = 3.2;
    w.samples.assign(64, Complex(0.8, 0.0));
    CHECK(estimate_group_velocity(w, 0.05) == 0.0);
}

TEST_CASE("group velocity estimate is deterministic") {
    const auto p = force_frequency_zero(testing::params_for(kSkewed), smallest_frequency(testing::params_for(kSkewed)));
    const double period = quasi_period(p);
    const Waveform w = synthesize(p, 64, period, 0.0);
    CHECK(estimate_group_velocity(w, 0.02, 3) == estimate_group_velocity(w, 0.02, 3));
}

TEST_CASE("start selection") {
    Waveform flat;
    flat.dt = 0.1;
    flat.period = 1.6;
    flat.samples.assign(16, Complex(1.0, 0.0));
    CHECK(select_start(flat).offset == 0);

    Waveform dip = flat;
    dip.samples[9] = Complex(0.2, 0.0);
    dip.samples[8] = Complex(0.6, 0.0);
    dip.samples[10] = Complex(0.6, 0.0);
    const auto sel = select_start(dip);
    CHECK(sel.offset == 9);
    CHECK(std::abs(sel.fine_offset - 9.0) < 1e-12);
    CHECK(sel.rotated.samples[0] == Complex(0.2, 0.0));
    CHECK(sel.rotated.samples[7] == dip.samples[0]);
}

TEST_CASE("spectrum metric is the best assignment of squared distances") {
    const CVector a{{0.0, 1.0}, {0.3, 0.4}, {-0.3, 0.4}};
    const CVector b{{-0.3, 0.4}, {0.0, 1.0}, {0.3, 0.5}};
    CHECK(std::abs(spectrum_metric(a, b) - 0.01) < 1e-12);
    CHECK(spectrum_metric(a, a) == 0.0);
}

TEST_CASE("two-symbol constellation") {
    const auto seeds = default_seeds();
    const Constellation c = design_constellation({seeds[0], seeds[1]}, 3.0, 0.5);
    REQUIRE(c.symbols.size() == 2);
    CHECK(c.bits_per_symbol() == 1);
    CHECK(c.symbols[0].bits == "0");
    CHECK(c.symbols[1].bits == "1");
    for (const auto& s : c.symbols) CHECK(std::abs(quasi_period(s.params) - 3.0) / 3.0 < 1e-9);
}

TEST_CASE("constellation size must be a power of two") {
    const auto seeds = default_seeds();
    CHECK_THROWS_AS(design_constellation({seeds[0], seeds[1], seeds[2]}, 3.0, 0.5), Error);
}

TEST_CASE("designed constellation properties") {
    const Constellation& c = testing::default_constellation();
    REQUIRE(c.symbols.size() == 4);

    SUBCASE("common period") {
        for (const auto& s : c.symbols) CHECK(std::abs(quasi_period(s.params) - c.period) / c.period < 1e-9);
    }
    SUBCASE("drift spread below 2% of the period per 0.4 distance units") {
        double lo = 1e300, hi = -1e300;
        for (const auto& s : c.symbols) {
            lo = std::min(lo, s.drift);
            hi = std::max(hi, s.drift);
        }
        CHECK((hi - lo) * 0.4 < 0.02 * c.period);
    }
    SUBCASE("round trip of every stored symbol") {
        for (std::size_t i = 0; i < c.symbols.size(); ++i) {
            const Waveform w = symbol_waveform(c, i, c.samples_per_period);
            const auto est = zs::recover_spectrum(w, 3, 1024);
            CHECK(algcurve::spectrum_distance(est.eigenvalues, c.symbols[i].reference_spectrum.points()) < 1e-3);
        }
    }
    SUBCASE("symmetric symbol keeps an exact solution") {
        // Its small frequency is zero before forcing; the forced skewed
        // symbols are only approximately finite-gap.
        CHECK(nlse_residual(c.symbols[static_cast<std::size_t>(c.find_label("00"))].params) < 1e-4);
    }
    SUBCASE("closest pair differs in one bit") {
        double best = 1e300;
        std::pair<std::size_t, std::size_t> pair;
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = i + 1; j < 4; ++j) {
                const double m = spectrum_metric(c.symbols[i].reference_spectrum.points(),
                                                 c.symbols[j].reference_spectrum.points());
                if (m < best) {
                    best = m;
                    pair = {i, j};
                }
            }
        }
        const auto a = std::stoul(c.symbols[pair.first].bits, nullptr, 2);
        const auto b = std::stoul(c.symbols[pair.second].bits, nullptr, 2);
        CHECK(std::popcount(a ^ b) == 1);
    }
    SUBCASE("start at the amplitude minimum") {
        for (std::size_t i = 0; i < 4; ++i) {
            const Waveform w = symbol_waveform(c, i, 64);
            double mn = 1e300;
            for (auto v : w.samples) mn = std::min(mn, std::abs(v));
            CHECK(std::abs(w.samples[0]) < mn + 1e-3 * peak_amplitude(w.samples));
        }
    }
}
