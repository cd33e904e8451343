#include <doctest.h>

#include <boost/math/special_functions/ellint_1.hpp>
#include <boost/math/special_functions/jacobi_elliptic.hpp>
#include <boost/math/tools/minima.hpp>

#include "pnft/fgsynth.hpp"
#include "support.hpp"

using namespace pnft;
using algcurve::MainSpectrum;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("main spectrum validation") {
    CHECK(code_of([] { MainSpectrum(CVector{}); }) == ErrorCode::InvalidSpectrum);
    CHECK(code_of([] { MainSpectrum(CVector{{0.0, 1.0}, {0.2, -0.3}}); }) == ErrorCode::InvalidSpectrum);
    CHECK(code_of([] { MainSpectrum(CVector{{0.0, 1.0}, {0.0, 1.0 + 1e-9}}); }) == ErrorCode::CoincidentBranchPoints);
    const MainSpectrum s(CVector{{0.4, 0.45}, {0.0, 1.0}, {-0.4, 0.45}});
    CHECK(s.genus() == 2);
    CHECK(s.points()[0].real() < s.points()[1].real());
}

TEST_CASE("genus 0 has no period matrix") {
    CHECK(code_of([] { algcurve::build_curve(MainSpectrum(CVector{{0.0, 1.0}})); }) == ErrorCode::InvalidGenus);
}

TEST_CASE("symmetric spectra give one vanishing frequency and k1 = 2 k2") {
    for (auto [a, b, c] : {std::tuple{0.4, 0.45, 1.0}, std::tuple{0.25, 0.3, 0.8}, std::tuple{0.6, 0.7, 1.3}}) {
        const auto p = testing::params_for(CVector{{-a, b}, {0.0, c}, {a, b}});
        const int small = std::abs(p.omega(0)) < std::abs(p.omega(1)) ? 0 : 1;
        const int big = 1 - small;
        CHECK(std::abs(p.omega(small)) / std::abs(p.omega(big)) < 1e-6);
        CHECK(std::abs(p.kvec(small) - 2.0 * p.kvec(big)) / std::abs(p.kvec(big)) < 1e-6);
    }
}

TEST_CASE("period matrix is symmetric with positive definite imaginary part") {
    for (const CVector& pts : {CVector{{-0.4, 0.45}, {0.0, 1.0}, {0.4, 0.45}},
                               CVector{{-0.28, 0.17}, {0.0, 1.0}, {0.28, 0.73}},
                               CVector{{0.0, 0.5}, {0.3, 1.1}},
                               CVector{{-0.5, 0.3}, {0.0, 0.9}, {0.2, 0.6}, {0.7, 0.4}}}) {
        const auto p = testing::params_for(pts);
        CHECK((p.tau - p.tau.transpose()).norm() < 1e-8);
        Eigen::LLT<Eigen::MatrixXd> llt(p.tau.imag());
        CHECK(llt.info() == Eigen::Success);
        CHECK_NOTHROW(algcurve::validate(p));
    }
}

TEST_CASE("genus-1 solution matches the dn oracle") {
    const double e1 = 1.0;
    const double e2 = 0.5;
    const auto p = testing::params_for(CVector{{0.0, e1}, {0.0, e2}});
    const double amp = e1 + e2;
    const double m = 1.0 - std::pow((e1 - e2) / amp, 2);
    const double kmod = std::sqrt(m);
    const double period = 2.0 * boost::math::ellint_1(kmod) / amp;
    CHECK(std::abs(2.0 * kPi / std::abs(p.omega(0)) - period) < 1e-9);
    CHECK(std::abs(p.k0 - amp * amp * (2.0 - m)) < 1e-8);

    const Waveform w = fgsynth::synthesize(p, 512, period, 0.37);
    auto mismatch = [&](double shift) {
        double e = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double t = static_cast<double>(i) * w.dt - shift;
            e += std::pow(std::abs(w.samples[i]) - amp * boost::math::jacobi_dn(kmod, amp * t), 2);
        }
        return e;
    };
    std::size_t imax = 0;
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (std::abs(w.samples[i]) > std::abs(w.samples[imax])) imax = i;
    }
    const double guess = static_cast<double>(imax) * w.dt;
    const auto best = boost::math::tools::brent_find_minima(mismatch, guess - w.dt, guess + w.dt, 50);
    double err = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double t = static_cast<double>(i) * w.dt - best.first;
        err = std::max(err, std::abs(std::abs(w.samples[i]) - amp * boost::math::jacobi_dn(kmod, amp * t)));
    }
    CHECK(err < 1e-6);
}

TEST_CASE("scaling the spectrum scales frequencies linearly and wavenumbers quadratically") {
    const CVector pts{{-0.28, 0.17}, {0.0, 1.0}, {0.28, 0.73}};
    const auto p = testing::params_for(pts);
    const double s = 1.7;
    CVector scaled;
    for (auto z : pts) scaled.push_back(s * z);
    const auto q = testing::params_for(scaled);
    CHECK((q.omega - s * p.omega).norm() < 1e-7 * p.omega.norm());
    CHECK((q.kvec - s * s * p.kvec).norm() < 1e-7 * p.kvec.norm());
    CHECK((q.tau - p.tau).norm() < 1e-7);
    CHECK(std::abs(std::abs(q.K0) - s * std::abs(p.K0)) < 1e-7);
}

TEST_CASE("spectrum distance uses the best assignment") {
    const CVector a{{0.0, 1.0}, {0.5, 0.5}};
    const CVector b{{0.5, 0.5 + 1e-3}, {0.0, 1.0}};
    CHECK(std::abs(algcurve::spectrum_distance(a, b) - 1e-3) < 1e-12);
}
