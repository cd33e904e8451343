#include "pnft/theta.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

namespace pnft::theta {

namespace {

constexpr std::size_t kMaxLatticePoints = 4'000'000;

double tail_bound(int g, double rho, double radius) {
    const double a = 0.5 * g;
    const double x = (radius - 0.5 * rho) * (radius - 0.5 * rho);
    return a * std::pow(2.0 / rho, g) * boost::math::tgamma(a, x);
}

}  // namespace

double truncation_radius(int g, double shortest, double tol) {
    double lo = 0.5 * (std::sqrt(static_cast<double>(g)) + shortest);
    if (tail_bound(g, shortest, lo) <= tol) return lo;
    double hi = lo + 1.0;
    while (tail_bound(g, shortest, hi) > tol) {
        hi = lo + 2.0 * (hi - lo);
        if (hi > 1e4) return hi;
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (tail_bound(g, shortest, mid) > tol) lo = mid; else hi = mid;
    }
    return hi;
}

RiemannTheta::RiemannTheta(const CMatrix& tau, double tol, double max_radius)
    : tau_(tau), tol_(tol) {
    const auto g = tau.rows();
    if (g < 1 || tau.cols() != g) throw Error(ErrorCode::InvalidArgument, "tau must be square with g >= 1");
    if (!(tol > 0.0 && tol <= 1e-3)) throw Error(ErrorCode::InvalidArgument, "theta tolerance must lie in (0, 1e-3]");
    const double asym = (tau - tau.transpose()).norm();
    if (asym > 1e-8 * std::max(1.0, tau.norm())) throw Error(ErrorCode::InvalidArgument, "tau is not symmetric");

    re_ = tau.real();
    im_ = 0.5 * (tau.imag() + tau.imag().transpose());
    im_llt_.compute(im_);
    if (im_llt_.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "Im(tau) is not positive definite");
    Eigen::LLT<Eigen::MatrixXd> scaled(kPi * im_);
    chol_ = scaled.matrixU();

    // Shortest lattice vector: enumerate inside the smallest column norm.
    double r0 = std::numeric_limits<double>::max();
    for (Eigen::Index j = 0; j < g; ++j) r0 = std::min(r0, chol_.col(j).norm());
    double rho = r0;
    enumerate(RVec::Zero(g), r0 * (1.0 + 1e-12), [&](const Eigen::VectorXi& m, double norm2) {
        if (m.cwiseAbs().sum() > 0) rho = std::min(rho, std::sqrt(norm2));
    });
    radius_ = truncation_radius(static_cast<int>(g), rho, tol);
    if (radius_ > max_radius) {
        throw Error(ErrorCode::TruncationOverflow, "lattice radius " + std::to_string(radius_) + " exceeds bound");
    }
    double volume = std::pow(radius_, static_cast<double>(g)) * std::pow(kPi, 0.5 * g) / std::tgamma(0.5 * g + 1.0);
    volume /= chol_.diagonal().prod();
    if (volume > static_cast<double>(kMaxLatticePoints)) {
        throw Error(ErrorCode::TruncationOverflow, "lattice sum would need too many points");
    }
}

RVec RiemannTheta::center(const CVec& x) const {
    return im_llt_.solve(RVec(x.imag()));
}

template <class F>
void RiemannTheta::enumerate(const RVec& c, double radius, F&& visit) const {
    const int g = static_cast<int>(chol_.rows());
    const double r2 = radius * radius;
    Eigen::VectorXi m(g);
    RVec y(g);
    std::vector<double> budget(static_cast<std::size_t>(g) + 1);
    budget[static_cast<std::size_t>(g)] = r2;

    // Depth-first over coordinates g-1 .. 0 (Fincke-Pohst).
    auto recurse = [&](auto&& self, int i) -> void {
        double s = 0.0;
        for (int j = i + 1; j < g; ++j) s += chol_(i, j) * y(j);
        const double b = budget[static_cast<std::size_t>(i) + 1];
        if (b < 0.0) return;
        const double w = std::sqrt(b);
        const double tii = chol_(i, i);
        const long lo = static_cast<long>(std::ceil((-w - s) / tii - c(i)));
        const long hi = static_cast<long>(std::floor((w - s) / tii - c(i)));
        for (long mi = lo; mi <= hi; ++mi) {
            m(i) = static_cast<int>(mi);
            y(i) = static_cast<double>(mi) + c(i);
            const double e = tii * y(i) + s;
            budget[static_cast<std::size_t>(i)] = b - e * e;
            if (i == 0) {
                visit(m, r2 - budget[0]);
            } else {
                self(self, i - 1);
            }
        }
    };
    recurse(recurse, g - 1);
}

RiemannTheta::Partial RiemannTheta::evaluate(const CVec& x, double radius) const {
    Partial out;
    const RVec c = center(x);
    const RVec a = x.real();
    out.log_scale = kPi * c.dot(im_ * c);
    enumerate(c, radius, [&](const Eigen::VectorXi& m, double norm2) {
        const RVec md = m.cast<double>();
        const double phase = kPi * md.dot(re_ * md) + 2.0 * kPi * md.dot(a);
        const double amp = std::exp(-norm2);
        out.sum += amp * Complex(std::cos(phase), std::sin(phase));
        out.magnitude += amp;
    });
    return out;
}

Complex RiemannTheta::value(const CVec& x) const {
    const Partial p = evaluate(x, radius_);
    return std::exp(p.log_scale) * p.sum;
}

Complex RiemannTheta::value_with_radius(const CVec& x, double radius) const {
    const Partial p = evaluate(x, radius);
    return std::exp(p.log_scale) * p.sum;
}

Complex RiemannTheta::log_value(const CVec& x, bool guard) const {
    const Partial p = evaluate(x, radius_);
    if (guard && std::abs(p.sum) < 1e-12 * p.magnitude) {
        throw Error(ErrorCode::DenominatorNearZero, "theta value vanishes to working precision");
    }
    return p.log_scale + std::log(p.sum);
}

std::size_t RiemannTheta::lattice_size(const CVec& x) const {
    std::size_t n = 0;
    enumerate(center(x), radius_, [&](const Eigen::VectorXi&, double) { ++n; });
    return n;
}

CVector RiemannTheta::log_line(const CVec& base, const RVec& v, const std::vector<double>& t, bool guard) const {
    const RVec c = center(base);
    const RVec a = base.real();
    const double log_scale = kPi * c.dot(im_ * c);
    std::vector<Complex> amp;
    std::vector<double> freq;
    double magnitude = 0.0;
    enumerate(c, radius_, [&](const Eigen::VectorXi& m, double norm2) {
        const RVec md = m.cast<double>();
        const double phase = kPi * md.dot(re_ * md) + 2.0 * kPi * md.dot(a);
        const double w = std::exp(-norm2);
        amp.push_back(w * Complex(std::cos(phase), std::sin(phase)));
        freq.push_back(2.0 * kPi * md.dot(v));
        magnitude += w;
    });
    CVector out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        Complex s{0.0, 0.0};
        for (std::size_t j = 0; j < amp.size(); ++j) {
            const double ph = freq[j] * t[i];
            s += amp[j] * Complex(std::cos(ph), std::sin(ph));
        }
        if (guard && std::abs(s) < 1e-12 * magnitude) {
            throw Error(ErrorCode::DenominatorNearZero, "theta value vanishes on the evaluation grid");
        }
        out[i] = log_scale + std::log(s);
    }
    return out;
}

Complex theta(const ThetaArg& arg, double tol) {
    RiemannTheta th(arg.tau, tol);
    if (arg.x.size() != arg.tau.rows()) throw Error(ErrorCode::InvalidArgument, "argument length differs from genus");
    return th.value(arg.x);
}

Complex theta_ratio_log(const ThetaArg& num, const ThetaArg& den, double tol) {
    if ((num.tau - den.tau).norm() > 0.0) throw Error(ErrorCode::InvalidArgument, "ratio requires a common tau");
    RiemannTheta th(den.tau, tol);
    const Complex lden = th.log_value(den.x);
    const Complex lnum = th.log_value(num.x, false);
    return lnum - lden;
}

}  // namespace pnft::theta
