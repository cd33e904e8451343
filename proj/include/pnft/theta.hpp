#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pnft/common.hpp"

namespace pnft::theta {

using CMatrix = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

struct ThetaArg {
    CVec x;
    CMatrix tau;
};

// Riemann theta function for a fixed period matrix. The lattice sum is
// truncated to the ellipsoid ||T(m + c)|| < R where T^T T = pi Im(tau) and
// c = Im(tau)^{-1} Im(x); R solves the Gaussian tail bound for the requested
// tolerance. Values are returned in factored form exp(pi c^T Y c) * S with S
// of order one, which keeps ratios well scaled.
class RiemannTheta {
public:
    explicit RiemannTheta(const CMatrix& tau, double tol = 1e-14, double max_radius = 40.0);

    int genus() const { return static_cast<int>(tau_.rows()); }
    const CMatrix& tau() const { return tau_; }
    double radius() const { return radius_; }

    Complex value(const CVec& x) const;
    // With guard set, a value below 1e-12 of the lattice-sum magnitude raises
    // DenominatorNearZero.
    Complex log_value(const CVec& x, bool guard = true) const;

    // log theta(base + t v) for real direction v on a list of t values. The
    // lattice data are shared across the grid since Im(x) is constant.
    CVector log_line(const CVec& base, const RVec& v, const std::vector<double>& t, bool guard = true) const;

    // Same evaluation with an explicit radius override; used by a posteriori checks.
    Complex value_with_radius(const CVec& x, double radius) const;

    // Number of lattice points visited for a given Im(x); diagnostic.
    std::size_t lattice_size(const CVec& x) const;

private:
    struct Partial {
        Complex sum{0.0, 0.0};
        double magnitude = 0.0;  // sum of absolute values of the terms
        double log_scale = 0.0;  // pi c^T Y c
    };

    Partial evaluate(const CVec& x, double radius) const;
    RVec center(const CVec& x) const;
    template <class F>
    void enumerate(const RVec& c, double radius, F&& visit) const;

    CMatrix tau_;
    Eigen::MatrixXd re_;
    Eigen::MatrixXd im_;
    Eigen::MatrixXd chol_;  // upper-triangular T with T^T T = pi Im(tau)
    Eigen::LLT<Eigen::MatrixXd> im_llt_;
    double tol_;
    double radius_;
};

// Radius of the truncation ellipsoid from the tail bound
// (g/2)(2/rho)^g Gamma(g/2, (R - rho/2)^2) <= tol.
double truncation_radius(int g, double shortest, double tol);

Complex theta(const ThetaArg& arg, double tol);
Complex theta_ratio_log(const ThetaArg& num, const ThetaArg& den, double tol);

}  // namespace pnft::theta
