#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "pnft/common.hpp"

namespace pnft::algcurve {

using CMatrix = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Nondegenerate points of the main spectrum in the upper half-plane.
// Points are kept in canonical order: ascending real part, then imaginary part.
class MainSpectrum {
public:
    MainSpectrum() = default;
    explicit MainSpectrum(CVector points, double min_separation = 1e-6);

    const CVector& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    int genus() const { return static_cast<int>(points_.size()) - 1; }

    MainSpectrum scaled(double s) const;
    MainSpectrum shifted(double shift) const;

private:
    CVector points_;
};

// Largest distance between matched points of two spectra of equal size, using
// the best assignment between them.
double spectrum_distance(const CVector& a, const CVector& b);

// A branch cut is a polyline from conj(lambda_k) to lambda_k. Points whose
// real parts coincide get nested bracket-shaped cuts so that no two cuts meet.
struct Cut {
    CVector vertices;
};

struct HyperellipticCurve {
    MainSpectrum spectrum;
    CVector branch_points;                 // lambda_k followed by the conjugates
    std::vector<Cut> cuts;                 // cut k carries spectrum point k
    std::vector<int> a_cycles;             // a_k encircles cut a_cycles[k], counterclockwise
    std::vector<std::pair<int, int>> b_cycles;  // b_k runs from cut k to the reference cut and back
    std::vector<CVector> escapes;          // path from the top of cut k to height `ceiling`
    double ceiling = 0.0;
    double scale = 1.0;

    int genus() const { return spectrum.genus(); }
    int reference_cut() const { return genus(); }

    // Sheet-one branch of P(lambda) = sqrt(prod (lambda - E)), behaving as
    // +lambda^(g+1) at infinity, with cuts exactly on the polylines.
    Complex sheet_root(Complex lambda) const;
};

HyperellipticCurve build_curve(const MainSpectrum& spectrum);

struct QuadratureOptions {
    double tol = 1e-10;
    int initial_nodes = 32;
    int max_nodes = 1 << 14;
};

struct CycleIntegrals {
    CMatrix A;  // A(j, k) = integral of lambda^j dlambda / P over a_k
    CMatrix B;  // B(j, k) = integral of lambda^j dlambda / P over b_k
    double error_estimate = 0.0;
};

CycleIntegrals cycle_integrals(const HyperellipticCurve& curve, const QuadratureOptions& opts = {});

struct ThetaParameters {
    int genus = 0;
    CMatrix tau;
    RVec omega;
    RVec kvec;
    double omega0 = 0.0;
    double k0 = 0.0;
    Complex K0{0.0, 0.0};
    CVec delta_minus;
    RVec delta_plus;
    double condition_number = 0.0;
};

struct ParameterOptions {
    QuadratureOptions quadrature{};
    int reduction_bound = 16;  // largest integer multiplier used when reducing the frequency basis
    double theta_tol = 1e-14;
};

ThetaParameters theta_parameters(const HyperellipticCurve& curve, const ParameterOptions& opts = {});

// Validation of the ThetaParameters invariants; throws InvalidArgument.
void validate(const ThetaParameters& p);

}  // namespace pnft::algcurve
