#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pnft/common.hpp"
#include "pnft/waveform.hpp"

namespace pnft::zs {

// Transfer matrix of dPhi/dt = [-i lambda sigma3 + ((0, -q), (conj q, 0))] Phi
// across one period.
struct Monodromy {
    Eigen::Matrix2cd matrix;
    Complex lambda;

    Complex half_trace() const { return 0.5 * matrix.trace(); }
};

// Piecewise-constant potential, one closed-form exponential per sample; the
// sample is taken at the midpoint of its cell, which makes the scheme second
// order. Uses the first period_samples() samples of wf.
Monodromy monodromy(const Waveform& wf, Complex lambda);

// Floquet discriminant Delta = tr(M) / 2 of a sampled period.
Complex discriminant(const CVector& q, double dt, Complex lambda);

// Zero-boundary scattering coefficient a(lambda) of a potential supported on
// the samples (zero outside).
Complex scattering_a(const CVector& q, double dt, Complex lambda);

struct SearchOptions {
    // Seed rectangle [-re_extent, re_extent] x (0, im_extent], in units of the
    // waveform scale (peak amplitude unless `scale` is set).
    double re_extent = 3.0;
    double im_extent = 2.0;
    int grid_re = 60;
    int grid_im = 20;
    double scale = 0.0;
    std::vector<Complex> extra_seeds;  // tried before the grid
    double newton_tol = 1e-10;
    int max_iterations = 40;
    double dedupe = 1e-5;
    double spurious_threshold = 1e-3;
};

struct SpectrumEstimate {
    CVector eigenvalues;            // canonical order
    std::vector<double> residuals;  // |Delta^2 - 1| at each eigenvalue
    int spurious_removed = 0;
};

// Simple roots of Delta^2 - 1 in the upper half-plane by grid-seeded Newton
// iteration with the derivative carried through the transfer product. Roots
// with Im below the spurious threshold are dropped, then the expected_count
// with largest imaginary part are kept.
SpectrumEstimate main_spectrum(const Waveform& wf, int expected_count, const SearchOptions& opts = {});

// All simple upper half-plane roots found, without filtering; diagnostic.
CVector all_roots(const Waveform& wf, const SearchOptions& opts = {});

struct Dealiased {
    Waveform periodic;
    double shift = 0.0;  // spectrum(wf) = spectrum(periodic) + shift
};

// Removes the carrier rotation phi = arg(q(T)/q(0)) (|phi| <= pi) by
// multiplying with exp(-i phi t / T). A quadratic extrapolation of q(T) from
// the last three samples gives a first estimate, refined by minimizing the
// energy the boundary jump leaks into the upper half of the band.
Dealiased dealias_quasi_periodic(const Waveform& wf);

// Same with a known rotation phi.
Dealiased dealias_with_phase(const Waveform& wf, double phi);

// Fourier interpolation of one (periodic) period onto n samples.
Waveform upsample(const Waveform& wf, std::size_t n);

// Dealias, upsample and extract the main spectrum of one quasi-period.
SpectrumEstimate recover_spectrum(const Waveform& wf, int expected_count, std::size_t upsample_to,
                                  const SearchOptions& opts = {});

struct SolitonContent {
    double energy_fraction = 0.0;
    CVector discrete_points;
};

// Discrete eigenvalues of the samples placed on a zero background and the
// share of the energy they carry, sum 4 Im(lambda_k) / integral |q|^2.
SolitonContent soliton_content(const Waveform& wf, const SearchOptions& opts = {});

}  // namespace pnft::zs
