#pragma once

#include <random>

#include "pnft/fgsynth.hpp"

namespace pnft::testing {

// The reference constellation: default seeds, period 3, 50% prefix. Designed
// once per test binary.
inline const fgsynth::Constellation& default_constellation() {
    static const fgsynth::Constellation c = fgsynth::design_constellation(fgsynth::default_seeds(), 3.0, 0.5);
    return c;
}

inline algcurve::ThetaParameters params_for(const CVector& points) {
    return algcurve::theta_parameters(algcurve::build_curve(algcurve::MainSpectrum(points)));
}

inline double max_abs_diff(const CVector& a, const CVector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace pnft::testing
