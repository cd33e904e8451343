#include "pnft/waveform.hpp"

#include <cmath>

namespace pnft {

std::size_t Waveform::period_samples() const {
    if (!(dt > 0.0) || !(period > 0.0)) return 0;
    return static_cast<std::size_t>(std::lround(period / dt));
}

void check_waveform(const Waveform& wf) {
    if (!(wf.dt > 0.0) || !(wf.period > 0.0)) throw Error(ErrorCode::InvalidArgument, "waveform needs positive dt and period");
    for (const Complex& v : wf.samples) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw Error(ErrorCode::InvalidArgument, "waveform has non-finite samples");
    }
    const double periods = wf.duration() / wf.period;
    const double frac = std::abs(periods - std::round(periods)) * wf.period;
    if (std::round(periods) < 1.0 || frac > 0.5 * wf.dt) {
        throw Error(ErrorCode::InvalidArgument, "waveform does not cover an integer number of periods");
    }
}

double mean_power(const CVector& samples) {
    if (samples.empty()) return 0.0;
    double s = 0.0;
    for (const Complex& v : samples) s += std::norm(v);
    return s / static_cast<double>(samples.size());
}

double peak_amplitude(const CVector& samples) {
    double m = 0.0;
    for (const Complex& v : samples) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace pnft
