#include "pnft/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace pnft {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct Fft::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

Fft::Fft(std::size_t n, bool measure) : n_(n), plans_(std::make_unique<Plans>()) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "FFT length must be positive");
    CVector scratch(n);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard<std::mutex> lock(planner_mutex());
    const unsigned flags = (measure ? FFTW_MEASURE : FFTW_ESTIMATE) | FFTW_UNALIGNED;
    plans_->fwd = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, flags);
    plans_->bwd = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, flags);
}

Fft::~Fft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plans_->fwd);
    fftw_destroy_plan(plans_->bwd);
}

void Fft::forward(CVector& x) const {
    if (x.size() != n_) throw Error(ErrorCode::LengthMismatch, "FFT input length differs from plan");
    auto* p = reinterpret_cast<fftw_complex*>(x.data());
    fftw_execute_dft(plans_->fwd, p, p);
}

void Fft::inverse(CVector& x) const {
    if (x.size() != n_) throw Error(ErrorCode::LengthMismatch, "FFT input length differs from plan");
    auto* p = reinterpret_cast<fftw_complex*>(x.data());
    fftw_execute_dft(plans_->bwd, p, p);
    const double s = 1.0 / static_cast<double>(n_);
    for (auto& v : x) v *= s;
}

double fft_frequency(std::size_t k, std::size_t n, double dt) {
    const long kk = (k <= n / 2) ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
    return 2.0 * kPi * static_cast<double>(kk) / (static_cast<double>(n) * dt);
}

CVector fourier_resample(const CVector& x, std::size_t m) {
    const std::size_t n = x.size();
    if (m < n) throw Error(ErrorCode::InvalidArgument, "resampling only increases the sample count");
    if (m == n) return x;
    CVector spec(x);
    Fft(n).forward(spec);
    CVector out(m, Complex{0.0, 0.0});
    const std::size_t half = n / 2;
    for (std::size_t k = 0; k < (n + 1) / 2; ++k) out[k] = spec[k];
    for (std::size_t k = 1; k < (n + 1) / 2; ++k) out[m - k] = spec[n - k];
    if (n % 2 == 0) {
        out[half] = 0.5 * spec[half];
        out[m - half] = 0.5 * spec[half];
    }
    Fft(m).inverse(out);
    const double s = static_cast<double>(m) / static_cast<double>(n);
    for (auto& v : out) v *= s;
    return out;
}

}  // namespace pnft
