#pragma once

#include <memory>

#include "pnft/common.hpp"

namespace pnft {

// In-place complex FFT of a fixed length backed by FFTW. The inverse is
// normalized so that inverse(forward(x)) == x. Plans are created under a
// process-wide lock since the FFTW planner is not reentrant; execution is.
class Fft {
public:
    // `measure` spends planning time on a faster plan; worth it for transforms
    // that are executed many times.
    explicit Fft(std::size_t n, bool measure = false);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }
    void forward(CVector& x) const;
    void inverse(CVector& x) const;

private:
    struct Plans;
    std::size_t n_;
    std::unique_ptr<Plans> plans_;
};

// Angular frequency of FFT bin k for sample spacing dt (negative for the upper half).
double fft_frequency(std::size_t k, std::size_t n, double dt);

// Trigonometric interpolation of one period onto m samples (m >= n). The
// Nyquist bin of an even-length input is split evenly between +/- frequencies.
CVector fourier_resample(const CVector& x, std::size_t m);

}  // namespace pnft
