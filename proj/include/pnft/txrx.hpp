#pragma once

#include <string>
#include <vector>

#include "pnft/fgsynth.hpp"
#include "pnft/waveform.hpp"
#include "pnft/zs_spectrum.hpp"

namespace pnft::txrx {

using fgsynth::Constellation;

struct SymbolSlot {
    std::size_t start = 0;           // index of the first CP sample
    std::size_t period_samples = 0;
    std::size_t cp_samples = 0;
    int symbol = 0;
    double global_phase = 0.0;
};

// A burst of symbols, each a cyclic prefix followed by one period. The prefix
// is the quasi-periodic continuation of the period backwards in time, so the
// prefix and period together are a continuous stretch of the same waveform.
struct Frame {
    std::string payload_bits;
    std::vector<SymbolSlot> slots;
    Waveform signal;  // period field holds the symbol period
    int guard_symbols = 0;  // slots at each end excluded from decisions
};

struct FrameOptions {
    int samples_per_period = 32;
    bool stitch_phase = true;  // continuous phase across slot boundaries
    int guard_symbols = 0;
};

std::size_t cp_samples(double cp_fraction, int samples_per_period);

Frame assemble_frame(const std::string& bits, const Constellation& c, const FrameOptions& opts = {});

struct DemapResult {
    int decided_symbol = -1;  // -1 marks an erasure
    std::vector<double> metric_values;
    zs::SpectrumEstimate recovered;
};

// Candidate minimizing the permutation-minimized squared distance between its
// reference spectrum and the recovered one; ties go to the lowest index.
DemapResult demap(const zs::SpectrumEstimate& recovered, const Constellation& c);

struct ReceiverOptions {
    std::size_t upsample_to = 1024;
    // Time by which the pattern has moved (dimensionless); the frame is shifted
    // back by this amount before the windows are cut.
    double timing_offset = 0.0;
    // Seeds are the reference points of all symbols; a coarse grid is added
    // only when those miss a root.
    bool grid_fallback = true;
    // Start of the demodulated period within the slot as a fraction of the
    // prefix: 1 takes the final period, 0.5 centres the window in the slot.
    double window_position = 1.0;
    // Ideal low-pass cutoff (dimensionless angular frequency) applied to the
    // whole frame before the windows are cut; 0 disables it.
    double lowpass_cutoff = 0.0;
};

struct Reception {
    std::string bits;  // erased bits are written as 'x'
    std::vector<DemapResult> per_symbol;
    int erasures = 0;
};

// Per slot: drop the prefix, remove the carrier rotation, upsample and extract
// the main spectrum, then demap. Extraction failures become erasures. `rx`
// must be dimensionless with the slot layout of `layout`.
Reception receive_frame(const Waveform& rx, const Frame& layout, const Constellation& c,
                        const ReceiverOptions& opts = {});

// Bits of the slots that take part in decisions (guard slots removed).
std::string decided_payload(const Frame& layout);

// Hamming distance over length; an erased bit ('x') counts as half an error.
double ber(const std::string& tx, const std::string& rx);
double bit_errors(const std::string& tx, const std::string& rx);

// Circular delay y(t) = x(t - shift) with band-limited interpolation; `shift`
// has the unit of dt.
CVector time_shift(const CVector& x, double dt, double shift);

}  // namespace pnft::txrx
