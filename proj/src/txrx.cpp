#include "pnft/txrx.hpp"

#include <cmath>

#include "pnft/fft.hpp"

namespace pnft::txrx {

std::size_t cp_samples(double cp_fraction, int samples_per_period) {
    if (!(cp_fraction >= 0.0 && cp_fraction < 1.0)) throw Error(ErrorCode::InvalidArgument, "cp fraction must lie in [0, 1)");
    return static_cast<std::size_t>(std::lround(samples_per_period * cp_fraction / (1.0 - cp_fraction)));
}

Frame assemble_frame(const std::string& bits, const Constellation& c, const FrameOptions& opts) {
    const int b = c.bits_per_symbol();
    if (b < 1 || bits.size() % static_cast<std::size_t>(b) != 0) {
        throw Error(ErrorCode::InvalidArgument, "bit count is not a multiple of the bits per symbol");
    }
    const int n = opts.samples_per_period;
    const std::size_t ncp = cp_samples(c.cp_fraction, n);
    std::vector<Waveform> periods(c.symbols.size());
    for (std::size_t s = 0; s < c.symbols.size(); ++s) periods[s] = fgsynth::symbol_waveform(c, s, n);

    Frame f;
    f.payload_bits = bits;
    f.guard_symbols = opts.guard_symbols;
    f.signal.dt = c.period / n;
    f.signal.period = c.period;
    f.signal.units = Units::Dimensionless;
    const std::size_t count = bits.size() / static_cast<std::size_t>(b);
    f.signal.samples.reserve(count * (ncp + static_cast<std::size_t>(n)));

    Complex continuation{0.0, 0.0};  // where the previous slot would go next
    for (std::size_t k = 0; k < count; ++k) {
        const std::string label = bits.substr(k * static_cast<std::size_t>(b), static_cast<std::size_t>(b));
        const int s = c.find_label(label);
        if (s < 0) throw Error(ErrorCode::UnknownLabel, "label '" + label + "' is not in the constellation");
        const Waveform& w = periods[static_cast<std::size_t>(s)];
        const double phi = w.phase_slope * w.period;
        // Sample j of the slot sits at time (j - ncp) dt relative to the period start.
        auto sample = [&](long j) {
            const long rel = j - static_cast<long>(ncp);
            long wraps = 0;
            long idx = rel;
            while (idx < 0) {
                idx += n;
                --wraps;
            }
            return w.samples[static_cast<std::size_t>(idx)] * std::polar(1.0, phi * static_cast<double>(wraps));
        };
        SymbolSlot slot;
        slot.start = f.signal.samples.size();
        slot.period_samples = static_cast<std::size_t>(n);
        slot.cp_samples = ncp;
        slot.symbol = s;
        if (opts.stitch_phase && k > 0) slot.global_phase = std::arg(continuation) - std::arg(sample(0));
        const Complex rot = std::polar(1.0, slot.global_phase);
        const long total = static_cast<long>(ncp) + n;
        for (long j = 0; j < total; ++j) f.signal.samples.push_back(rot * sample(j));
        continuation = rot * w.samples[0] * std::polar(1.0, phi);
        f.slots.push_back(slot);
    }
    return f;
}

DemapResult demap(const zs::SpectrumEstimate& recovered, const Constellation& c) {
    DemapResult out;
    out.recovered = recovered;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < c.symbols.size(); ++s) {
        const double m = fgsynth::spectrum_metric(c.symbols[s].reference_spectrum.points(), recovered.eigenvalues);
        out.metric_values.push_back(m);
        if (m < best) {
            best = m;
            out.decided_symbol = static_cast<int>(s);
        }
    }
    return out;
}

CVector time_shift(const CVector& x, double dt, double shift) {
    if (shift == 0.0 || x.empty()) return x;
    CVector y(x);
    Fft fft(y.size());
    fft.forward(y);
    for (std::size_t k = 0; k < y.size(); ++k) {
        y[k] *= std::polar(1.0, -fft_frequency(k, y.size(), dt) * shift);
    }
    fft.inverse(y);
    return y;
}

namespace {

// Advance by `shift` (undoing the common drift) and band-limit, in one pair of
// transforms.
CVector condition(const CVector& x, double dt, double shift, double cutoff) {
    if (shift == 0.0 && cutoff <= 0.0) return x;
    CVector y(x);
    Fft fft(y.size());
    fft.forward(y);
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double w = fft_frequency(k, y.size(), dt);
        if (cutoff > 0.0 && std::abs(w) > cutoff) {
            y[k] = 0.0;
        } else {
            y[k] *= std::polar(1.0, w * shift);
        }
    }
    fft.inverse(y);
    return y;
}

}  // namespace

std::string decided_payload(const Frame& layout) {
    const std::size_t count = layout.slots.size();
    if (count == 0) return {};
    const std::size_t b = layout.payload_bits.size() / count;
    const auto g = static_cast<std::size_t>(std::max(0, layout.guard_symbols));
    if (2 * g >= count) return {};
    return layout.payload_bits.substr(g * b, (count - 2 * g) * b);
}

Reception receive_frame(const Waveform& rx, const Frame& layout, const Constellation& c, const ReceiverOptions& opts) {
    if (rx.units != Units::Dimensionless) throw Error(ErrorCode::UnitMismatch, "receiver expects a dimensionless waveform");
    if (rx.size() != layout.signal.size()) throw Error(ErrorCode::LengthMismatch, "received frame length differs from layout");
    if (!(opts.window_position >= 0.0 && opts.window_position <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "window position must lie in [0, 1]");
    }
    const CVector aligned = condition(rx.samples, rx.dt, opts.timing_offset, opts.lowpass_cutoff);
    const int b = c.bits_per_symbol();
    const int g = c.symbols.front().params.genus;
    zs::SearchOptions quick;
    quick.grid_re = 0;
    quick.grid_im = 0;
    for (const auto& s : c.symbols) {
        for (const Complex& p : s.reference_spectrum.points()) quick.extra_seeds.push_back(p);
    }
    zs::SearchOptions wide = quick;
    wide.grid_re = 24;
    wide.grid_im = 8;

    Reception out;
    const std::size_t count = layout.slots.size();
    const auto guard = static_cast<std::size_t>(std::max(0, layout.guard_symbols));
    for (std::size_t k = guard; k + guard < count; ++k) {
        const SymbolSlot& slot = layout.slots[k];
        Waveform w;
        w.dt = rx.dt;
        w.period = c.period;
        w.units = Units::Dimensionless;
        const std::size_t first =
            slot.start + static_cast<std::size_t>(std::lround(opts.window_position * static_cast<double>(slot.cp_samples)));
        w.samples.assign(aligned.begin() + static_cast<long>(first),
                         aligned.begin() + static_cast<long>(first + slot.period_samples));
        DemapResult r;
        try {
            zs::SpectrumEstimate est;
            try {
                est = zs::recover_spectrum(w, g + 1, opts.upsample_to, quick);
            } catch (const Error& e) {
                if (!opts.grid_fallback || e.code() != ErrorCode::InsufficientRoots) throw;
                est = zs::recover_spectrum(w, g + 1, opts.upsample_to, wide);
            }
            r = demap(est, c);
        } catch (const Error&) {
            r.decided_symbol = -1;
        }
        if (r.decided_symbol < 0) {
            out.bits += std::string(static_cast<std::size_t>(b), 'x');
            ++out.erasures;
        } else {
            out.bits += c.symbols[static_cast<std::size_t>(r.decided_symbol)].bits;
        }
        out.per_symbol.push_back(std::move(r));
    }
    return out;
}

double bit_errors(const std::string& tx, const std::string& rx) {
    if (tx.size() != rx.size()) throw Error(ErrorCode::LengthMismatch, "bit strings differ in length");
    double e = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) {
        if (rx[i] == 'x') {
            e += 0.5;
        } else if (rx[i] != tx[i]) {
            e += 1.0;
        }
    }
    return e;
}

double ber(const std::string& tx, const std::string& rx) {
    if (tx.size() != rx.size()) throw Error(ErrorCode::LengthMismatch, "bit strings differ in length");
    if (tx.empty()) return 0.0;
    return bit_errors(tx, rx) / static_cast<double>(tx.size());
}

}  // namespace pnft::txrx
