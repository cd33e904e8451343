#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "pnft/experiment.hpp"
#include "pnft/txrx.hpp"
#include "support.hpp"

using namespace pnft;
using namespace pnft::txrx;

namespace {

Constellation with_cp(double cp) {
    Constellation c = testing::default_constellation();
    c.cp_fraction = cp;
    return c;
}

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

// Exhaustive assignment search, independent of the library's metric.
double brute_metric(const CVector& ref, CVector got) {
    std::sort(got.begin(), got.end(), [](Complex a, Complex b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    double best = 1e300;
    do {
        double m = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) m += std::norm(ref[i] - got[i]);
        best = std::min(best, m);
    } while (std::next_permutation(got.begin(), got.end(), [](Complex a, Complex b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    }));
    return best;
}

ReceiverOptions fast_rx() {
    ReceiverOptions rx;
    rx.upsample_to = 256;
    return rx;
}

}  // namespace

TEST_CASE("prefix length") {
    CHECK(cp_samples(0.0, 32) == 0);
    CHECK(cp_samples(0.5, 32) == 32);
    CHECK(cp_samples(2.0 / 3.0, 32) == 64);
    CHECK(cp_samples(0.75, 32) == 96);
    CHECK_THROWS_AS(cp_samples(1.0, 32), Error);
    CHECK_THROWS_AS(cp_samples(-0.1, 32), Error);
}

TEST_CASE("slots tile the frame") {
    for (double cp : {0.0, 0.5, 0.75}) {
        const Constellation c = with_cp(cp);
        const std::string bits = experiment::random_bits(40, 3);
        const Frame f = assemble_frame(bits, c);
        REQUIRE(f.slots.size() == 20);
        std::size_t next = 0;
        for (const auto& s : f.slots) {
            CHECK(s.start == next);
            CHECK(s.period_samples == 32);
            CHECK(s.cp_samples == cp_samples(cp, 32));
            next = s.start + s.cp_samples + s.period_samples;
        }
        CHECK(f.signal.size() == next);
        CHECK(f.signal.period == c.period);
        CHECK(std::abs(f.signal.dt - c.period / 32.0) < 1e-15);
    }
}

TEST_CASE("prefix is the backward continuation of the period") {
    for (double cp : {0.5, 0.75}) {
        const Constellation c = with_cp(cp);
        const Frame f = assemble_frame("00011011100100", c);
        for (const auto& s : f.slots) {
            const Waveform w = fgsynth::symbol_waveform(c, static_cast<std::size_t>(s.symbol), 32);
            const double phi = w.phase_slope * w.period;
            const long n = 32;
            const long ncp = static_cast<long>(s.cp_samples);
            for (long j = 0; j < ncp; ++j) {
                long rel = j - ncp;
                long wraps = 0;
                while (rel < 0) {
                    rel += n;
                    --wraps;
                }
                const Complex expected = f.signal.samples[s.start + static_cast<std::size_t>(ncp + rel)] *
                                         std::polar(1.0, phi * static_cast<double>(wraps));
                CHECK(std::abs(f.signal.samples[s.start + static_cast<std::size_t>(j)] - expected) < 1e-12);
            }
        }
    }
}

TEST_CASE("no prefix") {
    const Constellation c = with_cp(0.0);
    const Frame f = assemble_frame("1001", c);
    CHECK(f.signal.size() == 64);
    CHECK(f.slots[1].start == 32);
}

TEST_CASE("stitched slots continue the phase of their predecessor") {
    const Constellation& c = testing::default_constellation();
    const std::string bits = experiment::random_bits(64, 8);
    const Frame f = assemble_frame(bits, c);
    for (std::size_t k = 1; k < f.slots.size(); ++k) {
        const auto& prev = f.slots[k - 1];
        const Waveform w = fgsynth::symbol_waveform(c, static_cast<std::size_t>(prev.symbol), 32);
        const double phi = w.phase_slope * w.period;
        const double expected = prev.global_phase + std::arg(w.samples[0]) + phi;
        CHECK(std::abs(wrap(std::arg(f.signal.samples[f.slots[k].start]) - expected)) < 1e-9);
    }
    FrameOptions dp;
    dp.stitch_phase = false;
    const Frame g = assemble_frame(bits, c, dp);
    for (const auto& s : g.slots) CHECK(s.global_phase == 0.0);
}

TEST_CASE("bad payloads") {
    const Constellation& c = testing::default_constellation();
    try {
        assemble_frame("01a1", c);
        FAIL("unknown label accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownLabel);
    }
    try {
        assemble_frame("011", c);
        FAIL("odd bit count accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
    }
}

TEST_CASE("back-to-back frame of 1000 symbols decodes without errors") {
    const Constellation& c = testing::default_constellation();
    const std::string bits = experiment::random_bits(2000, 1);
    const Frame f = assemble_frame(bits, c);
    for (double pos : {1.0, 0.5}) {
        ReceiverOptions rx = fast_rx();
        rx.window_position = pos;
        const Reception r = receive_frame(f.signal, f, c, rx);
        CHECK(r.erasures == 0);
        CHECK(bit_errors(bits, r.bits) == 0.0);
    }
}

TEST_CASE("guard slots are excluded from decisions") {
    const Constellation& c = testing::default_constellation();
    FrameOptions opts;
    opts.guard_symbols = 2;
    const std::string bits = experiment::random_bits(20, 4);
    const Frame f = assemble_frame(bits, c, opts);
    const Reception r = receive_frame(f.signal, f, c, fast_rx());
    CHECK(decided_payload(f) == bits.substr(4, 12));
    CHECK(r.bits == decided_payload(f));
    CHECK(r.per_symbol.size() == 6);
}

TEST_CASE("receiver checks its input") {
    const Constellation& c = testing::default_constellation();
    const Frame f = assemble_frame("0011", c);
    Waveform shorter = f.signal;
    shorter.samples.pop_back();
    CHECK_THROWS_AS(receive_frame(shorter, f, c), Error);
    Waveform phys = f.signal;
    phys.units = Units::Physical;
    CHECK_THROWS_AS(receive_frame(phys, f, c), Error);
}

TEST_CASE("demapping") {
    const Constellation& c = testing::default_constellation();
    SUBCASE("exact reference spectra") {
        for (std::size_t s = 0; s < c.symbols.size(); ++s) {
            zs::SpectrumEstimate est;
            est.eigenvalues = c.symbols[s].reference_spectrum.points();
            const DemapResult r = demap(est, c);
            CHECK(r.decided_symbol == static_cast<int>(s));
            CHECK(r.metric_values[s] == 0.0);
            std::reverse(est.eigenvalues.begin(), est.eigenvalues.end());
            CHECK(demap(est, c).decided_symbol == static_cast<int>(s));
        }
    }
    SUBCASE("perturbed spectra agree with exhaustive search") {
        std::mt19937_64 rng(99);
        std::normal_distribution<double> nd(0.0, 0.02);
        std::uniform_int_distribution<std::size_t> pick(0, c.symbols.size() - 1);
        int mismatches = 0;
        for (int trial = 0; trial < 10000; ++trial) {
            zs::SpectrumEstimate est;
            for (auto z : c.symbols[pick(rng)].reference_spectrum.points()) est.eigenvalues.push_back(z + Complex(nd(rng), nd(rng)));
            const DemapResult r = demap(est, c);
            std::vector<double> m;
            for (const auto& s : c.symbols) m.push_back(brute_metric(s.reference_spectrum.points(), est.eigenvalues));
            const auto best = std::min_element(m.begin(), m.end()) - m.begin();
            if (r.decided_symbol != best) ++mismatches;
        }
        CHECK(mismatches == 0);
    }
    SUBCASE("ties go to the lowest index") {
        Constellation twin = c;
        twin.symbols[2].reference_spectrum = twin.symbols[0].reference_spectrum;
        zs::SpectrumEstimate est;
        est.eigenvalues = c.symbols[0].reference_spectrum.points();
        CHECK(demap(est, twin).decided_symbol == 0);
    }
}

TEST_CASE("bit error counting") {
    CHECK(ber("0101", "0111") == 0.25);
    CHECK(ber("0101", "0101") == 0.0);
    CHECK(ber("0101", "01x1") == 0.125);
    CHECK(bit_errors("0000", "xx11") == 3.0);
    CHECK(ber("", "") == 0.0);
    try {
        ber("01", "011");
        FAIL("length mismatch accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LengthMismatch);
    }
}

TEST_CASE("band-limited delay") {
    const std::size_t n = 64;
    const double dt = 0.1;
    const double period = dt * n;
    CVector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::polar(1.0, 2.0 * kPi * 3.0 * static_cast<double>(i) * dt / period);
    const double s = 0.237;
    const CVector y = time_shift(x, dt, s);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt - s;
        CHECK(std::abs(y[i] - std::polar(1.0, 2.0 * kPi * 3.0 * t / period)) < 1e-12);
    }
    CHECK(time_shift(x, dt, 0.0) == x);
    const CVector back = time_shift(y, dt, -s);
    CHECK(testing::max_abs_diff(back, x) < 1e-12);
}
