#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pnft/channel.hpp"
#include "pnft/fgsynth.hpp"
#include "pnft/txrx.hpp"

// Monte Carlo BER and reach studies over a multi-span link.
namespace pnft::experiment {

struct SweepPlan {
    std::vector<double> distances_km;  // ascending; each a whole number of spans
    std::vector<double> cp_fractions;
    int n_symbols = 1000;
    std::vector<std::uint64_t> seeds{1};
    std::vector<double> ber_thresholds{1e-3, 1e-2, 1e-1};
    double period_ps = 500.0;
    bool stitch_phase = true;
    int guard_symbols = 0;
    std::size_t upsample_to = 256;
    double window_position = 0.5;     // see txrx::ReceiverOptions
    double rx_filter_harmonics = 4.0;  // receiver cutoff in multiples of 2 pi / period; 0 disables
    // A run stops once its BER exceeds this; later cells reuse the last value.
    // Zero means the largest threshold.
    double stop_ber = 0.0;
    int threads = 1;

    void validate() const;
};

struct BerCell {
    double distance_km = 0.0;
    double cp_fraction = 0.0;
    double errors = 0.0;     // erased bits count one half
    std::size_t bits = 0;
    int erasures = 0;
    int saturated_runs = 0;  // runs that had stopped before this distance

    double ber() const { return bits ? errors / static_cast<double>(bits) : 0.0; }
};

struct ReachCell {
    double cp_fraction = 0.0;
    double threshold = 0.0;
    double reach_km = 0.0;
    bool censored = false;  // BER stayed below the threshold over the whole grid
};

// Random payload for one run, deterministic in the seed.
std::string random_bits(std::size_t n, std::uint64_t seed);

// Cells ordered by cp fraction, then distance. The constellation's own cp
// fraction is replaced by each entry of the plan.
std::vector<BerCell> ber_sweep(const fgsynth::Constellation& c, const channel::LinkConfig& link, const SweepPlan& plan);

// Reach per cp fraction and threshold: the distance where the BER first rises
// above the threshold, interpolated linearly in log10(BER) between grid
// points. A zero BER is replaced by half an error over the bit count. Reach is
// zero when the first grid point already exceeds the threshold.
std::vector<ReachCell> reach_from_ber(const std::vector<BerCell>& cells, const std::vector<double>& thresholds);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Distances 0, L, 2L, ... up to max_km for span length L.
std::vector<double> span_grid(double span_km, double max_km);

}  // namespace pnft::experiment
