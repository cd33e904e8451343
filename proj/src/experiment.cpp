#include "pnft/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <thread>

namespace pnft::experiment {

void SweepPlan::validate() const {
    if (distances_km.empty() || cp_fractions.empty() || seeds.empty()) {
        throw Error(ErrorCode::InvalidArgument, "sweep lists must be non-empty");
    }
    if (!std::is_sorted(distances_km.begin(), distances_km.end()) || distances_km.front() < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "distances must be ascending and non-negative");
    }
    for (double cp : cp_fractions) {
        if (!(cp >= 0.0 && cp < 1.0)) throw Error(ErrorCode::InvalidArgument, "cp fractions must lie in [0, 1)");
    }
    if (n_symbols < 1) throw Error(ErrorCode::InvalidArgument, "need at least one symbol");
    if (2 * guard_symbols >= n_symbols) throw Error(ErrorCode::InvalidArgument, "guard symbols leave no payload");
    for (double t : ber_thresholds) {
        if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::InvalidArgument, "BER thresholds must lie in (0, 1)");
    }
}

std::string random_bits(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::string bits(n, '0');
    for (auto& b : bits) b = (rng() >> 63) ? '1' : '0';
    return bits;
}

namespace {

struct RunResult {
    std::vector<double> errors;  // per distance index; NaN when not reached
    std::vector<std::size_t> bits;
    std::vector<int> erasures;
};

RunResult run_one(const fgsynth::Constellation& base, channel::LinkConfig link, const SweepPlan& plan, double cp,
                  std::uint64_t seed, double stop_ber) {
    fgsynth::Constellation c = base;
    c.cp_fraction = cp;
    const auto nbits = static_cast<std::size_t>(plan.n_symbols) * static_cast<std::size_t>(c.bits_per_symbol());
    const std::string bits = random_bits(nbits, seed);
    txrx::FrameOptions fo;
    fo.samples_per_period = c.samples_per_period;
    fo.stitch_phase = plan.stitch_phase;
    fo.guard_symbols = plan.guard_symbols;
    const txrx::Frame frame = txrx::assemble_frame(bits, c, fo);
    const std::string reference = txrx::decided_payload(frame);
    const auto units = channel::UnitMap::for_period(c.period, plan.period_ps, link);

    const std::size_t nd = plan.distances_km.size();
    RunResult r{std::vector<double>(nd, std::nan("")), std::vector<std::size_t>(nd, 0), std::vector<int>(nd, 0)};
    std::size_t next = 0;
    // Evaluates every grid distance equal to `km`; false once the run should stop.
    auto evaluate = [&](double km, const Waveform& field) {
        bool keep = true;
        while (next < nd && plan.distances_km[next] <= km + 1e-6) {
            if (std::abs(plan.distances_km[next] - km) < 1e-6) {
                const Waveform rx = channel::to_dimensionless(field, units);
                txrx::ReceiverOptions ro;
                ro.upsample_to = plan.upsample_to;
                ro.window_position = plan.window_position;
                ro.lowpass_cutoff = plan.rx_filter_harmonics * 2.0 * kPi / c.period;
                ro.timing_offset = c.group_velocity * km / units.z0();
                const txrx::Reception rec = txrx::receive_frame(rx, frame, c, ro);
                r.errors[next] = txrx::bit_errors(reference, rec.bits);
                r.bits[next] = reference.size();
                r.erasures[next] = rec.erasures;
                if (r.errors[next] > stop_ber * static_cast<double>(reference.size())) keep = false;
            }
            ++next;
        }
        return keep && next < nd;
    };

    const Waveform tx = channel::to_physical(frame.signal, units);
    if (!evaluate(0.0, tx)) return r;
    const double last = plan.distances_km.back();
    link.n_spans = static_cast<int>(std::ceil(last / link.span_km - 1e-9));
    if (link.n_spans > 0) {
        channel::propagate(tx, link, seed, [&](int, double km, const Waveform& field) { return evaluate(km, field); });
    }
    return r;
}

}  // namespace

std::vector<BerCell> ber_sweep(const fgsynth::Constellation& c, const channel::LinkConfig& link, const SweepPlan& plan) {
    plan.validate();
    link.validate();
    for (double d : plan.distances_km) {
        const double spans = d / link.span_km;
        if (std::abs(spans - std::round(spans)) > 1e-9) {
            throw Error(ErrorCode::InvalidArgument, "distance " + std::to_string(d) + " km is not a whole number of spans");
        }
    }
    const double stop = plan.stop_ber > 0.0
                            ? plan.stop_ber
                            : *std::max_element(plan.ber_thresholds.begin(), plan.ber_thresholds.end());

    struct Job {
        std::size_t cp;
        std::size_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < plan.cp_fractions.size(); ++i) {
        for (std::size_t s = 0; s < plan.seeds.size(); ++s) jobs.push_back({i, s});
    }
    std::vector<RunResult> results(jobs.size());
    std::vector<std::string> failures(jobs.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t j = cursor++; j < jobs.size(); j = cursor++) {
            try {
                results[j] = run_one(c, link, plan, plan.cp_fractions[jobs[j].cp], plan.seeds[jobs[j].seed], stop);
            } catch (const Error& e) {
                failures[j] = "cp " + std::to_string(plan.cp_fractions[jobs[j].cp]) + ", seed " +
                              std::to_string(plan.seeds[jobs[j].seed]) + ": " + e.what();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(plan.threads, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
        if (!f.empty()) throw Error(ErrorCode::NoConvergence, "sweep cell failed (" + f + ")");
    }

    std::vector<BerCell> cells;
    for (std::size_t i = 0; i < plan.cp_fractions.size(); ++i) {
        for (std::size_t d = 0; d < plan.distances_km.size(); ++d) {
            BerCell cell;
            cell.distance_km = plan.distances_km[d];
            cell.cp_fraction = plan.cp_fractions[i];
            for (std::size_t j = 0; j < jobs.size(); ++j) {
                if (jobs[j].cp != i) continue;
                const RunResult& r = results[j];
                std::size_t use = d;
                if (std::isnan(r.errors[d])) {
                    // Stopped earlier: carry its last measured value forward.
                    while (use > 0 && std::isnan(r.errors[use])) --use;
                    ++cell.saturated_runs;
                }
                cell.errors += r.errors[use];
                cell.bits += r.bits[use];
                cell.erasures += r.erasures[use];
            }
            cells.push_back(cell);
        }
    }
    return cells;
}

std::vector<ReachCell> reach_from_ber(const std::vector<BerCell>& cells, const std::vector<double>& thresholds) {
    std::map<double, std::vector<const BerCell*>> by_cp;
    for (const auto& c : cells) by_cp[c.cp_fraction].push_back(&c);
    std::vector<ReachCell> out;
    for (auto& [cp, list] : by_cp) {
        std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->distance_km < b->distance_km; });
        auto logber = [](const BerCell* c) {
            const double floor = 0.5 / static_cast<double>(std::max<std::size_t>(c->bits, 1));
            return std::log10(std::max(c->ber(), floor));
        };
        for (double th : thresholds) {
            ReachCell rc;
            rc.cp_fraction = cp;
            rc.threshold = th;
            rc.censored = true;
            rc.reach_km = list.back()->distance_km;
            for (std::size_t i = 0; i < list.size(); ++i) {
                if (list[i]->ber() <= th) continue;
                rc.censored = false;
                if (i == 0) {
                    rc.reach_km = 0.0;
                } else {
                    const double y0 = logber(list[i - 1]);
                    const double y1 = logber(list[i]);
                    const double x0 = list[i - 1]->distance_km;
                    const double x1 = list[i]->distance_km;
                    const double frac = y1 > y0 ? std::clamp((std::log10(th) - y0) / (y1 - y0), 0.0, 1.0) : 0.0;
                    rc.reach_km = x0 + frac * (x1 - x0);
                }
                break;
            }
            out.push_back(rc);
        }
    }
    return out;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidArgument, "line fit needs two or more points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw Error(ErrorCode::InvalidArgument, "degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

std::vector<double> span_grid(double span_km, double max_km) {
    if (!(span_km > 0.0) || max_km < 0.0) throw Error(ErrorCode::InvalidArgument, "invalid span grid");
    std::vector<double> d;
    for (int k = 0; k * span_km <= max_km + 1e-9; ++k) d.push_back(k * span_km);
    return d;
}

}  // namespace pnft::experiment
