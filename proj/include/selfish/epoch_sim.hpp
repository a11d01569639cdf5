#pragma once

// Multi-epoch simulation of selfish mining under difficulty adjustment.
//
// Conventions:
//  * difficulty changes are applied as a multiplier delta on both block
//    rates (rates scale with 1/difficulty), so p, q and gamma stay fixed;
//  * Legacy:      delta = elapsed / (n0 * tau0)
//    OrphanAware: delta = elapsed / ((n0 + orphans) * tau0)
//    with tau0 the protocol's target spacing; no clamp is applied;
//  * an epoch closes at the first cycle boundary where the official blocks
//    counted for it reach n0. The excess is carried over and counted
//    towards the next epoch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "selfish/analytics.hpp"
#include "selfish/cycle_sim.hpp"
#include "selfish/model.hpp"
#include "selfish/parallel.hpp"
#include "selfish/stats.hpp"

namespace selfish {

enum class AdjustmentPolicy { Legacy, OrphanAware };

struct EpochOutcome {
    std::uint32_t epoch_index = 0; ///< 1-based
    double start_time = 0.0;
    double elapsed_time = 0.0;
    std::uint32_t official_blocks = 0; ///< always n0: the counting window
    std::uint32_t official_mined = 0;  ///< official blocks in this epoch's cycles
    std::uint32_t carried_in = 0;
    std::uint32_t orphan_blocks = 0;
    /// Rate multiplier in force during the epoch, relative to base rates.
    double rate_multiplier = 1.0;
    /// Factor applied to both rates when the epoch closed.
    double delta_applied = 1.0;
    double selfish_revenue = 0.0;
    double honest_revenue = 0.0;
    double cumulative_selfish_revenue = 0.0;
    /// q * b / tau0 * (time since attack start): honest-mining revenue.
    double counterfactual_honest_revenue = 0.0;

    double end_time() const { return start_time + elapsed_time; }
};

class EpochSimulator {
public:
    EpochSimulator(const NetworkParams& params, AdjustmentPolicy policy, std::uint32_t n0, RandomStream stream)
        : params_(params), policy_(policy), n0_(n0), stream_(std::move(stream)), base_(base_rates(params))
    {
        if (n0 == 0)
            throw std::invalid_argument("blocks per epoch must be positive");
        detail::require_selfish_rates(base_);
    }

    double time() const { return time_; }
    double cumulative_selfish_revenue() const { return cumulative_selfish_; }
    double rate_multiplier() const { return multiplier_; }

    /// Simulates one epoch; on_cycle(end_time, cumulative_selfish_revenue)
    /// is invoked after every cycle.
    template <class OnCycle>
    EpochOutcome next_epoch(OnCycle&& on_cycle)
    {
        EpochOutcome e;
        e.epoch_index = ++epoch_;
        e.start_time = time_;
        e.rate_multiplier = multiplier_;
        e.official_blocks = n0_;
        e.carried_in = carry_;
        const Rates rates = base_.scaled(multiplier_);
        std::uint32_t counted = carry_;
        while (counted < n0_) {
            const auto c = run_selfish_cycle(rates, params_.gamma(), params_.b(), stream_);
            time_ += c.duration;
            counted += c.official();
            e.official_mined += c.official();
            e.orphan_blocks += c.orphans();
            e.selfish_revenue += c.selfish_revenue;
            e.honest_revenue += c.honest_official * params_.b();
            cumulative_selfish_ += c.selfish_revenue;
            on_cycle(time_, cumulative_selfish_);
        }
        carry_ = counted - n0_;
        e.elapsed_time = time_ - e.start_time;
        const double target_blocks = policy_ == AdjustmentPolicy::Legacy ? static_cast<double>(n0_)
                                                                         : static_cast<double>(n0_ + e.orphan_blocks);
        e.delta_applied = e.elapsed_time / (target_blocks * params_.tau0());
        multiplier_ *= e.delta_applied;
        e.cumulative_selfish_revenue = cumulative_selfish_;
        e.counterfactual_honest_revenue = honest_revenue_ratio(params_) * time_;
        return e;
    }

    EpochOutcome next_epoch()
    {
        return next_epoch([](double, double) {});
    }

private:
    NetworkParams params_;
    AdjustmentPolicy policy_;
    std::uint32_t n0_;
    RandomStream stream_;
    Rates base_;
    double time_ = 0.0;
    double multiplier_ = 1.0;
    double cumulative_selfish_ = 0.0;
    std::uint32_t carry_ = 0;
    std::uint32_t epoch_ = 0;
};

/// Replication `index` of a run with master seed `seed`; run_epochs is
/// replication 0.
inline std::vector<EpochOutcome> run_epoch_replication(const NetworkParams& params, AdjustmentPolicy policy,
                                                       std::uint32_t n_epochs, std::uint64_t seed,
                                                       std::uint64_t index,
                                                       std::uint32_t n0 = kDefaultBlocksPerEpoch)
{
    if (n_epochs < 1)
        throw std::invalid_argument("need at least one epoch");
    EpochSimulator sim(params, policy, n0, RandomStream::derive(seed, index));
    std::vector<EpochOutcome> out;
    out.reserve(n_epochs);
    for (std::uint32_t k = 0; k < n_epochs; ++k)
        out.push_back(sim.next_epoch());
    return out;
}

inline std::vector<EpochOutcome> run_epochs(const NetworkParams& params, AdjustmentPolicy policy,
                                            std::uint32_t n_epochs, std::uint64_t seed,
                                            std::uint32_t n0 = kDefaultBlocksPerEpoch)
{
    return run_epoch_replication(params, policy, n_epochs, seed, 0, n0);
}

using EpochRuns = std::vector<std::vector<EpochOutcome>>;

inline EpochRuns run_epoch_replications(const NetworkParams& params, AdjustmentPolicy policy, std::uint32_t n_epochs,
                                        std::uint64_t n_replications, std::uint64_t seed,
                                        std::uint32_t n0 = kDefaultBlocksPerEpoch)
{
    EpochRuns runs(n_replications);
    parallel_for(n_replications, [&](std::size_t r) { runs[r] = run_epoch_replication(params, policy, n_epochs, seed, r, n0); });
    return runs;
}

/// Fraction of all produced blocks that were orphaned: orphans counted per
/// effective spacing tau0 / multiplier, over total time.
inline double orphan_rate(std::span<const EpochOutcome> outcomes, double tau0)
{
    if (outcomes.empty())
        throw std::invalid_argument("orphan rate needs at least one epoch");
    double weighted = 0.0;
    double time = 0.0;
    for (const auto& e : outcomes) {
        weighted += e.orphan_blocks * (tau0 / e.rate_multiplier);
        time += e.elapsed_time;
    }
    return weighted / time;
}

struct EpochSummary {
    std::uint64_t replications = 0;
    std::uint32_t epochs = 0;
    /// Epoch-1 elapsed / (n0 tau0), one sample per replication.
    EstimateWithCI first_epoch_slowdown;
    /// Geometric mean of delta_applied over all epochs, one sample per
    /// replication: the K-th root of the total difficulty change.
    EstimateWithCI mean_factor;
    /// Same over epochs 2..K (needs K >= 2).
    std::optional<EstimateWithCI> mean_factor_after_first;
    /// Arithmetic means of the same factors. Each factor is a ratio whose
    /// denominator carries the previous epoch's noise, so these sit about
    /// 1/n0 above the geometric means even with no attacker.
    EstimateWithCI mean_factor_arithmetic;
    std::optional<EstimateWithCI> mean_factor_arithmetic_after_first;
    /// sum(selfish revenue) / sum(elapsed) over epochs 2..K, replications as batches.
    std::optional<EstimateWithCI> revenue_ratio_after_first;
    /// Selfish revenue ratio per epoch, replications as batches.
    std::vector<EstimateWithCI> revenue_ratio_per_epoch;
    /// Epoch-1 orphan rate, one sample per replication.
    EstimateWithCI first_epoch_orphan_rate;
    /// (n0 + orphans) / elapsed over epochs 2..K, in units of 1/tau0.
    std::optional<EstimateWithCI> production_rate_after_first;
};

inline EpochSummary summarize_epochs(const EpochRuns& runs, const NetworkParams& params,
                                     std::uint32_t n0 = kDefaultBlocksPerEpoch)
{
    if (runs.size() < kMinRatioBatches)
        throw std::invalid_argument("epoch summary needs at least 8 replications");
    const std::size_t k = runs.front().size();
    for (const auto& r : runs)
        if (r.size() != k || k == 0)
            throw std::invalid_argument("replications must have the same non-zero epoch count");

    const double window = static_cast<double>(n0) * params.tau0();
    RunningStats slowdown, factor, factor_after, arith, arith_after, orphan1;
    std::vector<RatioBatch> after_batches, production_batches;
    std::vector<std::vector<RatioBatch>> per_epoch(k);
    for (const auto& run : runs) {
        slowdown.add(run.front().elapsed_time / window);
        orphan1.add(orphan_rate(std::span(run).first(1), params.tau0()));
        RunningStats f, fa, lf, lfa;
        RatioBatch after{}, production{};
        for (std::size_t e = 0; e < k; ++e) {
            const auto& o = run[e];
            f.add(o.delta_applied);
            lf.add(std::log(o.delta_applied));
            per_epoch[e].push_back({o.selfish_revenue, o.elapsed_time});
            if (e >= 1) {
                fa.add(o.delta_applied);
                lfa.add(std::log(o.delta_applied));
                after.numerator += o.selfish_revenue;
                after.denominator += o.elapsed_time;
                production.numerator += (o.official_blocks + o.orphan_blocks) * params.tau0();
                production.denominator += o.elapsed_time;
            }
        }
        factor.add(std::exp(lf.mean()));
        arith.add(f.mean());
        if (k >= 2) {
            factor_after.add(std::exp(lfa.mean()));
            arith_after.add(fa.mean());
            after_batches.push_back(after);
            production_batches.push_back(production);
        }
    }
    EpochSummary s;
    s.replications = runs.size();
    s.epochs = static_cast<std::uint32_t>(k);
    s.first_epoch_slowdown = slowdown.estimate();
    s.mean_factor = factor.estimate();
    s.mean_factor_arithmetic = arith.estimate();
    s.first_epoch_orphan_rate = orphan1.estimate();
    for (const auto& batches : per_epoch)
        s.revenue_ratio_per_epoch.push_back(ratio_estimate(batches));
    if (k >= 2) {
        s.mean_factor_after_first = factor_after.estimate();
        s.mean_factor_arithmetic_after_first = arith_after.estimate();
        s.revenue_ratio_after_first = ratio_estimate(after_batches);
        s.production_rate_after_first = ratio_estimate(production_batches);
    }
    return s;
}

struct BreakevenEstimate {
    /// Analytic precheck q' <= q: no estimate is attempted.
    bool never_profitable = false;
    std::uint64_t replications = 0;
    double horizon = 0.0; ///< seconds
    /// Zero crossing, after the mean first-epoch end, of the replication-mean
    /// curve E[selfish revenue(t)] - q b t / tau0. Empty if the mean curve
    /// stays negative up to the horizon.
    std::optional<EstimateWithCI> expected_curve_crossing;
    /// Mean over uncensored replications of each replication's first
    /// crossing after its own first epoch.
    std::optional<EstimateWithCI> first_passage;
    double censored_fraction = 0.0;
    /// censored_fraction > 1%
    bool heavily_censored = false;
};

inline constexpr std::uint32_t kBreakevenGridPerEpoch = 100;

/// Monte Carlo break-even time. Replications run under the Legacy policy
/// until the horizon horizon_epochs * n0 * tau0 is passed.
inline BreakevenEstimate empirical_breakeven(const NetworkParams& params, std::uint64_t n_replications,
                                             std::uint32_t horizon_epochs, std::uint64_t seed,
                                             std::uint32_t n0 = kDefaultBlocksPerEpoch)
{
    BreakevenEstimate out;
    out.replications = n_replications;
    if (!outperforms_honest_after_adjustment(params)) {
        out.never_profitable = true;
        return out;
    }
    if (n_replications < 2 || horizon_epochs < 2)
        throw std::invalid_argument("break-even estimate needs >= 2 replications and a horizon of >= 2 epochs");

    const double window = static_cast<double>(n0) * params.tau0();
    const double horizon = horizon_epochs * window;
    out.horizon = horizon;
    const double honest_ratio = honest_revenue_ratio(params);
    const std::size_t grid_size = static_cast<std::size_t>(horizon_epochs) * kBreakevenGridPerEpoch;
    const double spacing = horizon / static_cast<double>(grid_size);
    auto grid_time = [&](std::size_t j) { return spacing * static_cast<double>(j + 1); };

    struct Chunk {
        std::vector<RunningStats> curve;
        RunningStats first_end;
        RunningStats passage;
        std::uint64_t censored = 0;
    };
    const std::size_t chunks = static_cast<std::size_t>(std::min<std::uint64_t>(64, n_replications));
    std::vector<Chunk> parts(chunks);

    parallel_for(chunks, [&](std::size_t c) {
        Chunk& part = parts[c];
        part.curve.resize(grid_size);
        std::vector<double> diff(grid_size);
        for (std::uint64_t r = c; r < n_replications; r += chunks) {
            EpochSimulator sim(params, AdjustmentPolicy::Legacy, n0, RandomStream::derive(seed, r));
            double t_prev = 0.0, s_prev = 0.0;
            std::size_t j = 0;
            double first_end = std::numeric_limits<double>::infinity();
            std::optional<double> crossing;
            auto on_cycle = [&](double t, double s) {
                while (j < grid_size && grid_time(j) <= t) {
                    const double g = grid_time(j);
                    const double revenue = s_prev + (s - s_prev) * (g - t_prev) / (t - t_prev);
                    diff[j++] = revenue - honest_ratio * g;
                }
                if (!crossing && t > first_end) {
                    const double d = s - honest_ratio * t;
                    if (d >= 0.0) {
                        const double d_prev = s_prev - honest_ratio * t_prev;
                        crossing = std::max(first_end, t_prev + (-d_prev) * (t - t_prev) / (d - d_prev));
                    }
                }
                t_prev = t;
                s_prev = s;
            };
            sim.next_epoch(on_cycle);
            first_end = sim.time();
            if (sim.cumulative_selfish_revenue() - honest_ratio * first_end >= 0.0)
                crossing = first_end;
            while (sim.time() < horizon)
                sim.next_epoch(on_cycle);
            for (std::size_t g = 0; g < grid_size; ++g)
                part.curve[g].add(diff[g]);
            part.first_end.add(first_end);
            if (crossing && *crossing <= horizon)
                part.passage.add(*crossing);
            else
                ++part.censored;
        }
    });

    std::vector<RunningStats> curve(grid_size);
    RunningStats first_end, passage;
    std::uint64_t censored = 0;
    for (const auto& p : parts) {
        for (std::size_t g = 0; g < grid_size; ++g)
            curve[g].merge(p.curve[g]);
        first_end.merge(p.first_end);
        passage.merge(p.passage);
        censored += p.censored;
    }
    out.censored_fraction = static_cast<double>(censored) / static_cast<double>(n_replications);
    out.heavily_censored = out.censored_fraction > 0.01;
    if (passage.count() >= 2)
        out.first_passage = passage.estimate();

    // Post-adjustment slope of the mean curve, by least squares.
    const double settle = first_end.mean() * 1.05;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (std::size_t g = 0; g < grid_size; ++g) {
        const double x = grid_time(g);
        if (x < settle)
            continue;
        const double y = curve[g].mean();
        sx += x, sy += y, sxx += x * x, sxy += x * y, n += 1;
    }
    const double slope = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : std::numeric_limits<double>::quiet_NaN();

    for (std::size_t g = 1; g < grid_size; ++g) {
        if (grid_time(g) < first_end.mean())
            continue;
        const double y = curve[g].mean();
        if (y < 0.0)
            continue;
        const double y_prev = curve[g - 1].mean();
        const double w = y_prev < 0.0 ? -y_prev / (y - y_prev) : 0.0;
        const double t = grid_time(g - 1) + w * spacing;
        const double se_curve = (1.0 - w) * curve[g - 1].std_error() + w * curve[g].std_error();
        const double se = slope > 0.0 ? se_curve / slope : std::numeric_limits<double>::quiet_NaN();
        out.expected_curve_crossing = EstimateWithCI::make(t, se, n_replications);
        break;
    }
    return out;
}

} // namespace selfish
