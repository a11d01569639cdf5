#pragma once

// Monte Carlo of single attack cycles.
//
// Block discoveries of the two groups are independent Poisson processes.
// They are simulated as the merged jump chain: the next block arrives after
// an Exp(alpha + alpha') wait and is honest with probability
// alpha / (alpha + alpha'). This is the same law as sampling both processes
// separately, and it yields the per-block event sequence the orphan
// accounting needs.
//
// Modeling notes:
//  * the tie-break after a one-block race is a single Bernoulli(gamma) draw
//    when the deciding honest block arrives (constant connectivity);
//  * partial releases while the private lead exceeds two blocks are not
//    simulated, because they change neither revenue nor cycle length: every
//    private block reaches the official chain once the lead falls to one.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "selfish/model.hpp"
#include "selfish/parallel.hpp"
#include "selfish/stats.hpp"

namespace selfish {

/// Which branch of the cycle case analysis a selfish-mining cycle took.
enum class CycleCase : std::uint8_t {
    HonestFirst,  ///< (a) honest network finds the first block
    TieHonestWon, ///< (b) one-block race, honest network finds the decider
    TieSelfishWon,///< (c) one-block race, attacker finds the decider
    Lead,         ///< (d) attacker reaches a two-block lead
    Honest,       ///< cycle of the honest strategy
};

struct CycleOutcome {
    double duration = 0.0;
    std::uint32_t selfish_official = 0;
    std::uint32_t honest_official = 0;
    std::uint32_t selfish_orphans = 0;
    std::uint32_t honest_orphans = 0;
    double selfish_revenue = 0.0;
    CycleCase which = CycleCase::HonestFirst;
    /// Time spent after the two-block lead was reached (case (d) only).
    double lead_duration = 0.0;

    std::uint32_t official() const { return selfish_official + honest_official; }
    std::uint32_t orphans() const { return selfish_orphans + honest_orphans; }
    std::uint32_t selfish_blocks() const { return selfish_official + selfish_orphans; }
    std::uint32_t honest_blocks() const { return honest_official + honest_orphans; }
};

namespace detail {

struct JumpChain {
    double total_rate;
    double honest_probability;

    explicit JumpChain(const Rates& rates)
        : total_rate(rates.total()), honest_probability(rates.honest / rates.total())
    {
    }

    double wait(RandomStream& s) const { return s.exponential(total_rate); }
    bool honest_next(RandomStream& s) const { return s.bernoulli(honest_probability); }
};

inline void require_selfish_rates(const Rates& rates)
{
    if (!(rates.honest > rates.selfish) || !(rates.selfish >= 0.0))
        throw std::invalid_argument("selfish mining cycle needs 0 <= selfish rate < honest rate");
}

} // namespace detail

/// One selfish-mining attack cycle at the given rates.
inline CycleOutcome run_selfish_cycle(const Rates& rates, double gamma, double b, RandomStream& stream)
{
    detail::require_selfish_rates(rates);
    const detail::JumpChain chain(rates);
    CycleOutcome out;

    double t = chain.wait(stream);
    if (chain.honest_next(stream)) {
        out.duration = t;
        out.honest_official = 1;
        out.which = CycleCase::HonestFirst;
        return out;
    }

    // Private lead of one.
    t += chain.wait(stream);
    if (chain.honest_next(stream)) {
        // Honest block equalizes; the attacker publishes and the race is
        // decided by the next block.
        t += chain.wait(stream);
        if (chain.honest_next(stream)) {
            out.which = CycleCase::TieHonestWon;
            if (stream.bernoulli(gamma)) {
                out.selfish_official = 1;
                out.honest_official = 1;
                out.honest_orphans = 1;
            } else {
                out.honest_official = 2;
                out.selfish_orphans = 1;
            }
        } else {
            out.which = CycleCase::TieSelfishWon;
            out.selfish_official = 2;
            out.honest_orphans = 1;
        }
        out.duration = t;
        out.selfish_revenue = out.selfish_official * b;
        return out;
    }

    // Lead of two before any honest block: run until honest = selfish - 1.
    out.which = CycleCase::Lead;
    const double lead_start = t;
    std::uint32_t selfish = 2;
    std::uint32_t honest = 0;
    while (honest + 1 != selfish) {
        t += chain.wait(stream);
        if (chain.honest_next(stream))
            ++honest;
        else
            ++selfish;
    }
    out.duration = t;
    out.lead_duration = t - lead_start;
    out.selfish_official = selfish;
    out.honest_orphans = honest;
    out.selfish_revenue = selfish * b;
    return out;
}

inline CycleOutcome run_selfish_cycle(const NetworkParams& params, RandomStream& stream)
{
    return run_selfish_cycle(base_rates(params), params.gamma(), params.b(), stream);
}

/// One honest-strategy cycle: the first block of either side ends it.
inline CycleOutcome run_honest_cycle(const Rates& rates, double b, RandomStream& stream)
{
    const double honest_time = stream.exponential(rates.honest);
    const double selfish_time =
        rates.selfish > 0.0 ? stream.exponential(rates.selfish) : std::numeric_limits<double>::infinity();
    CycleOutcome out;
    out.which = CycleCase::Honest;
    if (selfish_time < honest_time) {
        out.duration = selfish_time;
        out.selfish_official = 1;
        out.selfish_revenue = b;
    } else {
        out.duration = honest_time;
        out.honest_official = 1;
    }
    return out;
}

inline CycleOutcome run_honest_cycle(const NetworkParams& params, RandomStream& stream)
{
    return run_honest_cycle(base_rates(params), params.b(), stream);
}

struct RaceOutcome {
    double duration = 0.0;
    std::uint64_t fast_count = 0;
    std::uint64_t slow_count = 0;
};

/// Time until the fast process leads the slow one by target_lead events.
inline RaceOutcome run_poisson_race(double rate_fast, double rate_slow, std::uint32_t target_lead,
                                    RandomStream& stream)
{
    if (!(rate_fast > rate_slow) || !(rate_slow >= 0.0))
        throw std::invalid_argument("poisson race needs rate_fast > rate_slow >= 0");
    if (target_lead < 1)
        throw std::invalid_argument("poisson race target lead must be at least 1");
    const detail::JumpChain chain(Rates{rate_fast, rate_slow});
    RaceOutcome out;
    while (out.fast_count < out.slow_count + target_lead) {
        out.duration += chain.wait(stream);
        if (chain.honest_next(stream))
            ++out.fast_count;
        else
            ++out.slow_count;
    }
    return out;
}

enum class CycleKind { Honest, SelfishMining };

/// Poisson race with the honest network as the fast process.
struct PoissonRace {
    std::uint32_t target_lead = 1;
};

/// Number of independent sub-streams a cycle run is split into. Each batch
/// has its own derived stream, so results do not depend on thread count,
/// and the batch totals feed the batch-means ratio estimator.
inline constexpr std::size_t kCycleBatches = 32;

struct CycleStatistics {
    std::uint64_t n_cycles = 0;
    EstimateWithCI duration;
    EstimateWithCI revenue;
    EstimateWithCI selfish_official;
    EstimateWithCI honest_official;
    EstimateWithCI selfish_orphans;
    EstimateWithCI honest_orphans;
    /// sum(revenue) / sum(duration); std_error is NaN with fewer than 8 batches.
    EstimateWithCI revenue_ratio;
    /// sum(selfish official) / sum(official).
    EstimateWithCI official_share;
    /// Frequencies of the four selfish-mining cases (a)..(d).
    std::array<EstimateWithCI, 4> case_frequency{};
    /// Mean time spent in the lead race, over case-(d) cycles only.
    std::optional<EstimateWithCI> lead_duration;
    /// Per-cycle check failures (official-block identity, orphan bound);
    /// zero for a correct simulator.
    std::uint64_t invariant_violations = 0;
};

namespace detail {

struct CycleBatch {
    RunningStats duration, revenue, selfish_official, honest_official, selfish_orphans, honest_orphans, lead;
    std::array<RunningStats, 4> cases;
    double sum_revenue = 0.0, sum_duration = 0.0, sum_selfish_official = 0.0, sum_official = 0.0;
    std::uint64_t violations = 0;

    void add(const CycleOutcome& c)
    {
        duration.add(c.duration);
        revenue.add(c.selfish_revenue);
        selfish_official.add(c.selfish_official);
        honest_official.add(c.honest_official);
        selfish_orphans.add(c.selfish_orphans);
        honest_orphans.add(c.honest_orphans);
        if (c.which != CycleCase::Honest)
            for (std::size_t k = 0; k < 4; ++k)
                cases[k].add(static_cast<std::size_t>(c.which) == k ? 1.0 : 0.0);
        if (c.which == CycleCase::Lead)
            lead.add(c.lead_duration);
        sum_revenue += c.selfish_revenue;
        sum_duration += c.duration;
        sum_selfish_official += c.selfish_official;
        sum_official += c.official();
    }

    void merge(const CycleBatch& o)
    {
        duration.merge(o.duration);
        revenue.merge(o.revenue);
        selfish_official.merge(o.selfish_official);
        honest_official.merge(o.honest_official);
        selfish_orphans.merge(o.selfish_orphans);
        honest_orphans.merge(o.honest_orphans);
        lead.merge(o.lead);
        for (std::size_t k = 0; k < 4; ++k)
            cases[k].merge(o.cases[k]);
        sum_revenue += o.sum_revenue;
        sum_duration += o.sum_duration;
        sum_selfish_official += o.sum_selfish_official;
        sum_official += o.sum_official;
        violations += o.violations;
    }
};

/// Exact per-cycle invariants of a selfish-mining cycle.
inline bool selfish_cycle_consistent(const CycleOutcome& c, double b)
{
    const std::uint32_t all = c.selfish_blocks() + c.honest_blocks();
    return c.duration > 0.0 && 2 * c.official() == all + 1 && c.selfish_orphans <= 1 &&
           c.selfish_revenue == c.selfish_official * b;
}

inline EstimateWithCI ratio_from_batches(const std::vector<RatioBatch>& batches)
{
    if (batches.size() >= kMinRatioBatches)
        return ratio_estimate(batches);
    double num = 0.0, den = 0.0;
    for (const auto& b : batches) {
        num += b.numerator;
        den += b.denominator;
    }
    return EstimateWithCI::make(num / den, std::numeric_limits<double>::quiet_NaN(), batches.size());
}

} // namespace detail

/// Runs n_cycles independent cycles of the requested kind.
inline CycleStatistics estimate_cycle_statistics(const NetworkParams& params, CycleKind kind, std::uint64_t n_cycles,
                                                 std::uint64_t seed)
{
    if (n_cycles < 2)
        throw std::invalid_argument("cycle statistics need at least two cycles");
    const Rates rates = base_rates(params);
    if (kind == CycleKind::SelfishMining)
        detail::require_selfish_rates(rates);
    const std::size_t batches = static_cast<std::size_t>(std::min<std::uint64_t>(kCycleBatches, n_cycles));
    std::vector<detail::CycleBatch> parts(batches);
    parallel_for(batches, [&](std::size_t i) {
        const std::uint64_t count = n_cycles / batches + (i < n_cycles % batches ? 1 : 0);
        RandomStream stream = RandomStream::derive(seed, i);
        auto& part = parts[i];
        for (std::uint64_t k = 0; k < count; ++k) {
            if (kind == CycleKind::SelfishMining) {
                const auto c = run_selfish_cycle(rates, params.gamma(), params.b(), stream);
                if (!detail::selfish_cycle_consistent(c, params.b()))
                    ++part.violations;
                part.add(c);
            } else {
                part.add(run_honest_cycle(rates, params.b(), stream));
            }
        }
    });

    detail::CycleBatch all;
    std::vector<RatioBatch> revenue_batches, share_batches;
    for (const auto& p : parts) {
        all.merge(p);
        revenue_batches.push_back({p.sum_revenue, p.sum_duration});
        share_batches.push_back({p.sum_selfish_official, p.sum_official});
    }
    CycleStatistics s;
    s.n_cycles = n_cycles;
    s.duration = all.duration.estimate();
    s.revenue = all.revenue.estimate();
    s.selfish_official = all.selfish_official.estimate();
    s.honest_official = all.honest_official.estimate();
    s.selfish_orphans = all.selfish_orphans.estimate();
    s.honest_orphans = all.honest_orphans.estimate();
    s.revenue_ratio = detail::ratio_from_batches(revenue_batches);
    s.official_share = detail::ratio_from_batches(share_batches);
    if (kind == CycleKind::SelfishMining)
        for (std::size_t k = 0; k < 4; ++k)
            s.case_frequency[k] = all.cases[k].estimate();
    if (all.lead.count() >= 2)
        s.lead_duration = all.lead.estimate();
    s.invariant_violations = all.violations;
    return s;
}

struct RaceStatistics {
    std::uint64_t n_races = 0;
    EstimateWithCI duration;
    EstimateWithCI fast_count;
    EstimateWithCI slow_count;
};

inline RaceStatistics estimate_race_statistics(double rate_fast, double rate_slow, std::uint32_t target_lead,
                                               std::uint64_t n_races, std::uint64_t seed)
{
    if (n_races < 2)
        throw std::invalid_argument("race statistics need at least two races");
    if (!(rate_fast > rate_slow) || !(rate_slow >= 0.0))
        throw std::invalid_argument("poisson race needs rate_fast > rate_slow >= 0");
    struct Part {
        RunningStats duration, fast, slow;
    };
    const std::size_t batches = static_cast<std::size_t>(std::min<std::uint64_t>(kCycleBatches, n_races));
    std::vector<Part> parts(batches);
    parallel_for(batches, [&](std::size_t i) {
        const std::uint64_t count = n_races / batches + (i < n_races % batches ? 1 : 0);
        RandomStream stream = RandomStream::derive(seed, i);
        for (std::uint64_t k = 0; k < count; ++k) {
            const auto r = run_poisson_race(rate_fast, rate_slow, target_lead, stream);
            parts[i].duration.add(r.duration);
            parts[i].fast.add(static_cast<double>(r.fast_count));
            parts[i].slow.add(static_cast<double>(r.slow_count));
        }
    });
    Part all;
    for (const auto& p : parts) {
        all.duration.merge(p.duration);
        all.fast.merge(p.fast);
        all.slow.merge(p.slow);
    }
    return {n_races, all.duration.estimate(), all.fast.estimate(), all.slow.estimate()};
}

/// Race between the honest network (fast) and the attacker (slow).
inline RaceStatistics estimate_cycle_statistics(const NetworkParams& params, PoissonRace race, std::uint64_t n_races,
                                                std::uint64_t seed)
{
    const Rates rates = base_rates(params);
    return estimate_race_statistics(rates.honest, rates.selfish, race.target_lead, n_races, seed);
}

} // namespace selfish
