#pragma once

// End-to-end acceptance checks. Each criterion bundles the closed-form
// identities and Monte Carlo comparisons it needs; the tolerances are fixed
// here and are not configurable.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "selfish/analytics.hpp"
#include "selfish/cycle_sim.hpp"
#include "selfish/epoch_sim.hpp"
#include "selfish/experiments.hpp"
#include "selfish/stats.hpp"

namespace selfish::acceptance {

struct Options {
    /// Divides Monte Carlo sample sizes by 10 (see break-even exception).
    bool fast = false;
};

struct Check {
    std::string text;
    bool pass;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    std::vector<Check> checks;

    bool pass() const
    {
        for (const auto& c : checks)
            if (!c.pass)
                return false;
        return !checks.empty();
    }

    void add(bool pass, std::string text) { checks.push_back({std::move(text), pass}); }

    void add(const ComparisonVerdict& v, const std::string& where = {})
    {
        std::ostringstream os;
        os.precision(8);
        os << (where.empty() ? "" : where + " ") << v.quantity << ": " << v.estimate.mean << " +- " << v.estimate.std_error
           << (v.relation == Relation::AtMost ? " <= " : " vs ") << v.target;
        if (v.relation == Relation::WithinRelative)
            os << " (rel err " << std::abs(v.estimate.mean - v.target) / std::abs(v.target) << ", tol " << v.tolerance
               << ")";
        else
            os << " (z=" << v.z_score << ")";
        add(v.pass, os.str());
    }
};

inline std::string point_label(double q, double gamma)
{
    std::ostringstream os;
    os << "[q=" << q << " gamma=" << gamma << "]";
    return os.str();
}

inline bool relative_close(double a, double b, double rel)
{
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) || a == b;
}

inline const std::vector<double>& cycle_grid_q()
{
    static const std::vector<double> v{0.1, 0.2, 0.3, 0.4};
    return v;
}
inline const std::vector<double>& cycle_grid_gamma()
{
    static const std::vector<double> v{0.0, 0.5, 1.0};
    return v;
}

/// Cycle statistics on the grid shared by criteria 2-5.
class CycleGrid {
public:
    explicit CycleGrid(std::uint64_t n_cycles) : n_(n_cycles) {}

    const CycleStatistics& at(double q, double gamma)
    {
        const auto key = std::make_pair(q, gamma);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            const std::uint64_t seed = 2000 + static_cast<std::uint64_t>(q * 100) * 10 + static_cast<std::uint64_t>(gamma * 2);
            it = cache_.emplace(key, estimate_cycle_statistics(NetworkParams(q, gamma), CycleKind::SelfishMining, n_, seed))
                     .first;
        }
        return it->second;
    }

private:
    std::uint64_t n_;
    std::map<std::pair<double, double>, CycleStatistics> cache_;
};

struct Context {
    Options options;
    CycleGrid grid;

    explicit Context(Options o) : options(o), grid(o.fast ? 100'000 : 1'000'000) {}

    std::uint64_t scaled(std::uint64_t full) const { return options.fast ? std::max<std::uint64_t>(full / 10, 1) : full; }
};

inline CriterionResult honest_baseline(Context& ctx)
{
    CriterionResult r{1, "honest baseline", {}};
    for (double q : {0.1, 0.3}) {
        const NetworkParams params(q, 0.0);
        const auto s = estimate_cycle_statistics(params, CycleKind::Honest, ctx.scaled(1'000'000), 100 + static_cast<std::uint64_t>(q * 10));
        const auto label = point_label(q, 0.0);
        r.add(compare_equal("cycle_duration", params.tau0(), s.duration), label);
        r.add(compare_equal("selfish_win_rate", q, s.selfish_official), label);
    }
    return r;
}

inline CriterionResult cycle_expectations(Context& ctx)
{
    CriterionResult r{2, "selfish cycle expectations", {}};
    for (double q : cycle_grid_q())
        for (double g : cycle_grid_gamma()) {
            const NetworkParams params(q, g);
            const auto& s = ctx.grid.at(q, g);
            const auto e = selfish_cycle_expectations(params);
            const auto label = point_label(q, g);
            r.add(compare_equal("cycle_duration", e.duration, s.duration), label);
            r.add(compare_equal("cycle_revenue", e.revenue, s.revenue), label);
            r.add(s.invariant_violations == 0, label + " per-cycle block identities: " +
                                                   std::to_string(s.invariant_violations) + " violations");
        }
    return r;
}

inline CriterionResult pre_adjustment_dominance(Context& ctx)
{
    CriterionResult r{3, "pre-adjustment dominance", {}};
    for (double q : cycle_grid_q())
        for (double g : cycle_grid_gamma()) {
            if (g >= 1.0)
                continue;
            const NetworkParams params(q, g);
            const double selfish = selfish_revenue_ratio_pre(params);
            const double honest = honest_revenue_ratio(params);
            const auto label = point_label(q, g);
            r.add(selfish < honest, label + " closed form " + std::to_string(selfish * 600) + " < " +
                                        std::to_string(honest * 600) + " (b/tau0)");
            r.add(compare_at_most("revenue_ratio", honest, ctx.grid.at(q, g).revenue_ratio), label);
        }
    bool dense = true;
    for (double q : grid_points(0.01, 0.49, 49))
        for (double g : grid_points(0.0, 0.95, 20)) {
            const NetworkParams params(q, g);
            dense = dense && selfish_revenue_ratio_pre(params) < honest_revenue_ratio(params);
        }
    r.add(dense, "closed form strictly below honest on 49 x 20 grid, gamma in [0, 0.95]");
    return r;
}

inline CriterionResult stability_bound_check(Context& ctx)
{
    CriterionResult r{4, "stability bound", {}};
    for (double q : cycle_grid_q())
        for (double g : cycle_grid_gamma()) {
            const NetworkParams params(q, g);
            r.add(compare_at_most("revenue_ratio", stability_bound(params), ctx.grid.at(q, g).revenue_ratio),
                  point_label(q, g));
        }
    return r;
}

inline CriterionResult apparent_hashrate_check(Context& ctx)
{
    CriterionResult r{5, "apparent hashrate", {}};
    for (double q : cycle_grid_q())
        for (double g : cycle_grid_gamma())
            r.add(compare_equal("official_share", apparent_hashrate(NetworkParams(q, g)), ctx.grid.at(q, g).official_share),
                  point_label(q, g));
    std::size_t points = 0;
    double worst = 0.0;
    for (double q : grid_points(0.01, 0.49, 40))
        for (double g : grid_points(0.0, 1.0, 25)) {
            const double a = formula::apparent_hashrate(q, g);
            const double b = formula::apparent_hashrate_pool_form(q, g);
            worst = std::max(worst, std::abs(a - b) / std::abs(a));
            ++points;
        }
    r.add(worst <= 1e-12, std::to_string(points) + " points, max relative gap between the two forms " + std::to_string(worst));
    return r;
}

inline CriterionResult difficulty_factor(Context& ctx)
{
    CriterionResult r{6, "first difficulty factor", {}};
    const double q = 0.3;
    const std::uint64_t reps = std::max<std::uint64_t>(ctx.scaled(200), 60);
    std::vector<EpochSummary> sums;
    for (double g : {0.0, 1.0}) {
        const NetworkParams params(q, g);
        const auto runs = run_epoch_replications(params, AdjustmentPolicy::Legacy, 1, reps, 600 + static_cast<std::uint64_t>(g));
        sums.push_back(summarize_epochs(runs, params));
        r.add(compare_equal("first_epoch_slowdown", expected_delta(params), sums.back().first_epoch_slowdown), point_label(q, g));
    }
    const auto& a = sums[0].first_epoch_slowdown;
    const auto& b = sums[1].first_epoch_slowdown;
    const auto diff =
        EstimateWithCI::make(a.mean - b.mean, std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error), a.n + b.n);
    r.add(compare_equal("slowdown_gamma0_minus_gamma1", 0.0, diff));

    // Second analytic route: E[delta] = q' / (Gamma_pre tau0 / b), which
    // involves gamma in both factors.
    double worst = 0.0;
    for (double qq : grid_points(0.01, 0.49, 25)) {
        const double reference = formula::expected_delta(qq);
        for (double g : grid_points(0.0, 1.0, 11)) {
            const NetworkParams params(qq, g);
            const double via_ratio = apparent_hashrate(params) / (selfish_revenue_ratio_pre(params) * params.tau0() / params.b());
            worst = std::max(worst, std::abs(via_ratio - reference) / reference);
        }
    }
    r.add(worst <= 1e-12, "E[delta] from q'/Gamma_pre independent of gamma, max relative gap " + std::to_string(worst));
    return r;
}

inline CriterionResult post_adjustment_ratio(Context& ctx)
{
    CriterionResult r{7, "post-adjustment revenue ratio", {}};
    const std::uint64_t reps = std::max<std::uint64_t>(ctx.scaled(200), 60);
    for (auto [q, g] : {std::pair{0.3, 1.0}, std::pair{0.4, 0.5}}) {
        const NetworkParams params(q, g);
        const auto runs = run_epoch_replications(params, AdjustmentPolicy::Legacy, 20, reps, 700 + static_cast<std::uint64_t>(q * 10));
        const auto s = summarize_epochs(runs, params);
        r.add(compare_equal("revenue_ratio_epochs_2_plus", post_adjustment_revenue_ratio(params), *s.revenue_ratio_after_first),
              point_label(q, g));
        r.add(compare_equal("geometric_mean_factor_epochs_2_plus", 1.0, *s.mean_factor_after_first), point_label(q, g));
    }
    return r;
}

inline CriterionResult breakeven_reproduction(Context& ctx)
{
    CriterionResult r{8, "break-even time", {}};
    auto epochs = [](double q, double g) { return *breakeven_time(NetworkParams(q, g, 1.0), 1); };
    std::ostringstream os;

    const double t1 = epochs(0.1, 0.9);
    os << "E[T0](q=0.1, gamma=0.9) = " << t1 << " n0 tau0 vs 5 (tol 2%)";
    r.add(std::abs(t1 - 5.0) <= 0.02 * 5.0, os.str());

    const auto m = minimize_breakeven(0.5, 0.26, 0.4999);
    os.str("");
    os << "argmin_q E[T0](gamma=0.5) = " << m.q << " vs 0.43 (tol 0.005)";
    r.add(std::abs(m.q - 0.43) <= 0.005, os.str());
    os.str("");
    os << "min E[T0](gamma=0.5) = " << m.breakeven_epochs << " n0 tau0 = " << m.breakeven_epochs * 14.0
       << " days vs 1.7 (tol 2%)";
    r.add(std::abs(m.breakeven_epochs - 1.7) <= 0.02 * 1.7, os.str());

    const double limit = epochs(0.4999, 0.5);
    os.str("");
    os << "E[T0](q=0.4999, gamma=0.5) = " << limit << " n0 tau0 vs 2 (tol 0.5%)";
    r.add(std::abs(limit - 2.0) <= 0.005 * 2.0, os.str());

    const double slow = epochs(0.01, 0.99);
    os.str("");
    os << "E[T0](q=0.01, gamma=0.99) = " << slow << " n0 tau0 > 50";
    r.add(slow > 50.0, os.str());

    // The Monte Carlo crossing has a per-replication spread of several
    // epochs against a 5% band, so the replication count is not reduced in
    // fast mode.
    const NetworkParams params(0.1, 0.9);
    const auto est = empirical_breakeven(params, 40'000, 8, 800);
    if (!est.expected_curve_crossing) {
        r.add(false, "empirical break-even censored at horizon");
    } else {
        r.add(compare_relative("empirical_breakeven_seconds", *breakeven_time(params), *est.expected_curve_crossing,
                               kBreakevenRelativeTolerance),
              point_label(0.1, 0.9));
    }
    (void)ctx;
    return r;
}

inline int sign_of(double x, double scale) { return sign_with_tolerance(x, scale); }

inline CriterionResult threshold_consistency(Context&)
{
    CriterionResult r{9, "profitability threshold", {}};
    std::size_t points = 0, mismatches = 0;
    for (double q : grid_points(0.02, 0.48, 20))
        for (double g : grid_points(0.0, 1.0, 10)) {
            const NetworkParams params(q, g);
            const double qp = apparent_hashrate(params);
            const int a = sign_of(qp - q, q);
            const int b = sign_of(g - formula::gamma_threshold_raw(q), 1.0);
            const int c = sign_of(q - formula::q_threshold(g), 1.0);
            ++points;
            if (a != b || b != c)
                ++mismatches;
        }
    r.add(mismatches == 0, std::to_string(points) + "-point grid, sign mismatches: " + std::to_string(mismatches));

    using Rational = boost::rational<long long>;
    const Rational third(1, 3);
    const Rational exact = formula::apparent_hashrate(third, Rational(0));
    r.add(exact == third, "q' at q=1/3, gamma=0 as exact rational: " + std::to_string(exact.numerator()) + "/" +
                              std::to_string(exact.denominator()));
    r.add(formula::gamma_threshold_raw(third) == Rational(0) && formula::q_threshold(Rational(0)) == third,
          "thresholds meet exactly at q=1/3, gamma=0");
    return r;
}

inline CriterionResult pool_conditions(Context&)
{
    CriterionResult r{10, "pool conditions", {}};
    std::size_t points = 0, mismatches = 0;
    for (double q : grid_points(0.01, 0.49, 49))
        for (double g : grid_points(0.0, 1.0, 21)) {
            const NetworkParams params(q, g);
            const bool attractive = *pool_attractiveness(params);
            ++points;
            if (attractive != outperforms_honest_after_adjustment(params))
                ++mismatches;
        }
    r.add(mismatches == 0, "(ob1) <=> q' > q on " + std::to_string(points) + " points, mismatches: " + std::to_string(mismatches));
    for (double g : {0.0, 0.5, 1.0}) {
        double min_slope = std::numeric_limits<double>::infinity();
        bool all = true;
        for (double q : grid_points(0.05, 0.45, 81)) {
            const NetworkParams params(q, g);
            min_slope = std::min(min_slope, apparent_ratio_slope(params));
            all = all && pool_acceptance(params);
        }
        std::ostringstream os;
        os << "d(q'/q)/dq > 0 on q in [0.05, 0.45], gamma=" << g << ", min slope " << min_slope;
        r.add(all, os.str());
    }
    return r;
}

inline CriterionResult corrected_adjustment(Context& ctx)
{
    CriterionResult r{11, "orphan-aware adjustment", {}};
    const std::uint64_t reps = std::max<std::uint64_t>(ctx.scaled(100), 40);
    for (double g : {0.0, 1.0}) {
        const NetworkParams params(0.3, g);
        const auto runs = run_epoch_replications(params, AdjustmentPolicy::OrphanAware, 20, reps, 1100 + static_cast<std::uint64_t>(g));
        const auto s = summarize_epochs(runs, params);
        const auto label = point_label(0.3, g);
        r.add(compare_equal("geometric_mean_adjustment_factor", 1.0, s.mean_factor), label);
        bool all = true;
        double worst_z = -std::numeric_limits<double>::infinity();
        for (const auto& e : s.revenue_ratio_per_epoch) {
            const auto v = compare_at_most("revenue_ratio", honest_revenue_ratio(params), e);
            all = all && v.pass;
            worst_z = std::max(worst_z, v.z_score);
        }
        r.add(all, label + " revenue ratio <= q b/tau0 + 3 se in all 20 epochs, max z " + std::to_string(worst_z));
    }
    return r;
}

inline CriterionResult poisson_race(Context& ctx)
{
    CriterionResult r{12, "poisson race", {}};
    const double a1 = 2.0, a2 = 1.0;
    const auto s = estimate_race_statistics(a1, a2, 1, ctx.scaled(1'000'000), 1200);
    r.add(compare_equal("hitting_time", 1.0 / (a1 - a2), s.duration));
    r.add(compare_equal("fast_count", a1 / (a1 - a2), s.fast_count));
    r.add(compare_equal("slow_count", a2 / (a1 - a2), s.slow_count));
    return r;
}

inline CriterionResult determinism_and_merge(Context&)
{
    CriterionResult r{13, "determinism and merge", {}};
    const NetworkParams params(0.3, 0.5);
    r.add(cycles_report(params, CycleKind::SelfishMining, 100'000, 7).render() ==
              cycles_report(params, CycleKind::SelfishMining, 100'000, 7).render(),
          "simulate cycles report byte-identical across runs");
    r.add(epochs_report(params, AdjustmentPolicy::OrphanAware, 3, 8, 7).render() ==
              epochs_report(params, AdjustmentPolicy::OrphanAware, 3, 8, 7).render(),
          "simulate epochs report byte-identical across runs");
    r.add(breakeven_report(NetworkParams(0.4, 0.5), 50, 4, 7).render() ==
              breakeven_report(NetworkParams(0.4, 0.5), 50, 4, 7).render(),
          "breakeven report byte-identical across runs");

    RandomStream stream(13);
    std::vector<double> xs(1'000'000);
    for (auto& x : xs)
        x = stream.exponential(1.0 / 600.0);
    RunningStats serial;
    for (double x : xs)
        serial.add(x);
    for (std::size_t k : {2u, 7u, 32u}) {
        std::vector<RunningStats> parts(k);
        for (std::size_t i = 0; i < xs.size(); ++i)
            parts[i * k / xs.size()].add(xs[i]);
        RunningStats merged;
        for (const auto& p : parts)
            merged.merge(p);
        const bool ok = merged.count() == serial.count() && relative_close(merged.mean(), serial.mean(), 1e-12) &&
                        relative_close(merged.variance(), serial.variance(), 1e-9);
        r.add(ok, std::to_string(k) + "-way partitioned accumulation matches serial (mean 1e-12, variance 1e-9)");
    }
    return r;
}

using CriterionFn = CriterionResult (*)(Context&);

inline const std::vector<CriterionFn>& criteria()
{
    static const std::vector<CriterionFn> all{honest_baseline,       cycle_expectations,  pre_adjustment_dominance,
                                              stability_bound_check, apparent_hashrate_check, difficulty_factor,
                                              post_adjustment_ratio, breakeven_reproduction,  threshold_consistency,
                                              pool_conditions,       corrected_adjustment,    poisson_race,
                                              determinism_and_merge};
    return all;
}

/// Runs every criterion, printing one PASS/FAIL line per criterion followed
/// by its indented checks. Returns the results.
inline std::vector<CriterionResult> run_all(const Options& options, std::ostream& out, bool verbose = true)
{
    Context ctx(options);
    std::vector<CriterionResult> results;
    for (auto fn : criteria()) {
        auto res = fn(ctx);
        out << (res.pass() ? "PASS" : "FAIL") << " criterion " << res.id << ": " << res.title << "\n";
        for (const auto& c : res.checks)
            if (verbose || !c.pass)
                out << "    " << (c.pass ? "ok   " : "FAIL ") << c.text << "\n";
        out.flush();
        results.push_back(std::move(res));
    }
    return results;
}

} // namespace selfish::acceptance
