#pragma once

// Simulation runs paired with their closed-form targets.

#include <cstdint>
#include <string>

#include "selfish/analytics.hpp"
#include "selfish/cycle_sim.hpp"
#include "selfish/epoch_sim.hpp"
#include "selfish/report.hpp"

namespace selfish {

/// Relative tolerance for Monte Carlo break-even against the closed form.
inline constexpr double kBreakevenRelativeTolerance = 0.05;

inline const char* policy_name(AdjustmentPolicy p) { return p == AdjustmentPolicy::Legacy ? "legacy" : "orphan-aware"; }

inline ordered_json params_json(const NetworkParams& params)
{
    return {{"q", params.q()},   {"gamma", params.gamma()},         {"tau0", params.tau0()},
            {"b", params.b()},   {"cost_rate", params.cost_rate()}};
}

inline JsonReport cycles_report(const NetworkParams& params, CycleKind kind, std::uint64_t n_cycles,
                                std::uint64_t seed)
{
    JsonReport rep;
    rep.config = params_json(params);
    rep.config["mode"] = "cycles";
    rep.config["kind"] = kind == CycleKind::Honest ? "honest" : "selfish";
    rep.config["n_cycles"] = n_cycles;
    rep.seed = seed;
    rep.has_seed = true;

    const auto s = estimate_cycle_statistics(params, kind, n_cycles, seed);
    rep.add("cycle_duration", s.duration, "s");
    rep.add("cycle_revenue", s.revenue, "reward");
    rep.add("revenue_ratio", s.revenue_ratio, "reward/s");
    rep.add("official_share", s.official_share, "1");
    rep.add("selfish_orphans_per_cycle", s.selfish_orphans, "1");
    rep.add("honest_orphans_per_cycle", s.honest_orphans, "1");
    auto& v = rep.verdicts;
    const double q = params.q();
    const double p = params.p();

    if (kind == CycleKind::Honest) {
        rep.add("selfish_win_rate", s.selfish_official, "1");
        v.push_back(compare_equal("cycle_duration", params.tau0(), s.duration));
        v.push_back(compare_equal("selfish_win_rate", q, s.selfish_official));
        v.push_back(compare_equal("revenue_ratio", honest_revenue_ratio(params), s.revenue_ratio));
        return rep;
    }

    const auto exp = selfish_cycle_expectations(params);
    static const char* case_names[] = {"case_honest_first", "case_tie_honest_won", "case_tie_selfish_won",
                                       "case_lead"};
    const double case_target[] = {p, p * p * q, p * q * q, q * q};
    for (std::size_t k = 0; k < 4; ++k) {
        rep.add(std::string(case_names[k]) + "_frequency", s.case_frequency[k], "1");
        v.push_back(compare_equal(std::string(case_names[k]) + "_frequency", case_target[k], s.case_frequency[k]));
    }
    v.push_back(compare_equal("cycle_duration", exp.duration, s.duration));
    v.push_back(compare_equal("cycle_revenue", exp.revenue, s.revenue));
    v.push_back(compare_equal("revenue_ratio", exp.revenue / exp.duration, s.revenue_ratio));
    v.push_back(compare_at_most("revenue_ratio_stability_bound", stability_bound(params), s.revenue_ratio));
    v.push_back(compare_equal("official_share", apparent_hashrate(params), s.official_share));
    v.push_back(compare_equal("selfish_orphans_per_cycle", p * p * q * (1.0 - params.gamma()), s.selfish_orphans));
    if (s.lead_duration) {
        rep.add("lead_race_duration", *s.lead_duration, "s");
        v.push_back(compare_equal("lead_race_duration", 1.0 / (derived_rates(params).alpha - derived_rates(params).alpha_prime),
                                  *s.lead_duration));
    }
    rep.config["invariant_violations"] = s.invariant_violations;
    return rep;
}

inline JsonReport epochs_report(const NetworkParams& params, AdjustmentPolicy policy, std::uint32_t n_epochs,
                                std::uint64_t n_replications, std::uint64_t seed,
                                std::uint32_t n0 = kDefaultBlocksPerEpoch)
{
    JsonReport rep;
    rep.config = params_json(params);
    rep.config["mode"] = "epochs";
    rep.config["policy"] = policy_name(policy);
    rep.config["n_epochs"] = n_epochs;
    rep.config["n_replications"] = n_replications;
    rep.config["n0"] = n0;
    rep.seed = seed;
    rep.has_seed = true;

    const auto runs = run_epoch_replications(params, policy, n_epochs, n_replications, seed, n0);
    const auto s = summarize_epochs(runs, params, n0);
    auto& v = rep.verdicts;
    const double delta = expected_delta(params);
    const double honest = honest_revenue_ratio(params);

    rep.add("first_epoch_slowdown", s.first_epoch_slowdown, "n0*tau0");
    rep.add("mean_adjustment_factor", s.mean_factor, "1");
    rep.add("mean_adjustment_factor_arithmetic", s.mean_factor_arithmetic, "1");
    rep.add("first_epoch_orphan_rate", s.first_epoch_orphan_rate, "1");
    for (std::size_t e = 0; e < s.revenue_ratio_per_epoch.size(); ++e)
        rep.add("revenue_ratio_epoch_" + std::to_string(e + 1), s.revenue_ratio_per_epoch[e], "reward/s");

    v.push_back(compare_equal("first_epoch_slowdown", delta, s.first_epoch_slowdown));
    v.push_back(compare_equal("first_epoch_orphan_rate", 1.0 - 1.0 / delta, s.first_epoch_orphan_rate));
    v.push_back(compare_at_most("revenue_ratio_epoch_1", honest, s.revenue_ratio_per_epoch.front()));

    if (policy == AdjustmentPolicy::Legacy) {
        if (s.mean_factor_after_first) {
            rep.add("mean_adjustment_factor_after_first", *s.mean_factor_after_first, "1");
            rep.add("mean_adjustment_factor_arithmetic_after_first", *s.mean_factor_arithmetic_after_first, "1");
            rep.add("revenue_ratio_after_first", *s.revenue_ratio_after_first, "reward/s");
            v.push_back(compare_equal("mean_adjustment_factor_after_first", 1.0, *s.mean_factor_after_first));
            v.push_back(compare_equal("revenue_ratio_after_first", post_adjustment_revenue_ratio(params),
                                      *s.revenue_ratio_after_first));
        }
    } else {
        v.push_back(compare_equal("mean_adjustment_factor", 1.0, s.mean_factor));
        for (std::size_t e = 1; e < s.revenue_ratio_per_epoch.size(); ++e)
            v.push_back(compare_at_most("revenue_ratio_epoch_" + std::to_string(e + 1), honest,
                                        s.revenue_ratio_per_epoch[e]));
        if (s.production_rate_after_first) {
            rep.add("block_production_rate_after_first", *s.production_rate_after_first, "1/tau0");
            v.push_back(compare_equal("block_production_rate_after_first", 1.0, *s.production_rate_after_first));
        }
    }
    return rep;
}

inline JsonReport breakeven_report(const NetworkParams& params, std::uint64_t n_replications,
                                   std::uint32_t horizon_epochs, std::uint64_t seed,
                                   std::uint32_t n0 = kDefaultBlocksPerEpoch)
{
    JsonReport rep;
    rep.config = params_json(params);
    rep.config["mode"] = "breakeven";
    rep.config["n_replications"] = n_replications;
    rep.config["horizon_epochs"] = horizon_epochs;
    rep.config["n0"] = n0;
    rep.seed = seed;
    rep.has_seed = true;

    const auto analytic = breakeven_time(params, n0);
    const auto est = empirical_breakeven(params, n_replications, horizon_epochs, seed, n0);
    rep.config["never_profitable"] = est.never_profitable;
    if (est.never_profitable)
        return rep;
    const double window = static_cast<double>(n0) * params.tau0();
    rep.config["analytic_breakeven_seconds"] = *analytic;
    rep.config["censored_fraction"] = est.censored_fraction;
    rep.config["heavily_censored"] = est.heavily_censored;
    if (est.first_passage)
        rep.add("first_passage_breakeven", *est.first_passage, "s");
    if (est.expected_curve_crossing) {
        const auto& c = *est.expected_curve_crossing;
        rep.add("expected_breakeven", c, "s");
        rep.add("expected_breakeven_epochs",
                EstimateWithCI::make(c.mean / window, c.std_error / window, c.n, c.z), "n0*tau0");
        rep.verdicts.push_back(compare_relative("expected_breakeven", *analytic, c, kBreakevenRelativeTolerance));
    } else {
        rep.config["expected_breakeven"] = "censored at horizon";
    }
    return rep;
}

} // namespace selfish
