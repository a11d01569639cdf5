#pragma once

// Closed-form profitability quantities for block-withholding mining.
//
// The formula:: templates take the relative hashrate q and connectivity
// gamma as any field type (double, boost::rational, ...) so exact rational
// evaluation is available to tests; the params-level functions below are
// the double-precision API consumed by the simulators and the CLI.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "selfish/model.hpp"

namespace selfish {

/// Official blocks between two difficulty adjustments.
inline constexpr std::uint32_t kDefaultBlocksPerEpoch = 2016;
inline constexpr double kSecondsPerWeek = 7.0 * 86400.0;

namespace formula {

/// ((1+pq)(p-q) + pq): the numerator shared by the cycle expectations.
template <class Real>
Real cycle_numerator(const Real& q)
{
    const Real one(1);
    const Real p = one - q;
    return (one + p * q) * (p - q) + p * q;
}

/// E[cycle duration] / tau0.
template <class Real>
Real cycle_duration_factor(const Real& q)
{
    const Real p = Real(1) - q;
    return cycle_numerator(q) / (p - q);
}

/// E[cycle revenue] / b.
template <class Real>
Real cycle_revenue_blocks(const Real& q, const Real& gamma)
{
    const Real one(1);
    const Real p = one - q;
    return cycle_duration_factor(q) * q - (one - gamma) * p * p * q;
}

/// p^2 q + p - q: expected official blocks per cycle times (p - q).
template <class Real>
Real official_denominator(const Real& q)
{
    const Real p = Real(1) - q;
    return p * p * q + p - q;
}

/// Long-run share of the official chain mined by the attacker.
template <class Real>
Real apparent_hashrate(const Real& q, const Real& gamma)
{
    const Real one(1);
    const Real p = one - q;
    return (cycle_numerator(q) * q - (one - gamma) * p * p * q * (p - q)) / official_denominator(q);
}

/// Same quantity in the relative-revenue ("R_pool") arrangement.
template <class Real>
Real apparent_hashrate_pool_form(const Real& q, const Real& gamma)
{
    const Real one(1);
    const Real two(2);
    const Real u = one - q;
    return (q * u * u * (Real(4) * q + gamma * (one - two * q)) - q * q * q) / (one - q * (one + q * (two - q)));
}

/// q'/q with the factor q cancelled, so it is defined at q = 0.
template <class Real>
Real apparent_hashrate_ratio(const Real& q, const Real& gamma)
{
    const Real one(1);
    const Real p = one - q;
    return (cycle_numerator(q) - (one - gamma) * p * p * (p - q)) / official_denominator(q);
}

/// Expected rate multiplier at the first adjustment; independent of gamma.
template <class Real>
Real expected_delta(const Real& q)
{
    const Real p = Real(1) - q;
    return (p - q + p * q * (p - q) + p * q) / official_denominator(q);
}

/// Unclamped connectivity threshold (1 - 3q)/(1 - 2q).
template <class Real>
Real gamma_threshold_raw(const Real& q)
{
    const Real one(1);
    return (one - Real(3) * q) / (one - Real(2) * q);
}

/// Hashrate threshold (1 - gamma)/(3 - 2 gamma).
template <class Real>
Real q_threshold(const Real& gamma)
{
    const Real one(1);
    return (one - gamma) / (Real(3) - Real(2) * gamma);
}

} // namespace formula

inline void require_below_half(const NetworkParams& params)
{
    // NetworkParams already enforces q < 1/2; this guards the division by p - q
    // against a q that rounds to 1/2.
    if (!(params.p() - params.q() > 0.0))
        throw std::invalid_argument("q must be strictly below 1/2");
}

inline double honest_revenue_ratio(const NetworkParams& params) { return params.q() * params.b() / params.tau0(); }

struct CycleExpectations {
    double duration;
    double revenue;
};

inline CycleExpectations selfish_cycle_expectations(const NetworkParams& params)
{
    require_below_half(params);
    return {formula::cycle_duration_factor(params.q()) * params.tau0(),
            formula::cycle_revenue_blocks(params.q(), params.gamma()) * params.b()};
}

/// Revenue ratio of the selfish strategy before any difficulty adjustment.
inline double selfish_revenue_ratio_pre(const NetworkParams& params)
{
    const auto e = selfish_cycle_expectations(params);
    return e.revenue / e.duration;
}

/// Upper bound alpha' * b on the revenue ratio of any strategy without
/// difficulty adjustment; coincides with the honest ratio.
inline double stability_bound(const NetworkParams& params) { return derived_rates(params).alpha_prime * params.b(); }

inline double apparent_hashrate(const NetworkParams& params)
{
    require_below_half(params);
    return formula::apparent_hashrate(params.q(), params.gamma());
}

inline double apparent_hashrate_pool_form(const NetworkParams& params)
{
    require_below_half(params);
    return formula::apparent_hashrate_pool_form(params.q(), params.gamma());
}

inline double expected_delta(const NetworkParams& params)
{
    require_below_half(params);
    return formula::expected_delta(params.q());
}

inline double post_adjustment_revenue_ratio(const NetworkParams& params)
{
    return apparent_hashrate(params) * params.b() / params.tau0();
}

/// Second route: pre-adjustment ratio scaled by the expected multiplier.
inline double post_adjustment_revenue_ratio_via_delta(const NetworkParams& params)
{
    return selfish_revenue_ratio_pre(params) * expected_delta(params);
}

struct Thresholds {
    double gamma_min; ///< max(0, (1-3q)/(1-2q))
    double q_min;     ///< (1-gamma)/(3-2gamma)
};

inline Thresholds profitability_thresholds(const NetworkParams& params)
{
    require_below_half(params);
    const double g = formula::gamma_threshold_raw(params.q());
    return {g > 0.0 ? g : 0.0, formula::q_threshold(params.gamma())};
}

/// Sign with a relative dead band, so values at a threshold compare as 0.
inline int sign_with_tolerance(double x, double scale = 1.0, double rel = 1e-12)
{
    if (std::abs(x) <= rel * std::max(1.0, std::abs(scale)))
        return 0;
    return x > 0 ? 1 : -1;
}

inline bool outperforms_honest_after_adjustment(const NetworkParams& params)
{
    const double qp = apparent_hashrate(params);
    return sign_with_tolerance(qp - params.q(), params.q()) > 0;
}

/// Expected time from attack start until selfish revenue catches up with the
/// honest counterfactual, in seconds. std::nullopt means the attack never
/// breaks even (q' <= q).
inline std::optional<double> breakeven_time(const NetworkParams& params,
                                            std::uint32_t n0 = kDefaultBlocksPerEpoch)
{
    if (!outperforms_honest_after_adjustment(params))
        return std::nullopt;
    const double qp = apparent_hashrate(params);
    const double delta = expected_delta(params);
    return qp * (delta - 1.0) / (qp - params.q()) * static_cast<double>(n0) * params.tau0();
}

/// Profit per unit time; the cost ratio is the same for every strategy.
inline double pnl_rate(double revenue_ratio, const NetworkParams& params) { return revenue_ratio - params.cost_rate(); }

/// Whether an infinitesimal honest miner gains by joining the pool:
/// q'/q > (1-q')/(1-q). Not applicable at q = 0.
inline std::optional<bool> pool_attractiveness(const NetworkParams& params)
{
    if (params.q() <= 0.0)
        return std::nullopt;
    const double qp = apparent_hashrate(params);
    const double lhs = qp / params.q();
    const double rhs = (1.0 - qp) / (1.0 - params.q());
    return sign_with_tolerance(lhs - rhs, lhs) > 0;
}

inline constexpr double kDefaultFiniteDifferenceStep = 1e-4;

/// Centered finite difference of q'/q with respect to q.
inline double apparent_ratio_slope(const NetworkParams& params, double step = kDefaultFiniteDifferenceStep)
{
    const double q = params.q();
    if (!(step > 0.0) || !(q - step > 0.0) || !(q + step < 0.5))
        throw std::invalid_argument("finite-difference stencil must stay inside (0, 1/2)");
    const double g = params.gamma();
    return (formula::apparent_hashrate_ratio(q + step, g) - formula::apparent_hashrate_ratio(q - step, g)) /
           (2.0 * step);
}

/// Whether pool members gain by admitting an infinitesimal new member,
/// i.e. q'/q is increasing in q at this point.
inline bool pool_acceptance(const NetworkParams& params, double step = kDefaultFiniteDifferenceStep)
{
    return apparent_ratio_slope(params, step) > 0.0;
}

struct AnalyticsReport {
    double q = 0.0;
    double gamma = 0.0;
    double tau0 = 0.0;
    double b = 0.0;
    std::uint32_t n0 = kDefaultBlocksPerEpoch;

    double gamma_h = 0.0;
    double gamma_sm_pre = 0.0;
    double expected_cycle_duration = 0.0;
    double expected_cycle_revenue = 0.0;
    double apparent_hashrate = 0.0;
    double apparent_hashrate_ratio = 0.0; ///< q'/q (limit value at q = 0)
    double expected_delta = 0.0;
    double gamma_sm_post = 0.0;
    std::optional<double> breakeven_time; ///< seconds; empty = never profitable
    double gamma_threshold = 0.0;
    double q_threshold = 0.0;
    double pnl_rate_pre = 0.0;
    double pnl_rate_post = 0.0;
    double pnl_rate_honest = 0.0;
    std::optional<bool> pool_attractive;
};

inline AnalyticsReport make_report(const NetworkParams& params, std::uint32_t n0 = kDefaultBlocksPerEpoch)
{
    AnalyticsReport r;
    r.q = params.q();
    r.gamma = params.gamma();
    r.tau0 = params.tau0();
    r.b = params.b();
    r.n0 = n0;
    const auto cycle = selfish_cycle_expectations(params);
    r.gamma_h = honest_revenue_ratio(params);
    r.expected_cycle_duration = cycle.duration;
    r.expected_cycle_revenue = cycle.revenue;
    r.gamma_sm_pre = cycle.revenue / cycle.duration;
    r.apparent_hashrate = apparent_hashrate(params);
    r.apparent_hashrate_ratio = formula::apparent_hashrate_ratio(params.q(), params.gamma());
    r.expected_delta = expected_delta(params);
    r.gamma_sm_post = post_adjustment_revenue_ratio(params);
    r.breakeven_time = breakeven_time(params, n0);
    const auto th = profitability_thresholds(params);
    r.gamma_threshold = th.gamma_min;
    r.q_threshold = th.q_min;
    r.pnl_rate_pre = pnl_rate(r.gamma_sm_pre, params);
    r.pnl_rate_post = pnl_rate(r.gamma_sm_post, params);
    r.pnl_rate_honest = pnl_rate(r.gamma_h, params);
    r.pool_attractive = pool_attractiveness(params);
    return r;
}

struct SweepGrid {
    double q_min = 0.0;
    double q_max = 0.49;
    std::uint32_t q_steps = 50; ///< number of q points, endpoints included
    std::vector<double> gammas{0.0, 0.5, 1.0};
};

inline std::vector<double> grid_points(double lo, double hi, std::uint32_t steps)
{
    std::vector<double> out;
    if (steps == 0)
        return out;
    if (steps == 1) {
        out.push_back(lo);
        return out;
    }
    out.reserve(steps);
    for (std::uint32_t i = 0; i < steps; ++i)
        out.push_back(i + 1 == steps ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1));
    return out;
}

/// One report per (gamma, q) grid point, gamma-major.
inline std::vector<AnalyticsReport> figure_sweep(const SweepGrid& grid, double tau0 = 600.0, double b = 1.0,
                                                 double cost_rate = 0.0,
                                                 std::uint32_t n0 = kDefaultBlocksPerEpoch)
{
    if (grid.q_steps == 0 || grid.gammas.empty())
        throw std::invalid_argument("sweep grid is empty");
    if (!(grid.q_min >= 0.0 && grid.q_max < 0.5 && grid.q_min <= grid.q_max))
        throw std::invalid_argument("sweep q range must lie in [0, 1/2)");
    std::vector<AnalyticsReport> rows;
    rows.reserve(grid.q_steps * grid.gammas.size());
    for (double g : grid.gammas)
        for (double q : grid_points(grid.q_min, grid.q_max, grid.q_steps))
            rows.push_back(make_report(NetworkParams(q, g, tau0, b, cost_rate), n0));
    return rows;
}

struct BreakevenMinimum {
    double q;
    double breakeven_epochs; ///< E[T0] / (n0 tau0)
};

/// Golden-section search for the q minimizing E[T0] at fixed gamma on
/// (lo, hi). E[T0] is unimodal there for gamma < 1; the bracket must lie in
/// the profitable region.
inline BreakevenMinimum minimize_breakeven(double gamma, double lo, double hi, double tol = 1e-10)
{
    auto epochs = [gamma](double q) {
        const auto t = breakeven_time(NetworkParams(q, gamma, 1.0), 1);
        if (!t)
            throw std::invalid_argument("breakeven bracket includes an unprofitable q");
        return *t;
    };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = epochs(c);
    double fd = epochs(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = epochs(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = epochs(d);
        }
    }
    const double q = 0.5 * (a + b);
    return {q, epochs(q)};
}

} // namespace selfish
