#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/rational.hpp>
#include <gtest/gtest.h>

#include "selfish/analytics.hpp"

using namespace selfish;
using Rational = boost::rational<long long>;

namespace {

// Stationary block-by-block state machine of the withholding strategy:
// states 0, 0' (tie) and leads 1..N. Every transition mines one block.
// Returns (attacker share of official blocks, official blocks per mined block).
struct ChainShares {
    double attacker_share;
    double official_per_block;
};

ChainShares state_machine(double q, double gamma)
{
    const double p = 1 - q;
    const int n = 400;
    // index 0: state 0, index 1: tie, index 1 + k: lead k
    std::vector<double> pi(n + 2, 0.0), next(n + 2);
    pi[0] = 1.0;
    for (int it = 0; it < 20000; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        next[0] += pi[0] * p;
        next[2] += pi[0] * q;
        next[0] += pi[1];
        next[3] += pi[2] * q;
        next[1] += pi[2] * p;
        for (int k = 2; k <= n; ++k) {
            if (k < n)
                next[2 + k] += pi[1 + k] * q;
            next[k == 2 ? 0 : k] += pi[1 + k] * p;
        }
        pi.swap(next);
    }
    double pool = 0, others = 0;
    pool += pi[1] * (q * 2 + p * gamma);
    others += pi[1] * (p * gamma + p * (1 - gamma) * 2);
    others += pi[0] * p;
    pool += pi[3] * p * 2;
    for (int k = 3; k <= n; ++k)
        pool += pi[1 + k] * p;
    return {pool / (pool + others), pool + others};
}

} // namespace

TEST(HonestRevenue, Values)
{
    EXPECT_EQ(honest_revenue_ratio(NetworkParams(0.0, 0.5)), 0.0);
    EXPECT_NEAR(honest_revenue_ratio(NetworkParams(0.3, 0.0)), 0.0005, 1e-16);
}

TEST(CycleExpectations, ThirtyPercent)
{
    const auto e = selfish_cycle_expectations(NetworkParams(0.3, 0.0));
    EXPECT_NEAR(e.duration, 1.735 * 600, 1e-9);
    EXPECT_NEAR(e.revenue, 0.3735, 1e-12);
    EXPECT_NEAR(selfish_revenue_ratio_pre(NetworkParams(0.3, 0.0)) * 600, 0.21527, 5e-6);
}

TEST(CycleExpectations, FullConnectivityMatchesHonest)
{
    for (double q = 0.02; q < 0.5; q += 0.04) {
        const NetworkParams pr(q, 1.0);
        const auto e = selfish_cycle_expectations(pr);
        EXPECT_NEAR(e.revenue, q * e.duration * pr.b() / pr.tau0(), 1e-12);
        EXPECT_NEAR(selfish_revenue_ratio_pre(pr), honest_revenue_ratio(pr), 1e-15);
    }
}

TEST(CycleExpectations, NoAttackerLimit)
{
    const auto e = selfish_cycle_expectations(NetworkParams(0.0, 0.3));
    EXPECT_DOUBLE_EQ(e.duration, 600.0);
    EXPECT_EQ(e.revenue, 0.0);
    const auto small = selfish_cycle_expectations(NetworkParams(1e-9, 0.3));
    EXPECT_NEAR(small.duration, 600.0, 1e-5);
}

TEST(StabilityBound, EqualsHonestAndDominates)
{
    for (int i = 1; i <= 9; ++i)
        for (double g : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const NetworkParams pr(i * 0.05, g);
            EXPECT_EQ(stability_bound(pr), honest_revenue_ratio(pr));
            EXPECT_LE(selfish_revenue_ratio_pre(pr), stability_bound(pr) * (1 + 1e-12));
            if (g < 1.0) {
                EXPECT_LT(selfish_revenue_ratio_pre(pr), honest_revenue_ratio(pr));
            }
        }
}

TEST(ApparentHashrate, Values)
{
    EXPECT_NEAR(apparent_hashrate(NetworkParams(0.1, 0.0)), 0.035641, 5e-7);
    EXPECT_NEAR(apparent_hashrate(NetworkParams(0.4, 0.5)), 0.525581, 5e-7);
    EXPECT_EQ(apparent_hashrate(NetworkParams(0.0, 0.5)), 0.0);
    EXPECT_NEAR(apparent_hashrate(NetworkParams(1.0 / 3.0, 0.0)), 1.0 / 3.0, 1e-15);
}

TEST(ApparentHashrate, ExactAtOneThird)
{
    const Rational q(1, 3);
    EXPECT_EQ(formula::apparent_hashrate(q, Rational(0)), q);
    EXPECT_EQ(formula::apparent_hashrate_pool_form(q, Rational(0)), q);
    EXPECT_EQ(formula::gamma_threshold_raw(q), Rational(0));
    EXPECT_EQ(formula::q_threshold(Rational(0)), q);
}

TEST(ApparentHashrate, ExactAgreementOfBothForms)
{
    for (int qn = 1; qn < 20; ++qn)
        for (int gn = 0; gn <= 4; ++gn) {
            const Rational q(qn, 40), g(gn, 4);
            EXPECT_EQ(formula::apparent_hashrate(q, g), formula::apparent_hashrate_pool_form(q, g))
                << "q=" << q << " gamma=" << g;
        }
}

TEST(ApparentHashrate, MatchesStateMachine)
{
    for (double q : {0.1, 0.25, 0.4})
        for (double g : {0.0, 0.5, 1.0}) {
            const auto m = state_machine(q, g);
            EXPECT_NEAR(apparent_hashrate(NetworkParams(q, g)), m.attacker_share, 1e-10) << q << " " << g;
        }
}

TEST(ExpectedDelta, Values)
{
    EXPECT_EQ(expected_delta(NetworkParams(0.0, 0.0)), 1.0);
    EXPECT_NEAR(expected_delta(NetworkParams(0.3, 0.0)), 1.268739, 5e-7);
    // limit 2 at q -> 1/2; ~1.6e-3 short of it at q = 0.4999
    EXPECT_NEAR(expected_delta(NetworkParams(0.4999, 0.0)), 2.0, 2e-3);
    EXPECT_NEAR(expected_delta(NetworkParams(0.4999999, 0.0)), 2.0, 1e-5);
}

TEST(ExpectedDelta, IndependentOfGammaAndMatchesStateMachine)
{
    for (int i = 1; i <= 9; ++i) {
        const double q = i * 0.05;
        const double d = expected_delta(NetworkParams(q, 0.0));
        EXPECT_EQ(d, expected_delta(NetworkParams(q, 1.0)));
        EXPECT_GE(d, 1.0);
        EXPECT_LT(d, 2.0);
        EXPECT_NEAR(d, 1.0 / state_machine(q, 0.3).official_per_block, 1e-10);
    }
}

TEST(PostAdjustment, Values)
{
    const NetworkParams third(1.0 / 3.0, 0.0);
    EXPECT_NEAR(post_adjustment_revenue_ratio(third), honest_revenue_ratio(third), 1e-15);
    const NetworkParams p(0.2, 1.0);
    EXPECT_GT(apparent_hashrate(p), p.q());
    EXPECT_GT(post_adjustment_revenue_ratio(p), honest_revenue_ratio(p));
    EXPECT_EQ(post_adjustment_revenue_ratio(NetworkParams(0.0, 0.4)), 0.0);
}

TEST(PostAdjustment, DeltaRouteAgrees)
{
    for (int i = 1; i <= 9; ++i)
        for (double g : {0.0, 0.5, 1.0}) {
            const NetworkParams pr(i * 0.05, g);
            EXPECT_NEAR(post_adjustment_revenue_ratio_via_delta(pr), post_adjustment_revenue_ratio(pr),
                        1e-12 * post_adjustment_revenue_ratio(pr));
        }
}

TEST(Thresholds, Values)
{
    EXPECT_NEAR(profitability_thresholds(NetworkParams(1.0 / 3.0, 0.5)).gamma_min, 0.0, 1e-15);
    EXPECT_NEAR(profitability_thresholds(NetworkParams(0.2, 0.0)).q_min, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(profitability_thresholds(NetworkParams(0.25, 0.0)).gamma_min, 0.5, 1e-15);
    EXPECT_EQ(profitability_thresholds(NetworkParams(0.45, 0.0)).gamma_min, 0.0);
    EXPECT_EQ(profitability_thresholds(NetworkParams(0.1, 1.0)).q_min, 0.0);
}

TEST(Thresholds, SignAgreesWithApparentHashrate)
{
    for (int i = 1; i < 50; ++i)
        for (int j = 0; j <= 20; ++j) {
            const double q = i / 100.0, g = j / 20.0;
            const NetworkParams pr(q, g);
            const int by_q = sign_with_tolerance(apparent_hashrate(pr) - q, q);
            const int by_gamma = sign_with_tolerance(g - formula::gamma_threshold_raw(q), 1.0, 1e-10);
            if (by_gamma != 0) {
                EXPECT_EQ(by_q, by_gamma) << q << " " << g;
            }
        }
}

TEST(Breakeven, Values)
{
    const double window = 2016 * 600.0;
    const auto t = breakeven_time(NetworkParams(0.1, 0.9));
    ASSERT_TRUE(t);
    EXPECT_NEAR(*t / window, 5.0919, 5e-4);
    EXPECT_NEAR(*t / kSecondsPerWeek, 10.18, 0.01);
    EXPECT_NEAR(*breakeven_time(NetworkParams(0.4999, 0.5)) / window, 1.9986, 5e-4);
    EXPECT_GT(*breakeven_time(NetworkParams(0.01, 0.99)) / window, 50.0);
}

TEST(Breakeven, NeverProfitable)
{
    EXPECT_FALSE(breakeven_time(NetworkParams(0.2, 0.0)));
    EXPECT_FALSE(breakeven_time(NetworkParams(1.0 / 3.0, 0.0)));
    EXPECT_FALSE(breakeven_time(NetworkParams(0.0, 1.0)));
}

TEST(Breakeven, MinimumAtHalfConnectivity)
{
    const auto m = minimize_breakeven(0.5, 0.26, 0.4999);
    EXPECT_NEAR(m.q, 0.43627, 1e-4);
    EXPECT_NEAR(m.breakeven_epochs, 1.69208, 1e-4);
    EXPECT_NEAR(m.breakeven_epochs * 2016 * 600 / 86400, 23.69, 0.01);
}

TEST(Pnl, CostAccounting)
{
    const NetworkParams free(0.3, 0.0);
    EXPECT_EQ(pnl_rate(0.123, free), 0.123);
    const NetworkParams costly(0.3, 0.0, 600, 1, honest_revenue_ratio(free));
    EXPECT_EQ(pnl_rate(honest_revenue_ratio(costly), costly), 0.0);
    EXPECT_LT(pnl_rate(selfish_revenue_ratio_pre(costly), costly), 0.0);
}

TEST(Pool, Attractiveness)
{
    EXPECT_EQ(pool_attractiveness(NetworkParams(0.4, 0.5)), true);
    EXPECT_EQ(pool_attractiveness(NetworkParams(0.1, 0.0)), false);
    EXPECT_EQ(pool_attractiveness(NetworkParams(1.0 / 3.0, 0.0)), false);
    EXPECT_FALSE(pool_attractiveness(NetworkParams(0.0, 0.0)).has_value());
}

TEST(Pool, Acceptance)
{
    EXPECT_TRUE(pool_acceptance(NetworkParams(0.2, 0.0), 1e-4));
    EXPECT_TRUE(pool_acceptance(NetworkParams(0.45, 1.0), 1e-4));
    for (double q = 0.05; q <= 0.45 + 1e-9; q += 0.01)
        for (double g : {0.0, 0.5, 1.0})
            EXPECT_TRUE(pool_acceptance(NetworkParams(q, g))) << q << " " << g;
    EXPECT_THROW(pool_acceptance(NetworkParams(0.00005, 0.0), 1e-4), std::invalid_argument);
    EXPECT_THROW(pool_acceptance(NetworkParams(0.49995, 0.0), 1e-4), std::invalid_argument);
    EXPECT_THROW(pool_acceptance(NetworkParams(0.2, 0.0), 0.0), std::invalid_argument);
}

TEST(Sweep, ShapeAndOrder)
{
    SweepGrid grid{0.0, 0.49, 50, {0.0, 0.5, 1.0}};
    const auto rows = figure_sweep(grid);
    ASSERT_EQ(rows.size(), 150u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const bool ordered = rows[i - 1].gamma < rows[i].gamma ||
                             (rows[i - 1].gamma == rows[i].gamma && rows[i - 1].q < rows[i].q);
        EXPECT_TRUE(ordered);
    }
    EXPECT_EQ(rows.front().expected_delta, 1.0);
    EXPECT_GT(rows[49].expected_delta, 1.85);
    for (std::size_t i = 0; i < 50; ++i) {
        EXPECT_EQ(rows[i].expected_delta, rows[100 + i].expected_delta);
        EXPECT_GE(rows[100 + i].apparent_hashrate_ratio, rows[i].apparent_hashrate_ratio);
    }
    EXPECT_EQ(rows.front().apparent_hashrate_ratio, 0.0);
    EXPECT_EQ(figure_sweep(grid).size(), rows.size());
}

TEST(Sweep, MinimumOnHalfConnectivityTable)
{
    SweepGrid grid{0.26, 0.49, 231, {0.5}};
    const auto rows = figure_sweep(grid);
    double best = INFINITY, best_q = 0;
    for (const auto& r : rows)
        if (r.breakeven_time && *r.breakeven_time < best) {
            best = *r.breakeven_time;
            best_q = r.q;
        }
    EXPECT_NEAR(best_q, 0.436, 1e-3);
}

TEST(Sweep, RejectsBadGrid)
{
    EXPECT_THROW(figure_sweep(SweepGrid{0.0, 0.4, 0, {0.0}}), std::invalid_argument);
    EXPECT_THROW(figure_sweep(SweepGrid{0.0, 0.4, 10, {}}), std::invalid_argument);
    EXPECT_THROW(figure_sweep(SweepGrid{0.0, 0.5, 10, {0.0}}), std::invalid_argument);
    EXPECT_THROW(figure_sweep(SweepGrid{0.3, 0.2, 10, {0.0}}), std::invalid_argument);
}

TEST(Report, NoAttacker)
{
    const auto r = make_report(NetworkParams(0.0, 0.5));
    EXPECT_EQ(r.gamma_sm_pre, 0.0);
    EXPECT_EQ(r.gamma_sm_post, 0.0);
    EXPECT_EQ(r.apparent_hashrate, 0.0);
    EXPECT_EQ(r.expected_delta, 1.0);
    EXPECT_FALSE(r.breakeven_time);
}
