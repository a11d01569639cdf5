#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "selfish/analytics.hpp"
#include "selfish/cycle_sim.hpp"

using namespace selfish;

namespace {

bool within(const EstimateWithCI& e, double target) { return compare_equal("x", target, e).pass; }

} // namespace

TEST(SelfishCycle, InvariantsEveryCycle)
{
    RandomStream s(17);
    for (double g : {0.0, 0.5, 1.0}) {
        const NetworkParams params(0.35, g);
        for (int i = 0; i < 200000; ++i) {
            const auto c = run_selfish_cycle(params, s);
            const std::uint32_t blocks = c.selfish_blocks() + c.honest_blocks();
            ASSERT_EQ(2 * c.official(), blocks + 1);
            ASSERT_EQ(c.selfish_revenue, c.selfish_official * params.b());
            ASSERT_LE(c.selfish_orphans, 1u);
            ASSERT_GT(c.duration, 0.0);
            if (g == 1.0) {
                ASSERT_EQ(c.selfish_orphans, 0u);
            }
            if (c.which == CycleCase::Lead) {
                ASSERT_EQ(c.selfish_official, c.honest_orphans + 1);
                ASSERT_GE(c.selfish_official, 2u);
            }
        }
    }
}

TEST(SelfishCycle, NoAttackerIsOneHonestBlock)
{
    RandomStream s(3);
    for (int i = 0; i < 1000; ++i) {
        const auto c = run_selfish_cycle(NetworkParams(0.0, 0.5), s);
        EXPECT_EQ(c.which, CycleCase::HonestFirst);
        EXPECT_EQ(c.honest_official, 1u);
    }
}

TEST(SelfishCycle, RejectsBadRates)
{
    RandomStream s(3);
    EXPECT_THROW(run_selfish_cycle(Rates{1.0, 1.0}, 0.5, 1.0, s), std::invalid_argument);
    EXPECT_THROW(run_selfish_cycle(Rates{1.0, -0.1}, 0.5, 1.0, s), std::invalid_argument);
}

TEST(CycleStatistics, DurationAtHalfConnectivity)
{
    const NetworkParams params(0.3, 0.5);
    const auto s = estimate_cycle_statistics(params, CycleKind::SelfishMining, 1'000'000, 41);
    EXPECT_TRUE(within(s.duration, 1.735 * 600)) << s.duration.mean;
    EXPECT_EQ(s.invariant_violations, 0u);
}

TEST(CycleStatistics, RevenueAndRatioWithoutConnectivity)
{
    const NetworkParams params(0.3, 0.0);
    const auto s = estimate_cycle_statistics(params, CycleKind::SelfishMining, 1'000'000, 42);
    EXPECT_TRUE(within(s.revenue, 0.3735)) << s.revenue.mean;
    EXPECT_TRUE(within(s.revenue_ratio, 0.21527414 / 600)) << s.revenue_ratio.mean;
    EXPECT_LE(s.revenue_ratio.ci_low, selfish_revenue_ratio_pre(params));
    EXPECT_GE(s.revenue_ratio.ci_high, selfish_revenue_ratio_pre(params));
}

TEST(CycleStatistics, OfficialShare)
{
    const NetworkParams params(0.4, 0.5);
    const auto s = estimate_cycle_statistics(params, CycleKind::SelfishMining, 1'000'000, 43);
    EXPECT_TRUE(within(s.official_share, 0.525581)) << s.official_share.mean;
}

TEST(CycleStatistics, CaseFrequenciesAndOrphans)
{
    const double q = 0.25, p = 0.75, g = 0.3;
    const auto s = estimate_cycle_statistics(NetworkParams(q, g), CycleKind::SelfishMining, 1'000'000, 44);
    EXPECT_TRUE(within(s.case_frequency[0], p));
    EXPECT_TRUE(within(s.case_frequency[1], p * p * q));
    EXPECT_TRUE(within(s.case_frequency[2], p * q * q));
    EXPECT_TRUE(within(s.case_frequency[3], q * q));
    EXPECT_TRUE(within(s.selfish_orphans, p * p * q * (1 - g)));
    ASSERT_TRUE(s.lead_duration);
    const auto r = derived_rates(NetworkParams(q, g));
    EXPECT_TRUE(within(*s.lead_duration, 1.0 / (r.alpha - r.alpha_prime)));
}

TEST(CycleStatistics, HonestCycles)
{
    const NetworkParams params(0.3, 0.0);
    const auto s = estimate_cycle_statistics(params, CycleKind::Honest, 1'000'000, 45);
    EXPECT_TRUE(within(s.duration, 600.0));
    EXPECT_TRUE(within(s.selfish_official, 0.3));
    EXPECT_TRUE(within(s.revenue_ratio, honest_revenue_ratio(params)));

    const auto none = estimate_cycle_statistics(NetworkParams(0.0, 0.0), CycleKind::Honest, 10000, 46);
    EXPECT_EQ(none.selfish_official.mean, 0.0);
}

TEST(CycleStatistics, Deterministic)
{
    const NetworkParams params(0.3, 0.5);
    const auto a = estimate_cycle_statistics(params, CycleKind::SelfishMining, 50000, 9);
    const auto b = estimate_cycle_statistics(params, CycleKind::SelfishMining, 50000, 9);
    EXPECT_EQ(a.duration.mean, b.duration.mean);
    EXPECT_EQ(a.revenue_ratio.mean, b.revenue_ratio.mean);
    EXPECT_EQ(a.revenue_ratio.std_error, b.revenue_ratio.std_error);
    const auto c = estimate_cycle_statistics(params, CycleKind::SelfishMining, 50000, 10);
    EXPECT_NE(a.duration.mean, c.duration.mean);
}

TEST(CycleStatistics, RejectsTooFewCycles)
{
    EXPECT_THROW(estimate_cycle_statistics(NetworkParams(0.3, 0.5), CycleKind::SelfishMining, 1, 1),
                 std::invalid_argument);
}

// A single 32-batch standard error is itself ~13% noisy, so compare widths
// averaged over several seeds.
TEST(CycleStatistics, DoublingCyclesNarrowsInterval)
{
    const NetworkParams params(0.3, 0.0);
    RunningStats small, large;
    for (std::uint64_t seed = 0; seed < 16; ++seed) {
        small.add(estimate_cycle_statistics(params, CycleKind::SelfishMining, 200000, 100 + seed).revenue_ratio.width());
        large.add(estimate_cycle_statistics(params, CycleKind::SelfishMining, 400000, 200 + seed).revenue_ratio.width());
    }
    const double shrink = large.mean() / small.mean();
    EXPECT_NEAR(shrink, 1.0 / std::sqrt(2.0), 0.2 / std::sqrt(2.0)) << shrink;
}

TEST(PoissonRace, LeadOne)
{
    const auto s = estimate_race_statistics(2.0, 1.0, 1, 1'000'000, 50);
    EXPECT_TRUE(within(s.duration, 1.0));
    EXPECT_TRUE(within(s.fast_count, 2.0));
    EXPECT_TRUE(within(s.slow_count, 1.0));
}

TEST(PoissonRace, SilentSlowProcess)
{
    const auto s = estimate_race_statistics(3.0, 0.0, 1, 200000, 51);
    EXPECT_TRUE(within(s.duration, 1.0 / 3.0));
    EXPECT_EQ(s.fast_count.mean, 1.0);
    EXPECT_EQ(s.slow_count.mean, 0.0);
}

TEST(PoissonRace, LongerLeadAndContract)
{
    RandomStream st(5);
    for (int i = 0; i < 10000; ++i) {
        const auto r = run_poisson_race(2.0, 1.5, 3, st);
        ASSERT_EQ(r.fast_count, r.slow_count + 3);
    }
    const auto s = estimate_race_statistics(2.0, 1.5, 3, 200000, 52);
    EXPECT_TRUE(within(s.duration, 3.0 / 0.5));
    EXPECT_THROW(run_poisson_race(1.0, 1.0, 1, st), std::invalid_argument);
    EXPECT_THROW(run_poisson_race(2.0, 1.0, 0, st), std::invalid_argument);
}
