#pragma once

// Domain types shared by the analytics engine and the simulators.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace selfish {

/// Reward units per block and mining cost are carried as plain doubles; the
/// only derived quantities are the relative hashrate p and the two Poisson
/// rates, which are always recomputed from q and tau0.
class NetworkParams {
public:
    /// Throws std::invalid_argument naming the violated bound.
    NetworkParams(double q, double gamma, double tau0 = 600.0, double b = 1.0, double cost_rate = 0.0)
        : q_(q), gamma_(gamma), tau0_(tau0), b_(b), cost_rate_(cost_rate)
    {
        if (!(q >= 0.0 && q < 0.5))
            throw std::invalid_argument("q must satisfy 0 <= q < 1/2 (got " + std::to_string(q) + ")");
        if (!(gamma >= 0.0 && gamma <= 1.0))
            throw std::invalid_argument("gamma must satisfy 0 <= gamma <= 1 (got " + std::to_string(gamma) + ")");
        if (!(tau0 > 0.0 && std::isfinite(tau0)))
            throw std::invalid_argument("tau0 must be a positive number of seconds");
        if (!(b > 0.0 && std::isfinite(b)))
            throw std::invalid_argument("block reward b must be positive");
        if (!(cost_rate >= 0.0 && std::isfinite(cost_rate)))
            throw std::invalid_argument("cost_rate must be non-negative");
    }

    double q() const { return q_; }
    double p() const { return 1.0 - q_; }
    double gamma() const { return gamma_; }
    double tau0() const { return tau0_; }
    double b() const { return b_; }
    double cost_rate() const { return cost_rate_; }

    NetworkParams with_q(double q) const { return {q, gamma_, tau0_, b_, cost_rate_}; }
    NetworkParams with_gamma(double gamma) const { return {q_, gamma, tau0_, b_, cost_rate_}; }

private:
    double q_;
    double gamma_;
    double tau0_;
    double b_;
    double cost_rate_;
};

/// Block production rates (blocks per second) of the two miner groups.
struct Rates {
    double honest = 0.0;
    double selfish = 0.0;

    double total() const { return honest + selfish; }
    Rates scaled(double factor) const { return {honest * factor, selfish * factor}; }
};

struct DerivedRates {
    double p;
    double alpha;
    double alpha_prime;
};

inline DerivedRates derived_rates(const NetworkParams& params)
{
    const double p = params.p();
    return {p, p / params.tau0(), params.q() / params.tau0()};
}

inline Rates base_rates(const NetworkParams& params)
{
    const auto d = derived_rates(params);
    return {d.alpha, d.alpha_prime};
}

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seeded source of variates. Backed by std::mt19937_64, whose output
/// sequence is fixed by the standard, and converted to doubles by hand so
/// the sample sequence is identical across standard library implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    /// Stream for replication `index` of a run seeded with `master`:
    /// seed = splitmix64(master ^ splitmix64(index)).
    static RandomStream derive(std::uint64_t master, std::uint64_t index)
    {
        return RandomStream(splitmix64(master ^ splitmix64(index)));
    }

    std::uint64_t seed() const { return seed_; }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform()
    {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    bool bernoulli(double probability) { return uniform() < probability; }

    /// Inverse-transform exponential variate; strictly positive.
    double exponential(double rate)
    {
        if (!(rate > 0.0))
            throw std::invalid_argument("exponential rate must be positive");
        return -std::log(uniform()) / rate;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

inline double sample_exponential(RandomStream& stream, double rate) { return stream.exponential(rate); }

} // namespace selfish
