// selfish-lab: analytics tables, figure sweeps, simulations and the
// acceptance suite for block-withholding mining.
//
// Exit codes: 0 success / all verdicts pass, 1 a verdict failed, 2 usage error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "selfish/acceptance.hpp"
#include "selfish/analytics.hpp"
#include "selfish/experiments.hpp"
#include "selfish/report.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NetworkOptions {
    double q = 0.0;
    double gamma = 0.0;
    double tau0 = 600.0;
    double b = 1.0;
    double cost_rate = 0.0;
    std::uint32_t n0 = selfish::kDefaultBlocksPerEpoch;

    selfish::NetworkParams params() const
    {
        try {
            return selfish::NetworkParams(q, gamma, tau0, b, cost_rate);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
};

void add_network_options(CLI::App& cmd, NetworkOptions& net, bool require_point)
{
    auto* q = cmd.add_option("--q", net.q, "attacker relative hashrate, 0 <= q < 1/2");
    auto* g = cmd.add_option("--gamma", net.gamma, "connectivity in [0, 1]");
    if (require_point) {
        q->required();
        g->required();
    }
    cmd.add_option("--tau0", net.tau0, "target block spacing in seconds")->capture_default_str();
    cmd.add_option("--b", net.b, "block reward")->capture_default_str();
    cmd.add_option("--cost-rate", net.cost_rate, "mining cost per second, reward units")->capture_default_str();
    cmd.add_option("--n0", net.n0, "official blocks per difficulty epoch")->capture_default_str()->check(CLI::PositiveNumber);
}

struct Output {
    std::string format = "json";
    std::string path;

    void write(const std::string& text) const
    {
        if (path.empty() || path == "-") {
            std::cout << text;
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f)
            throw UsageError("cannot open output file " + path);
        f << text;
    }
};

void add_output_options(CLI::App& cmd, Output& out, bool allow_csv)
{
    if (allow_csv)
        cmd.add_option("--format", out.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    cmd.add_option("-o,--output", out.path, "output file (default: stdout)");
}

selfish::ordered_json network_json(const NetworkOptions& net)
{
    return {{"q", net.q}, {"gamma", net.gamma}, {"tau0", net.tau0}, {"b", net.b}, {"cost_rate", net.cost_rate}, {"n0", net.n0}};
}

int run_analytics(const NetworkOptions& net, const Output& out)
{
    const auto report = selfish::make_report(net.params(), net.n0);
    if (out.format == "csv") {
        out.write(selfish::render_csv(selfish::sweep_table({report})));
        return kExitPass;
    }
    selfish::JsonReport doc;
    doc.config = network_json(net);
    doc.config["subcommand"] = "analytics";
    doc.results = selfish::to_json(report);
    out.write(doc.render());
    return kExitPass;
}

struct SweepOptions {
    double q_min = 0.0;
    double q_max = 0.49;
    std::uint32_t q_steps = 50;
    std::vector<double> gammas{0.0, 0.5, 1.0};
};

int run_sweep(const NetworkOptions& net, const SweepOptions& sw, const Output& out)
{
    selfish::SweepGrid grid{sw.q_min, sw.q_max, sw.q_steps, sw.gammas};
    std::vector<selfish::AnalyticsReport> rows;
    try {
        rows = selfish::figure_sweep(grid, net.tau0, net.b, net.cost_rate, net.n0);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (out.format == "json") {
        selfish::JsonReport doc;
        doc.config = network_json(net);
        doc.config["subcommand"] = "sweep";
        for (const auto& r : rows) {
            selfish::ordered_json row{{"q", r.q}, {"gamma", r.gamma}};
            row["fields"] = selfish::to_json(r);
            doc.results.push_back(row);
        }
        out.write(doc.render());
    } else {
        out.write(selfish::render_csv(selfish::sweep_table(rows)));
    }
    return kExitPass;
}

int finish(selfish::JsonReport doc, const std::string& subcommand, const NetworkOptions& net, const Output& out)
{
    auto config = network_json(net);
    config["subcommand"] = subcommand;
    for (auto& [k, v] : doc.config.items())
        config[k] = v;
    doc.config = config;
    out.write(doc.render());
    return doc.all_pass() ? kExitPass : kExitFail;
}

selfish::AdjustmentPolicy parse_policy(const std::string& name)
{
    return name == "legacy" ? selfish::AdjustmentPolicy::Legacy : selfish::AdjustmentPolicy::OrphanAware;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"selfish-lab: profitability analysis of selfish mining"};
    app.require_subcommand(1);

    NetworkOptions net;
    Output analytics_out;
    Output sweep_out{"csv", {}};
    Output sim_out;
    SweepOptions sweep;
    std::uint64_t seed = 0;
    std::uint64_t n_cycles = 1'000'000;
    std::string kind = "selfish";
    std::uint32_t n_epochs = 20;
    std::uint64_t n_replications = 100;
    std::string policy = "legacy";
    std::uint32_t horizon = 8;
    bool fast = false;
    bool quiet = false;

    auto* analytics = app.add_subcommand("analytics", "closed-form report for one parameter point");
    add_network_options(*analytics, net, true);
    add_output_options(*analytics, analytics_out, true);

    auto* sweep_cmd = app.add_subcommand("sweep", "CSV table over a (gamma, q) grid");
    add_network_options(*sweep_cmd, net, false);
    add_output_options(*sweep_cmd, sweep_out, true);
    sweep_cmd->add_option("--q-min", sweep.q_min, "first q")->capture_default_str();
    sweep_cmd->add_option("--q-max", sweep.q_max, "last q (< 1/2)")->capture_default_str();
    sweep_cmd->add_option("--q-steps", sweep.q_steps, "number of q points")->capture_default_str();
    sweep_cmd->add_option("--gammas", sweep.gammas, "gamma values")->delimiter(',')->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo runs with closed-form verdicts");
    simulate->require_subcommand(1);
    auto* cycles = simulate->add_subcommand("cycles", "independent attack cycles");
    add_network_options(*cycles, net, true);
    add_output_options(*cycles, sim_out, false);
    cycles->add_option("--seed", seed, "master seed")->required();
    cycles->add_option("--n", n_cycles, "number of cycles")->capture_default_str()->check(CLI::Range(2ULL, 1ULL << 40));
    cycles->add_option("--kind", kind, "selfish or honest")->check(CLI::IsMember({"selfish", "honest"}))->capture_default_str();

    auto* epochs = simulate->add_subcommand("epochs", "difficulty-adjustment epochs");
    add_network_options(*epochs, net, true);
    add_output_options(*epochs, sim_out, false);
    epochs->add_option("--seed", seed, "master seed")->required();
    epochs->add_option("--epochs", n_epochs, "epochs per replication")->capture_default_str()->check(CLI::PositiveNumber);
    epochs->add_option("--replications", n_replications, "independent replications (>= 8)")
        ->capture_default_str()
        ->check(CLI::Range(8ULL, 1ULL << 32));
    epochs->add_option("--policy", policy, "legacy or orphan-aware")
        ->check(CLI::IsMember({"legacy", "orphan-aware"}))
        ->capture_default_str();

    auto* breakeven = app.add_subcommand("breakeven", "Monte Carlo break-even time against the closed form");
    add_network_options(*breakeven, net, true);
    add_output_options(*breakeven, sim_out, false);
    breakeven->add_option("--seed", seed, "master seed")->required();
    n_replications = 100;
    breakeven->add_option("--replications", n_replications, "independent replications")
        ->capture_default_str()
        ->check(CLI::Range(2ULL, 1ULL << 32));
    breakeven->add_option("--horizon", horizon, "horizon in epochs (n0 tau0)")->capture_default_str()->check(CLI::Range(2u, 100000u));

    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    verify->add_flag("--fast", fast, "10x smaller Monte Carlo samples");
    verify->add_flag("--quiet", quiet, "print only criterion lines and failing checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (*analytics)
            return run_analytics(net, analytics_out);
        if (*sweep_cmd)
            return run_sweep(net, sweep, sweep_out);
        if (*cycles) {
            const auto params = net.params();
            const auto k = kind == "honest" ? selfish::CycleKind::Honest : selfish::CycleKind::SelfishMining;
            if (k == selfish::CycleKind::SelfishMining && !(params.q() < 0.5))
                throw UsageError("selfish cycles need q < 1/2");
            return finish(selfish::cycles_report(params, k, n_cycles, seed), "simulate cycles", net, sim_out);
        }
        if (*epochs)
            return finish(selfish::epochs_report(net.params(), parse_policy(policy), n_epochs, n_replications, seed, net.n0),
                          "simulate epochs", net, sim_out);
        if (*breakeven)
            return finish(selfish::breakeven_report(net.params(), n_replications, horizon, seed, net.n0), "breakeven", net,
                          sim_out);
        if (*verify) {
            const auto results = selfish::acceptance::run_all({fast}, std::cout, !quiet);
            std::size_t failed = 0;
            for (const auto& r : results)
                failed += r.pass() ? 0 : 1;
            std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
            return failed == 0 ? kExitPass : kExitFail;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    }
    return kExitUsage;
}
