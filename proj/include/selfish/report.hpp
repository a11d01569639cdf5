#pragma once

// CSV and JSON renderings shared by the CLI and the acceptance suite.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "selfish/analytics.hpp"
#include "selfish/epoch_sim.hpp"
#include "selfish/stats.hpp"

#ifndef SELFISH_BUILD_ID
#define SELFISH_BUILD_ID "unknown"
#endif

namespace selfish {

inline constexpr std::string_view kBuildId = SELFISH_BUILD_ID;

/// Shortest text that parses back to the same double.
inline std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    if (res.ec != std::errc())
        throw std::runtime_error("double formatting failed");
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text)
{
    double x = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw std::invalid_argument("not a number: " + std::string(text));
    return x;
}

inline const std::vector<std::string>& sweep_columns()
{
    static const std::vector<std::string> cols{
        "q",           "gamma",         "q_prime",              "q_prime_over_q", "expected_delta", "gamma_sm_pre",
        "gamma_sm_post", "breakeven_time_weeks", "gamma_min", "q_min",          "breakeven_time_seconds"};
    return cols;
}

/// One numeric row per report; never-profitable break-even renders as inf.
inline std::vector<double> sweep_row(const AnalyticsReport& r)
{
    const double inf = std::numeric_limits<double>::infinity();
    const double seconds = r.breakeven_time.value_or(inf);
    return {r.q,
            r.gamma,
            r.apparent_hashrate,
            r.apparent_hashrate_ratio,
            r.expected_delta,
            r.gamma_sm_pre,
            r.gamma_sm_post,
            seconds / kSecondsPerWeek,
            r.gamma_threshold,
            r.q_threshold,
            seconds};
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline std::string render_csv(const CsvTable& table)
{
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i)
            out += ',';
        out += table.header[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i)
                out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline CsvTable parse_csv(std::string_view text)
{
    CsvTable table;
    auto split = [](std::string_view line) {
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string_view::npos)
                break;
            start = comma + 1;
        }
        return cells;
    };
    bool first = true;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (line.empty())
            continue;
        const auto cells = split(line);
        if (first) {
            for (auto c : cells)
                table.header.emplace_back(c);
            first = false;
            continue;
        }
        if (cells.size() != table.header.size())
            throw std::invalid_argument("CSV row width does not match header");
        std::vector<double> row;
        for (auto c : cells)
            row.push_back(parse_double(c));
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline CsvTable sweep_table(const std::vector<AnalyticsReport>& reports)
{
    CsvTable t{sweep_columns(), {}};
    for (const auto& r : reports)
        t.rows.push_back(sweep_row(r));
    return t;
}

using nlohmann::ordered_json;

/// NaN and infinities are not representable in JSON; they become null.
inline ordered_json json_number(double x)
{
    if (!std::isfinite(x))
        return nullptr;
    return x;
}

inline ordered_json to_json(const EstimateWithCI& e)
{
    return {{"mean", json_number(e.mean)},     {"std_error", json_number(e.std_error)},
            {"n", e.n},                        {"z", e.z},
            {"ci_low", json_number(e.ci_low)}, {"ci_high", json_number(e.ci_high)}};
}

inline ordered_json result_json(std::string name, const EstimateWithCI& e, std::string unit)
{
    ordered_json j{{"name", std::move(name)}, {"unit", std::move(unit)}};
    j["estimate"] = to_json(e);
    return j;
}

inline const char* relation_name(Relation r)
{
    switch (r) {
    case Relation::Equal:
        return "equal";
    case Relation::AtMost:
        return "at_most";
    case Relation::WithinRelative:
        return "within_relative";
    }
    return "?";
}

inline ordered_json to_json(const ComparisonVerdict& v)
{
    ordered_json j{{"quantity", v.quantity},
                   {"relation", relation_name(v.relation)},
                   {"target", json_number(v.target)},
                   {"z_score", json_number(v.z_score)},
                   {"pass", v.pass}};
    if (v.relation == Relation::WithinRelative)
        j["relative_tolerance"] = v.tolerance;
    j["estimate"] = to_json(v.estimate);
    return j;
}

inline ordered_json to_json(const AnalyticsReport& r)
{
    auto value = [](const char* name, ordered_json v, const char* unit) {
        return ordered_json{{"name", name}, {"value", std::move(v)}, {"unit", unit}};
    };
    ordered_json out = ordered_json::array();
    out.push_back(value("gamma_h", r.gamma_h, "reward/s"));
    out.push_back(value("gamma_sm_pre", r.gamma_sm_pre, "reward/s"));
    out.push_back(value("expected_cycle_duration", r.expected_cycle_duration, "s"));
    out.push_back(value("expected_cycle_revenue", r.expected_cycle_revenue, "reward"));
    out.push_back(value("apparent_hashrate", r.apparent_hashrate, "1"));
    out.push_back(value("apparent_hashrate_over_q", r.apparent_hashrate_ratio, "1"));
    out.push_back(value("expected_delta", r.expected_delta, "1"));
    out.push_back(value("gamma_sm_post", r.gamma_sm_post, "reward/s"));
    if (r.breakeven_time) {
        out.push_back(value("breakeven_time", *r.breakeven_time, "s"));
        out.push_back(value("breakeven_time_weeks", *r.breakeven_time / kSecondsPerWeek, "week"));
        out.push_back(value("breakeven_time_epochs", *r.breakeven_time / (r.n0 * r.tau0), "n0*tau0"));
    } else {
        out.push_back(value("breakeven_time", "never profitable", "s"));
    }
    out.push_back(value("gamma_min", r.gamma_threshold, "1"));
    out.push_back(value("q_min", r.q_threshold, "1"));
    out.push_back(value("pnl_rate_pre", r.pnl_rate_pre, "reward/s"));
    out.push_back(value("pnl_rate_post", r.pnl_rate_post, "reward/s"));
    out.push_back(value("pnl_rate_honest", r.pnl_rate_honest, "reward/s"));
    if (r.pool_attractive)
        out.push_back(value("pool_attractive", *r.pool_attractive, "bool"));
    else
        out.push_back(value("pool_attractive", "not applicable", "bool"));
    return out;
}

/// Top-level document {config, results[], verdicts[], build, seed}.
struct JsonReport {
    ordered_json config = ordered_json::object();
    ordered_json results = ordered_json::array();
    std::vector<ComparisonVerdict> verdicts;
    std::uint64_t seed = 0;
    bool has_seed = false;

    void add(std::string name, const EstimateWithCI& e, std::string unit)
    {
        results.push_back(result_json(std::move(name), e, std::move(unit)));
    }

    bool all_pass() const
    {
        for (const auto& v : verdicts)
            if (!v.pass)
                return false;
        return true;
    }

    std::string render() const
    {
        ordered_json j;
        j["config"] = config;
        j["results"] = results;
        j["verdicts"] = ordered_json::array();
        for (const auto& v : verdicts)
            j["verdicts"].push_back(to_json(v));
        j["build"] = std::string(kBuildId);
        j["seed"] = has_seed ? ordered_json(seed) : ordered_json(nullptr);
        return j.dump(2) + "\n";
    }
};

} // namespace selfish
