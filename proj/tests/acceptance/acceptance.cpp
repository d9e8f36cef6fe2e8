// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mmotune/harness.hpp"
#include "oracles.hpp"
#include "remarks.hpp"
#include "support.hpp"

using namespace mmotune;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

Outcome fail(std::string detail)
{
    return {false, std::move(detail)};
}

// 1. normalized gain worked example
Outcome gain_example()
{
    const double g1 = normalized_gain(std::vector<double>{50}, std::vector<double>{100}, 20);
    const double g2 = normalized_gain(std::vector<double>{25}, std::vector<double>{50}, 20);
    const bool ok = std::abs(g1 - 62.5) <= 1e-9 && std::abs(g2 - 250.0 / 3.0) <= 1e-9;
    return {ok, fmt::format("gains {} and {}", g1, g2)};
}

// 2. dominance properties of the meta-objectives
Outcome remark_invariants()
{
    constexpr std::size_t per_shape = 10000;
    const std::vector<std::pair<std::string, remarks::Tally>> tallies{
        {"min-ft on front", remarks::minimal_target_on_front(101, per_shape)},
        {"better ft never dominated", remarks::better_target_never_dominated(102, per_shape)},
        {"equal ft incomparable", remarks::equal_target_incomparable(103, per_shape)},
        {"closed form", remarks::closed_form_dominance(104, per_shape)},
    };
    Outcome o;
    std::vector<std::string> parts;
    for (const auto& [name, t] : tallies) {
        parts.push_back(fmt::format("{}: {}/{} failures", name, t.failures, t.cases));
        if (t.failures != 0 || t.cases < 3 * per_shape) {
            o.pass = false;
            parts.back() += " first: " + t.first_failure;
        }
    }
    o.detail = fmt::format("{}", fmt::join(parts, "; "));
    return o;
}

// 3. sorting, front and crowding kernels against brute force
Outcome nsga_kernels()
{
    Rng rng(303);
    std::size_t sort_failures = 0, front_failures = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(500);
        auto raw = oracle::random_points(rng, n, 2, trial % 3 == 0);
        auto pts = oracle::to_objective_points(raw);
        sort_failures += fast_nondominated_sort(pts) != oracle::peel(raw);
        front_failures += pareto_front(pts) != oracle::front_filter(raw);
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    const auto two = crowding_distance(std::vector<ObjectivePoint>{{0, 1}, {1, 0}});
    const auto line = crowding_distance(std::vector<ObjectivePoint>{{0, 2}, {1, 1}, {2, 0}});
    const auto four = crowding_distance(std::vector<ObjectivePoint>{{0, 8}, {1, 4}, {2, 4}, {4, 0}});
    const bool crowding_ok = two == std::vector<double>{inf, inf} && line[0] == inf && line[2] == inf &&
                             std::abs(line[1] - 2.0) < 1e-12 && four[0] == inf && four[3] == inf &&
                             std::abs(four[1] - 1.0) < 1e-12 && std::abs(four[2] - 1.25) < 1e-12;
    return {sort_failures == 0 && front_failures == 0 && crowding_ok,
            fmt::format("sort mismatches {}/200, front mismatches {}/200, crowding fixtures {}", sort_failures,
                        front_failures, crowding_ok ? "ok" : "wrong")};
}

// 4. the A/B/C/D selection scenario
Outcome fig3_scenario()
{
    const std::vector<std::pair<double, double>> abcd{{0.1, 0.2}, {0.15, 0.25}, {0.4, 0.9}, {0.95, 0.05}};
    std::vector<ObjectivePoint> meta, pmo;
    for (auto [ft, fa] : abcd) {
        meta.push_back(meta_objectives({MmoShape::linear, 0.5}, ft, fa));
        pmo.push_back(pmo_objectives(ft, fa));
    }
    const auto mf = pareto_front(meta), pf = pareto_front(pmo);
    const bool d_on_pmo = std::find(pf.begin(), pf.end(), 3) != pf.end();
    const bool ok = mf == std::vector<std::size_t>{0, 2} && d_on_pmo;
    auto names = [](const std::vector<std::size_t>& f) {
        std::string s;
        for (auto i : f)
            s += static_cast<char>('A' + i);
        return s;
    };
    return {ok, fmt::format("MMO front {{{}}}, PMO front {{{}}}", names(mf), names(pf))};
}

// 5. Wilcoxon exactness and A12 properties
Outcome statistics_oracles()
{
    Rng rng(505);
    std::size_t wilcoxon_failures = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.index(12);
        std::vector<double> a(n), b(n);
        const bool ties = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = ties ? static_cast<double>(rng.uniform_int(0, 4)) : rng.uniform01();
            b[i] = ties ? static_cast<double>(rng.uniform_int(0, 4)) : rng.uniform01() + 0.1;
        }
        wilcoxon_failures += std::abs(wilcoxon_signed_rank(a, b) - oracle::wilcoxon_enumeration(a, b)) > 1e-12;
    }
    std::size_t symmetry_failures = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> a(1 + rng.index(30)), b(1 + rng.index(30));
        for (auto& v : a)
            v = rng.uniform01();
        for (auto& v : b)
            v = rng.uniform01() + 1e-3 * static_cast<double>(trial % 7);
        symmetry_failures += std::abs(a12(a, b).value + a12(b, a).value - 1.0) > 1e-12;
    }
    const bool thresholds = a12_magnitude(0.5599999999) == Magnitude::negligible &&
                            a12_magnitude(0.56) == Magnitude::small && a12_magnitude(0.6399999999) == Magnitude::small &&
                            a12_magnitude(0.64) == Magnitude::medium && a12_magnitude(0.7099999999) == Magnitude::medium &&
                            a12_magnitude(0.71) == Magnitude::large && a12_magnitude(0.58) == Magnitude::small &&
                            a12_magnitude(1.0 - 0.71) == Magnitude::large;
    return {wilcoxon_failures == 0 && symmetry_failures == 0 && thresholds,
            fmt::format("Wilcoxon mismatches {}/500, A12 symmetry failures {}/500, thresholds {}", wilcoxon_failures,
                        symmetry_failures, thresholds ? "ok" : "wrong")};
}

// 6. distinct-configuration budget under duplication, and trace determinism
Outcome budget_law()
{
    auto space = testing::binary_space(10);
    SyntheticOracle oracle(space, {.seed = 606});
    Rng rng(606);
    std::size_t violations = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t limit = rng.index(60);
        const std::size_t pool = 1 + rng.index(40);
        std::vector<Configuration> configs;
        for (std::size_t i = 0; i < pool; ++i)
            configs.push_back(space.decode(rng.index(1024)));
        BudgetLedger ledger(limit);
        std::set<Configuration> accepted;
        for (int step = 0; step < 400; ++step) {
            const auto& c = configs[rng.index(rng.coin() ? std::min(pool, 1 + rng.index(3)) : pool)]; // heavy reuse of a few
            auto r = cached_measure(ledger, oracle, c);
            if (r)
                accepted.insert(c);
            violations += ledger.consumed() != accepted.size() || ledger.consumed() > limit;
        }
    }

    std::size_t nondeterministic = 0, over_budget = 0;
    const std::vector<std::string> models{"single:RS", "single:SHC-r", "single:SA", "single:SOGA", "pmo",
                                          "mmo:linear", "mmo:sqrt", "mmo:square"};
    for (const auto& m : models) {
        for (std::size_t run = 0; run < 3; ++run) {
            const auto weight = parse_model(m).mmo() ? std::optional<double>(0.3) : std::nullopt;
            RunSpec spec{m, weight, run, run_seed(606, m, weight, run), 150, 20};
            OptimizerConfig cfg;
            cfg.idle_limit = 5; // provoke cache hits and diversions
            auto a = trace_to_csv(execute_run(spec, space, oracle, cfg));
            auto b = trace_to_csv(execute_run(spec, space, oracle, cfg));
            nondeterministic += a != b;
            over_budget += trace_from_csv(a).size() > spec.budget;
        }
    }
    return {violations == 0 && nondeterministic == 0 && over_budget == 0,
            fmt::format("ledger violations {}, nondeterministic traces {}/24, over-budget traces {}", violations,
                        nondeterministic, over_budget)};
}

ExperimentPlan landscape_plan(std::uint64_t landscape_seed)
{
    return parse_plan(fmt::format(
        R"({{"space": {}, "oracle": {{"synthetic": {{"seed": {}, "local_optima_density": 0.05, "correlation": 0.3}}}},
            "budget": 400, "population_size": 20, "repeats": 30, "master_seed": {},
            "models": ["single:RS", "single:SHC-r", "single:SA", "single:SOGA", "pmo", "mmo:linear"],
            "full_scale_weights": "selected"}})",
        space_to_json(testing::binary_space(12)), landscape_seed, landscape_seed));
}

// 7. desk-scale comparison on planted-optimum landscapes
Outcome headline_behaviour()
{
    int mmo_wins = 0, pmo_not_better = 0;
    std::vector<std::string> rows;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto report = build_report(run_campaign(landscape_plan(seed)));
        const std::string counterpart = report["counterpart"];
        double cp = 0, mmo = 0, pmo = 0, w = 0;
        for (const auto& e : report["entries"]) {
            if (e["model"] == counterpart)
                cp = e["median"];
            if (e["model"] == "pmo")
                pmo = e["median"];
            if (e["model"] == "mmo:linear") {
                mmo = e["median"];
                w = e["weight"];
            }
        }
        mmo_wins += mmo <= cp;
        pmo_not_better += pmo >= mmo;
        rows.push_back(fmt::format("L{} {}={:.4f} mmo@{}={:.4f} pmo={:.4f}", seed, counterpart, cp, w, mmo, pmo));
    }
    return {mmo_wins >= 4 && pmo_not_better >= 3,
            fmt::format("MMO<=counterpart on {}/5, PMO>=MMO on {}/5 [{}]", mmo_wins, pmo_not_better,
                        fmt::join(rows, "; "))};
}

// 8. data-driven selection against live full-scale selection
Outcome data_driven_selection(std::string& info)
{
    auto space = testing::binary_space(12);
    auto plan = landscape_plan(8);
    plan.models = {"mmo:linear"};
    plan.full_scale_selected_only = false;
    SyntheticOracle live(space, plan.oracle.synthetic);
    const auto table = parse_table(table_to_csv(space, tabulate(live)), space);
    if (!table.complete())
        return fail("table incomplete");

    const auto replay = data_driven_weight_selection(table, plan, 1);
    const auto online = full_scale_weight_selection(plan, live, 1);
    const double chosen = replay.chosen.at("mmo:linear");
    const bool same = chosen == online.chosen.at("mmo:linear");
    const bool fast = replay.elapsed_seconds < 3.0;

    const auto preliminary = preliminary_weight_selection(plan, live, 1).at("mmo:linear");
    info = fmt::format("preliminary-run weight on the same landscape: {} ({} the data-driven choice)", preliminary,
                       preliminary == chosen ? "equals" : "differs from");
    return {same && fast, fmt::format("data-driven weight {}, live full-scale weight {}, replay time {:.3f} s", chosen,
                                      online.chosen.at("mmo:linear"), replay.elapsed_seconds)};
}

// 9. exhaustive budgets find the planted optimum
Outcome global_optimum()
{
    auto space = testing::binary_space(8);
    std::size_t misses = 0, runs = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        SyntheticOracle oracle(space, {.seed = seed * 909});
        const double truth = oracle.target(oracle.planted_optimum());
        double scan = std::numeric_limits<double>::infinity();
        for (std::uint64_t k = 0; k < 256; ++k)
            scan = std::min(scan, oracle.target(space.decode(k)));
        if (scan != truth)
            return fail("planted optimum is not the scan minimum");
        for (const auto& m : all_model_labels()) {
            RunSpec spec{m, parse_model(m).mmo() ? std::optional<double>(0.5) : std::nullopt, 0, seed, 256, 20};
            auto trace = execute_run(spec, space, oracle, {});
            ++runs;
            const auto& best = *std::find_if(trace.entries.begin(), trace.entries.end(),
                                             [&](const auto& e) { return e.target_raw == trace.best(); });
            misses += trace.best() != truth || best.config != oracle.planted_optimum();
        }
    }
    return {misses == 0, fmt::format("{} of {} runs missed the planted optimum", misses, runs)};
}

} // namespace

int main()
{
    struct Criterion {
        int id;
        std::string name;
        std::function<Outcome()> check;
    };
    std::string info8;
    const std::vector<Criterion> criteria{
        {1, "normalized gain worked example", gain_example},
        {2, "MMO dominance invariants", remark_invariants},
        {3, "nondominated sorting, front and crowding oracles", nsga_kernels},
        {4, "A/B/C/D selection scenario", fig3_scenario},
        {5, "Wilcoxon and A12 oracles", statistics_oracles},
        {6, "budget and caching law", budget_law},
        {7, "desk-scale MMO behaviour on synthetic landscapes", headline_behaviour},
        {8, "data-driven weight selection", [&] { return data_driven_selection(info8); }},
        {9, "global optimum with exhaustive budget", global_optimum},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = fail(fmt::format("exception: {}", e.what()));
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.pass;
        std::cout << fmt::format("{} [{}] {} ({:.2f} s): {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail)
                  << std::flush;
        if (c.id == 8 && !info8.empty())
            std::cout << "     [8] info: " << info8 << "\n";
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
