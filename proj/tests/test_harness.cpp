#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <set>

#include "mmotune/error.hpp"
#include "mmotune/harness.hpp"
#include "support.hpp"

using namespace mmotune;
namespace fs = std::filesystem;

namespace {

std::string space_json(std::size_t n)
{
    return space_to_json(testing::binary_space(n));
}

std::string synthetic_plan(std::size_t options, const std::string& extra)
{
    return fmt::format(R"({{"space": {}, "oracle": {{"synthetic": {{"seed": 5}}}}, "budget": 60,
                          "population_size": 10, "repeats": 3, "master_seed": 17{}}})",
                       space_json(options), extra);
}

Campaign small_campaign(const std::string& models = R"(["single:SA", "pmo", "mmo:linear"])")
{
    auto plan = parse_plan(synthetic_plan(8, fmt::format(R"(, "models": {}, "weights": [0.1, 10])", models)));
    return run_campaign(plan, 2);
}

RunTrace fake_trace(double best)
{
    RunTrace t;
    t.option_names = {"x"};
    t.entries.push_back({0, Configuration{{0}}, best, 0.0, 1, best});
    return t;
}

} // namespace

TEST_CASE("trace CSV round-trip")
{
    RunTrace empty;
    empty.option_names = {"a", "b"};
    CHECK(trace_to_csv(empty) == "step,a,b,target,auxiliary,consumed,best_so_far\n");
    CHECK(trace_from_csv(trace_to_csv(empty)) == empty);

    RunTrace t;
    t.option_names = {"a", "b"};
    double best = std::numeric_limits<double>::infinity();
    Rng rng(1);
    for (std::size_t i = 0; i < 1000; ++i) {
        double target = rng.uniform01() * 1e3 - 1.0 / 3.0;
        best = std::min(best, target);
        t.entries.push_back({i, Configuration{{static_cast<std::int64_t>(i % 2), static_cast<std::int64_t>(i)}}, target,
                             -rng.uniform01() * 1e-7, i + 1, best});
    }
    testing::TempDir dir;
    emit_trace(t, dir.file("t.csv"));
    auto text = testing::read_file(dir.file("t.csv"));
    CHECK(std::count(text.begin(), text.end(), '\n') == 1001);
    CHECK(load_trace(dir.file("t.csv")) == t);
    CHECK_THROWS_AS(trace_from_csv("step,a,target\n"), FormatError);
}

TEST_CASE("model labels")
{
    CHECK(parse_model("single:SHC-r").kind == ModelKind::shc_restart);
    CHECK(parse_model("pmo").population_based());
    auto m = parse_model("mmo:square");
    CHECK(m.mmo());
    CHECK(m.shape == MmoShape::square);
    CHECK_THROWS_AS(parse_model("mmo:cubic"), Error);
    CHECK_THROWS_AS(parse_model("single:PSO"), FormatError);
    for (const auto& label : all_model_labels())
        CHECK(parse_model(label).label == label);
}

TEST_CASE("presets carry the published population sizes and budgets")
{
    const std::vector<std::tuple<std::string, std::size_t, std::size_t>> expected{
        {"trimesh", 20, 1000},       {"x264", 50, 2500},          {"storm-wc", 50, 600},   {"storm-rs", 50, 900},
        {"storm-sol", 50, 700},      {"keras-dnn-dsr", 60, 800},  {"keras-dnn-coffee", 50, 900},
        {"keras-lstm", 20, 400}};
    CHECK(presets().size() == expected.size());
    for (const auto& [name, pop, budget] : expected) {
        auto p = find_preset(name);
        REQUIRE(p);
        CHECK(p->population_size == pop);
        CHECK(p->budget == budget);
    }
    CHECK_FALSE(find_preset("unknown"));

    auto plan = parse_plan(fmt::format(R"({{"space": {}, "oracle": {{"synthetic": {{}}}}, "preset": "storm-wc"}})",
                                       space_json(10)));
    CHECK(plan.budget == 600);
    CHECK(plan.population_size == 50);
}

TEST_CASE("plan parsing: defaults and validation")
{
    auto plan = parse_plan(synthetic_plan(6, ""));
    CHECK(plan.repeats == 3);
    CHECK(plan.models == all_model_labels());
    CHECK(plan.weights == default_weights());
    CHECK(plan.oracle.kind == OracleSpec::Kind::synthetic);

    auto defaults = parse_plan(fmt::format(R"({{"space": {}, "oracle": {{"synthetic": {{}}}}, "budget": 50,
                                               "population_size": 5}})",
                                           space_json(4)));
    CHECK(defaults.repeats == 30);

    CHECK_THROWS_AS(parse_plan(synthetic_plan(6, R"(, "population_size": 100)")), Error);
    CHECK_THROWS_AS(parse_plan(synthetic_plan(6, R"(, "models": ["mmo:linear"], "weights": [])")), Error);
    CHECK_NOTHROW(parse_plan(synthetic_plan(6, R"(, "models": ["single:RS"], "weights": [])")));
    CHECK_THROWS_AS(parse_plan(synthetic_plan(6, R"(, "weights": [0.5, -1])")), Error);
    CHECK_THROWS_AS(parse_plan(synthetic_plan(6, R"(, "models": ["single:XYZ"])")), Error);
    CHECK_THROWS_AS(parse_plan(synthetic_plan(6, R"(, "repeats": "many")")), FormatError);
    CHECK_THROWS_AS(parse_plan("[1, 2]"), FormatError);
    CHECK_THROWS_AS(parse_plan(R"({"oracle": {"synthetic": {}}, "budget": 5, "population_size": 2})"), FormatError);
}

TEST_CASE("plan files resolve relative paths")
{
    testing::TempDir dir;
    testing::write_file(dir.file("space.json"), space_json(2));
    testing::write_file(dir.file("data.csv"), "o0,o1,target,auxiliary\n0,0,1,1\n0,1,2,2\n1,0,3,3\n1,1,4,4\n");
    testing::write_file(dir.file("plan.json"), R"({"space": "space.json", "oracle": {"table": "data.csv"},
        "budget": 4, "population_size": 2, "repeats": 1, "models": ["single:RS"]})");
    auto plan = load_plan(dir.file("plan.json"));
    CHECK(plan.oracle.kind == OracleSpec::Kind::table);
    auto oracle = make_oracle(plan);
    CHECK(oracle->measure(Configuration{{1, 0}}).target_raw == 3);
}

TEST_CASE("plan hash and seeds")
{
    auto a = parse_plan(synthetic_plan(6, ""));
    auto b = parse_plan(synthetic_plan(6, ""));
    CHECK(plan_hash(a) == plan_hash(b));
    b.master_seed = 18;
    CHECK(plan_hash(a) != plan_hash(b));

    CHECK(run_seed(1, "pmo", std::nullopt, 0) == run_seed(1, "pmo", std::nullopt, 0));
    std::set<std::uint64_t> seeds;
    for (std::size_t r = 0; r < 30; ++r)
        for (double w : default_weights())
            seeds.insert(run_seed(1, "mmo:linear", w, r));
    CHECK(seeds.size() == 30 * default_weights().size());
    CHECK(run_seed(1, "pmo", std::nullopt, 0) != run_seed(2, "pmo", std::nullopt, 0));
}

TEST_CASE("MMO_TUNE_SEED overrides the master seed")
{
    ::unsetenv("MMO_TUNE_SEED");
    CHECK(seed_from_env(7) == 7);
    ::setenv("MMO_TUNE_SEED", "12345", 1);
    CHECK(seed_from_env(7) == 12345);
    ::setenv("MMO_TUNE_SEED", "12x", 1);
    CHECK_THROWS_AS(seed_from_env(7), Error);
    ::unsetenv("MMO_TUNE_SEED");
}

TEST_CASE("parallel run execution equals the serial reference for any thread count")
{
    auto plan = parse_plan(synthetic_plan(10, ""));
    auto oracle = make_oracle(plan);
    std::vector<RunSpec> specs;
    for (const auto& m : plan.models)
        for (std::size_t r = 0; r < 2; ++r) {
            auto w = parse_model(m).mmo() ? std::optional<double>(0.5) : std::nullopt;
            specs.push_back({m, w, r, run_seed(plan.master_seed, m, w, r), plan.budget, plan.population_size});
        }
    auto ser = serial::execute_runs(specs, *plan.space, *oracle, plan.optimizer);
    for (int jobs : {1, 3, 0}) {
        auto par = execute_runs(specs, *plan.space, *oracle, plan.optimizer, jobs);
        REQUIRE(par.size() == ser.size());
        for (std::size_t i = 0; i < ser.size(); ++i)
            CHECK(trace_to_csv(par[i]) == trace_to_csv(ser[i]));
    }
}

TEST_CASE("a failing run aborts with the run identified")
{
    auto plan = parse_plan(fmt::format(R"({{"space": {}, "oracle": {{"command": "exit 3", "samples": 1}},
        "budget": 5, "population_size": 2, "repeats": 1, "models": ["single:RS"]}})",
                                       space_json(3)));
    try {
        run_campaign(plan, 1);
        FAIL("campaign succeeded");
    } catch (const MeasurementError& e) {
        CHECK(std::string(e.what()).find("single:RS #0") != std::string::npos);
        CHECK(std::string(e.what()).find("status 3") != std::string::npos);
    }
}

TEST_CASE("preliminary budgets round up")
{
    auto plan = parse_plan(synthetic_plan(8, R"(, "budget": 95, "population_size": 15)"));
    auto pb = preliminary_budget(plan);
    CHECK(pb.budget == 10);
    CHECK(pb.population_size == 2);
    plan.budget = 600;
    plan.population_size = 50;
    CHECK(preliminary_budget(plan).budget == 60);
    CHECK(preliminary_budget(plan).population_size == 5);
    plan.population_size = 25;
    CHECK(preliminary_budget(plan).population_size == 3);
}

TEST_CASE("preliminary selection rules")
{
    auto single = parse_plan(synthetic_plan(8, R"(, "models": ["mmo:sqrt"], "weights": [0.7])"));
    auto oracle = make_oracle(single);
    auto chosen = preliminary_weight_selection(single, *oracle);
    CHECK(chosen == std::map<std::string, double>{{"mmo:sqrt", 0.7}});

    std::vector<RunSpec> specs{{"mmo:linear", 0.1, 0, 1, 10, 2}, {"mmo:linear", 0.5, 0, 2, 10, 2},
                               {"mmo:linear", 10.0, 0, 3, 10, 2}};
    std::vector<RunTrace> traces{fake_trace(3.0), fake_trace(1.0), fake_trace(2.0)};
    CHECK(choose_preliminary(specs, traces, 0).at("mmo:linear") == 0.5);

    // exact ties resolve uniformly at random, driven by the master seed
    std::vector<RunTrace> tied{fake_trace(1.0), fake_trace(1.0), fake_trace(2.0)};
    int first = 0;
    const int seeds = 4000;
    for (int s = 0; s < seeds; ++s) {
        auto w = choose_preliminary(specs, tied, static_cast<std::uint64_t>(s)).at("mmo:linear");
        CHECK(w != 10.0);
        first += w == 0.1;
    }
    CHECK(testing::within_sigma(first, seeds, 0.5));
    CHECK(choose_preliminary(specs, tied, 9) == choose_preliminary(specs, tied, 9));
}

TEST_CASE("preliminary selection finds the only weight that escapes the decoy")
{
    // A 2^10 table with a wide decoy basin at all-zeros and the optimum at all-ones.
    // The auxiliary separates the two basins, so only a large weight keeps
    // auxiliary-extreme configurations alive long enough to cross over.
    auto space = testing::binary_space(10);
    TabularOracle table(space, Direction::minimize, Direction::minimize);
    for (std::uint64_t k = 0; k < space_size(space); ++k) {
        auto c = space.decode(k);
        int ones = 0;
        for (auto v : c.values)
            ones += static_cast<int>(v);
        const double target = ones == 10 ? 0.0 : 1.0 + ones * 0.1 - (ones >= 8 ? 0.25 * (ones - 7) : 0.0);
        table.add_row(c, target, -static_cast<double>(ones));
    }
    std::string table_csv = "o0,o1,o2,o3,o4,o5,o6,o7,o8,o9,target,auxiliary\n";
    for (std::uint64_t k = 0; k < space_size(space); ++k) {
        auto c = space.decode(k);
        auto r = table.measure(c);
        for (auto v : c.values)
            table_csv += fmt::format("{},", v);
        table_csv += fmt::format("{},{}\n", format_real(r.target_raw), format_real(r.auxiliary_raw));
    }
    testing::TempDir dir;
    testing::write_file(dir.file("decoy.csv"), table_csv);
    testing::write_file(dir.file("space.json"), space_to_json(space));

    // exhaustive replay: the preliminary run of each weight, one at a time
    const std::vector<double> weights{0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 10};
    std::uint64_t master = 0;
    bool found = false;
    for (; master < 200 && !found; ++master) {
        auto plan = parse_plan(fmt::format(R"({{"space": "space.json", "oracle": {{"table": "decoy.csv"}},
            "budget": 300, "population_size": 20, "models": ["mmo:linear"], "master_seed": {}}})",
                                           master),
                               dir.path().string());
        auto specs = preliminary_specs(plan);
        REQUIRE(specs.size() == weights.size());
        std::vector<double> best;
        for (const auto& s : specs)
            best.push_back(execute_run(s, space, table, plan.optimizer).best());
        const bool only_ten = best.back() == 0.0 &&
                              std::all_of(best.begin(), best.end() - 1, [](double b) { return b > 0.0; });
        if (!only_ten)
            continue;
        found = true;
        CHECK(preliminary_weight_selection(plan, table).at("mmo:linear") == 10.0);
    }
    CHECK(found);
}

TEST_CASE("data-driven selection")
{
    auto space = testing::binary_space(8);
    SyntheticOracle live(space, {.seed = 3});
    auto table = parse_table(table_to_csv(space, tabulate(live)), space);
    auto plan = parse_plan(fmt::format(R"({{"space": {}, "oracle": {{"synthetic": {{"seed": 3}}}}, "budget": 60,
        "population_size": 10, "repeats": 6, "models": ["mmo:linear", "mmo:square"], "weights": [0.01, 0.5, 10],
        "master_seed": 4}})",
                                       space_to_json(space)));

    auto replay = data_driven_weight_selection(table, plan, 1);
    auto online = full_scale_weight_selection(plan, live, 1);
    CHECK(replay.chosen == online.chosen);
    CHECK(replay.ranks == online.ranks);
    CHECK(replay.elapsed_seconds > 0.0);

    // exhaustive per-weight replay as the oracle for the selection rule
    for (const auto& instance : {std::string("mmo:linear"), std::string("mmo:square")}) {
        std::map<std::string, std::vector<double>> per_weight;
        for (double w : plan.weights)
            for (std::size_t r = 0; r < plan.repeats; ++r) {
                RunSpec s{instance, w, r, run_seed(plan.master_seed, instance, w, r), plan.budget, plan.population_size};
                per_weight[format_real(w)].push_back(execute_run(s, space, table, plan.optimizer).best());
            }
        auto ranks = scott_knott(per_weight);
        double best_w = 0;
        std::pair<int, double> best_key{std::numeric_limits<int>::max(), 0.0};
        for (double w : plan.weights) {
            std::pair<int, double> key{ranks[format_real(w)], mean(per_weight[format_real(w)])};
            if (key < best_key) {
                best_key = key;
                best_w = w;
            }
        }
        CHECK(replay.chosen.at(instance) == best_w);
    }

    auto one = plan;
    one.weights = {0.3};
    auto single = data_driven_weight_selection(table, one, 1);
    CHECK(single.chosen.at("mmo:linear") == 0.3);
    CHECK(single.elapsed_seconds > 0.0);
}

TEST_CASE("data-driven selection names unmeasured configurations")
{
    auto space = testing::binary_space(6);
    TabularOracle partial(space, Direction::minimize, Direction::minimize);
    partial.add_row(Configuration{{0, 0, 0, 0, 0, 0}}, 1.0, 1.0);
    auto plan = parse_plan(fmt::format(R"({{"space": {}, "oracle": {{"synthetic": {{}}}}, "budget": 20,
        "population_size": 4, "repeats": 1, "models": ["mmo:linear"], "weights": [0.5]}})",
                                       space_to_json(space)));
    CHECK_THROWS_WITH_AS(data_driven_weight_selection(partial, plan, 1), doctest::Contains("unmeasured configuration ("),
                         UnmeasuredConfiguration);
}

TEST_CASE("campaign: single run, determinism and model independence")
{
    auto one = parse_plan(synthetic_plan(8, R"(, "models": ["single:RS"], "repeats": 1)"));
    auto c1 = run_campaign(one);
    CHECK(c1.runs.size() == 1);
    CHECK(c1.preliminary.empty());
    CHECK(build_report(c1)["entries"].size() == 1);

    testing::TempDir a, b;
    auto x = small_campaign(), y = small_campaign();
    write_campaign(x, a.path().string());
    write_campaign(y, b.path().string());
    std::size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a.path())) {
        if (!entry.is_regular_file())
            continue;
        ++files;
        auto rel = fs::relative(entry.path(), a.path());
        CHECK(testing::read_file(entry.path().string()) == testing::read_file((b.path() / rel).string()));
    }
    CHECK(files == 3 + x.runs.size() + x.preliminary.size());

    // adding a model leaves the other models' traces untouched
    auto fewer = small_campaign(R"(["single:SA", "mmo:linear"])");
    for (const auto& r : fewer.runs) {
        auto same = std::find_if(x.runs.begin(), x.runs.end(), [&](const auto& o) {
            return o.spec.model == r.spec.model && o.spec.weight == r.spec.weight && o.spec.run == r.spec.run;
        });
        REQUIRE(same != x.runs.end());
        CHECK(same->trace == r.trace);
    }
}

TEST_CASE("campaign: budget fidelity and report contents")
{
    auto c = small_campaign();
    CHECK(c.runs.size() == 3 + 3 + 2 * 3);
    CHECK(c.preliminary.size() == 2);
    for (const auto& r : c.runs) {
        std::set<Configuration> distinct;
        for (const auto& e : r.trace.entries)
            distinct.insert(e.config);
        CHECK(distinct.size() == r.trace.size());
        CHECK(r.trace.entries.back().consumed <= c.budget);
    }
    auto report = build_report(c);
    CHECK(report["counterpart"] == "single:SA");
    CHECK(report["plan_hash"] == c.plan_hash);
    CHECK(report["entries"].size() == 4);
    bool selected_seen = false;
    for (const auto& e : report["entries"]) {
        CHECK(e["runs"].size() == 3);
        CHECK(e.contains("sk_rank"));
        CHECK(e.contains("p_value"));
        CHECK(e.contains("a12"));
        CHECK(e.contains("gain"));
        CHECK(e.contains("efficiency"));
        if (e.contains("selected") && e["selected"].get<bool>())
            selected_seen = true;
    }
    CHECK(selected_seen);

    auto csv = results_csv(c);
    CHECK(csv.rfind("model,weight,run,best_target,measurements_to_best\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(c.runs.size() + 1));

    auto sweep = sweep_csv(report);
    CHECK(sweep.find("mmo:linear,0.1,") != std::string::npos);
    CHECK(sweep.find("mmo:linear,10,") != std::string::npos);
    CHECK(sweep.find("best,mmo:linear,") != std::string::npos);
}

TEST_CASE("campaign: the stored report is recomputable from the traces")
{
    testing::TempDir dir;
    auto c = small_campaign();
    write_campaign(c, dir.path().string());
    auto reloaded = load_campaign(dir.path().string());
    CHECK(reloaded.runs.size() == c.runs.size());
    CHECK(report_text(reloaded) == testing::read_file(dir.file("report.json")));
}

TEST_CASE("campaign: selected-only full-scale runs")
{
    auto plan = parse_plan(synthetic_plan(8, R"(, "models": ["mmo:sqrt"], "full_scale_weights": "selected")"));
    auto c = run_campaign(plan);
    CHECK(c.runs.size() == plan.repeats);
    auto chosen = preliminary_weight_selection(plan, *make_oracle(plan));
    for (const auto& r : c.runs)
        CHECK(*r.spec.weight == chosen.at("mmo:sqrt"));
}
