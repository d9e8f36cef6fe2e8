#include "mmotune/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <omp.h>

#include "mmotune/error.hpp"

namespace mmotune {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Models and presets

ModelSpec parse_model(std::string_view label)
{
    ModelSpec m;
    m.label = std::string(label);
    if (label == "single:RS")
        m.kind = ModelKind::rs;
    else if (label == "single:SHC-r")
        m.kind = ModelKind::shc_restart;
    else if (label == "single:SA")
        m.kind = ModelKind::sa;
    else if (label == "single:SOGA")
        m.kind = ModelKind::soga;
    else if (label == "pmo")
        m.kind = ModelKind::pmo;
    else if (label.starts_with("mmo:")) {
        m.kind = ModelKind::mmo;
        m.shape = parse_mmo_shape(label.substr(4));
    } else
        throw FormatError(fmt::format("unknown model '{}'", label));
    return m;
}

const std::vector<std::string>& all_model_labels()
{
    static const std::vector<std::string> labels{"single:RS", "single:SHC-r", "single:SA",  "single:SOGA",
                                                 "pmo",       "mmo:linear",   "mmo:sqrt",   "mmo:square"};
    return labels;
}

const std::vector<double>& default_weights()
{
    static const std::vector<double> weights{0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 10.0};
    return weights;
}

const std::vector<Preset>& presets()
{
    static const std::vector<Preset> table{
        {"trimesh", 20, 1000},        {"x264", 50, 2500},         {"storm-wc", 50, 600},
        {"storm-rs", 50, 900},        {"storm-sol", 50, 700},     {"keras-dnn-dsr", 60, 800},
        {"keras-dnn-coffee", 50, 900}, {"keras-lstm", 20, 400},
    };
    return table;
}

std::optional<Preset> find_preset(std::string_view name)
{
    for (const auto& p : presets())
        if (p.name == name)
            return p;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Plans

void ExperimentPlan::validate() const
{
    if (!space)
        throw Error("plan has no option space");
    if (budget == 0)
        throw Error("plan budget must be positive");
    if (population_size == 0)
        throw Error("plan population size must be positive");
    if (repeats == 0)
        throw Error("plan repeats must be positive");
    if (models.empty())
        throw Error("plan selects no models");
    bool any_mmo = false;
    for (const auto& m : model_specs()) {
        any_mmo = any_mmo || m.mmo();
        if (m.population_based() && budget < population_size)
            throw Error(fmt::format("budget {} is below population size {} for {}", budget, population_size, m.label));
    }
    if (any_mmo && weights.empty())
        throw Error("MMO models selected but no weights given");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw Error(fmt::format("weight {} must be positive", w));
    optimizer.validate();
}

std::vector<ModelSpec> ExperimentPlan::model_specs() const
{
    std::vector<ModelSpec> out;
    for (const auto& m : models)
        out.push_back(parse_model(m));
    return out;
}

namespace {

std::string resolve_path(const std::string& path, const std::string& base_dir)
{
    fs::path p(path);
    if (p.is_absolute() || base_dir.empty())
        return p.string();
    return (fs::path(base_dir) / p).lexically_normal().string();
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(fmt::format("cannot open '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

SyntheticLandscapeParams synthetic_from_json(const json& j, const OptionSpace* space)
{
    SyntheticLandscapeParams p;
    p.seed = j.value("seed", std::uint64_t{0});
    p.local_optima_density = j.value("local_optima_density", p.local_optima_density);
    p.ruggedness = j.value("ruggedness", p.ruggedness);
    p.correlation = j.value("correlation", p.correlation);
    if (j.contains("planted_optimum") && !j["planted_optimum"].is_null()) {
        Configuration c{j["planted_optimum"].get<std::vector<std::int64_t>>()};
        if (space)
            space->validate(c);
        p.planted_optimum = c;
    }
    return p;
}

json synthetic_to_json(const SyntheticLandscapeParams& p)
{
    json j{{"seed", p.seed},
           {"local_optima_density", p.local_optima_density},
           {"ruggedness", p.ruggedness},
           {"correlation", p.correlation}};
    if (p.planted_optimum)
        j["planted_optimum"] = p.planted_optimum->values;
    return j;
}

} // namespace

ExperimentPlan parse_plan(std::string_view json_text, const std::string& base_dir)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("plan is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object())
        throw FormatError("plan must be a JSON object");

    ExperimentPlan plan;
    try {
        if (!doc.contains("space"))
            throw FormatError("plan is missing \"space\"");
        if (doc["space"].is_string())
            plan.space = std::make_shared<OptionSpace>(load_space(resolve_path(doc["space"], base_dir)));
        else
            plan.space = std::make_shared<OptionSpace>(parse_space(doc["space"].dump()));

        plan.target_direction = parse_direction(doc.value("target_direction", std::string("minimize")));
        plan.auxiliary_direction = parse_direction(doc.value("auxiliary_direction", std::string("minimize")));

        if (!doc.contains("oracle") || !doc["oracle"].is_object())
            throw FormatError("plan is missing an \"oracle\" object");
        const auto& o = doc["oracle"];
        if (o.contains("table")) {
            plan.oracle.kind = OracleSpec::Kind::table;
            plan.oracle.table_path = resolve_path(o["table"].get<std::string>(), base_dir);
        } else if (o.contains("command")) {
            plan.oracle.kind = OracleSpec::Kind::command;
            plan.oracle.command.command_template = o["command"].get<std::string>();
            plan.oracle.command.samples = o.value("samples", std::size_t{5});
            plan.oracle.command.timeout = std::chrono::milliseconds(o.value("timeout_ms", 60000));
            plan.oracle.command.target_direction = plan.target_direction;
            plan.oracle.command.auxiliary_direction = plan.auxiliary_direction;
        } else if (o.contains("synthetic")) {
            plan.oracle.kind = OracleSpec::Kind::synthetic;
            plan.oracle.synthetic = synthetic_from_json(o["synthetic"], plan.space.get());
        } else {
            throw FormatError("oracle must be one of \"table\", \"command\", \"synthetic\"");
        }

        plan.preset = doc.value("preset", std::string());
        if (!plan.preset.empty()) {
            auto preset = find_preset(plan.preset);
            if (!preset)
                throw FormatError(fmt::format("unknown preset '{}'", plan.preset));
            plan.budget = preset->budget;
            plan.population_size = preset->population_size;
        }
        plan.budget = doc.value("budget", plan.budget);
        plan.population_size = doc.value("population_size", plan.population_size);
        plan.repeats = doc.value("repeats", plan.repeats);
        plan.models = doc.value("models", all_model_labels());
        plan.weights = doc.value("weights", default_weights());
        plan.master_seed = doc.value("master_seed", std::uint64_t{0});
        plan.preliminary_selection = doc.value("preliminary_selection", true);
        auto mode = doc.value("full_scale_weights", std::string("all"));
        if (mode != "all" && mode != "selected")
            throw FormatError("full_scale_weights must be \"all\" or \"selected\"");
        plan.full_scale_selected_only = mode == "selected";

        if (doc.contains("optimizer")) {
            const auto& c = doc["optimizer"];
            auto& cfg = plan.optimizer;
            cfg.mutation_rate = c.value("mutation_rate", cfg.mutation_rate);
            cfg.crossover_rate = c.value("crossover_rate", cfg.crossover_rate);
            cfg.rs_radius = c.value("rs_radius", cfg.rs_radius);
            cfg.sa_initial_temperature = c.value("sa_initial_temperature", cfg.sa_initial_temperature);
            cfg.sa_cooling = c.value("sa_cooling", cfg.sa_cooling);
            cfg.shc_restart_stall = c.value("shc_restart_stall", cfg.shc_restart_stall);
            cfg.idle_limit = c.value("idle_limit", cfg.idle_limit);
        }
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("plan field has the wrong type: {}", e.what()));
    }
    plan.optimizer.population_size = plan.population_size;
    plan.validate();
    return plan;
}

ExperimentPlan load_plan(const std::string& path)
{
    return parse_plan(read_file(path), fs::path(path).parent_path().string());
}

json plan_to_json(const ExperimentPlan& plan)
{
    json oracle;
    switch (plan.oracle.kind) {
    case OracleSpec::Kind::table: oracle = {{"table", plan.oracle.table_path}}; break;
    case OracleSpec::Kind::command:
        oracle = {{"command", plan.oracle.command.command_template},
                  {"samples", plan.oracle.command.samples},
                  {"timeout_ms", plan.oracle.command.timeout.count()}};
        break;
    case OracleSpec::Kind::synthetic: oracle = {{"synthetic", synthetic_to_json(plan.oracle.synthetic)}}; break;
    }
    const auto& c = plan.optimizer;
    return json{{"space", json::parse(space_to_json(*plan.space))},
                {"oracle", oracle},
                {"preset", plan.preset},
                {"budget", plan.budget},
                {"population_size", plan.population_size},
                {"repeats", plan.repeats},
                {"models", plan.models},
                {"weights", plan.weights},
                {"master_seed", plan.master_seed},
                {"target_direction", to_string(plan.target_direction)},
                {"auxiliary_direction", to_string(plan.auxiliary_direction)},
                {"preliminary_selection", plan.preliminary_selection},
                {"full_scale_weights", plan.full_scale_selected_only ? "selected" : "all"},
                {"optimizer",
                 {{"mutation_rate", c.mutation_rate},
                  {"crossover_rate", c.crossover_rate},
                  {"rs_radius", c.rs_radius},
                  {"sa_initial_temperature", c.sa_initial_temperature},
                  {"sa_cooling", c.sa_cooling},
                  {"shc_restart_stall", c.shc_restart_stall},
                  {"idle_limit", c.idle_limit}}}};
}

std::string plan_hash(const ExperimentPlan& plan)
{
    return fmt::format("{:016x}", fnv1a(plan_to_json(plan).dump()));
}

std::uint64_t seed_from_env(std::uint64_t fallback)
{
    const char* value = std::getenv("MMO_TUNE_SEED");
    if (!value || !*value)
        return fallback;
    char* end = nullptr;
    auto parsed = std::strtoull(value, &end, 10);
    if (end == value || *end != '\0')
        throw Error(fmt::format("MMO_TUNE_SEED='{}' is not an unsigned integer", value));
    return parsed;
}

std::unique_ptr<Oracle> make_oracle(const ExperimentPlan& plan)
{
    switch (plan.oracle.kind) {
    case OracleSpec::Kind::table:
        return std::make_unique<TabularOracle>(
            load_table(plan.oracle.table_path, *plan.space, plan.target_direction, plan.auxiliary_direction));
    case OracleSpec::Kind::command: return std::make_unique<CommandOracle>(*plan.space, plan.oracle.command);
    case OracleSpec::Kind::synthetic: return std::make_unique<SyntheticOracle>(*plan.space, plan.oracle.synthetic);
    }
    throw Error("unknown oracle kind");
}

// ---------------------------------------------------------------------------
// Runs

std::uint64_t run_seed(std::uint64_t master_seed, std::string_view model, std::optional<double> weight,
                       std::size_t run)
{
    auto text = fmt::format("{}|{}|{}|{}", master_seed, model, weight ? format_real(*weight) : "-", run);
    return mix64(fnv1a(text));
}

std::string RunSpec::key() const
{
    return weight ? fmt::format("{}@{}", model, format_real(*weight)) : model;
}

RunTrace execute_run(const RunSpec& spec, const OptionSpace& space, const Oracle& oracle,
                     const OptimizerConfig& base)
{
    OptimizerConfig cfg = base;
    cfg.seed = spec.seed;
    cfg.population_size = spec.population_size;
    BudgetLedger ledger(spec.budget);
    const auto model = parse_model(spec.model);
    switch (model.kind) {
    case ModelKind::rs: return run_rs(space, ledger, oracle, cfg);
    case ModelKind::shc_restart: return run_shc_restart(space, ledger, oracle, cfg);
    case ModelKind::sa: return run_sa(space, ledger, oracle, cfg);
    case ModelKind::soga: return run_soga(space, ledger, oracle, cfg);
    case ModelKind::pmo: return run_nsga2(space, ledger, oracle, PmoModel{}, cfg);
    case ModelKind::mmo:
        if (!spec.weight)
            throw Error(fmt::format("{} run needs a weight", spec.model));
        return run_nsga2(space, ledger, oracle, MmoInstance{model.shape, *spec.weight}, cfg);
    }
    throw Error("unknown model kind");
}

namespace {
[[noreturn]] void rethrow_run_failure(const RunSpec& spec, const std::exception_ptr& error)
{
    try {
        std::rethrow_exception(error);
    } catch (const UnmeasuredConfiguration& e) {
        throw UnmeasuredConfiguration(fmt::format("run {} #{} failed: {}", spec.key(), spec.run, e.what()));
    } catch (const MeasurementError& e) {
        throw MeasurementError(fmt::format("run {} #{} failed: {}", spec.key(), spec.run, e.what()), e.transcript());
    } catch (const std::exception& e) {
        throw Error(fmt::format("run {} #{} failed: {}", spec.key(), spec.run, e.what()));
    }
}
} // namespace

std::vector<RunTrace> execute_runs(const std::vector<RunSpec>& specs, const OptionSpace& space, const Oracle& oracle,
                                   const OptimizerConfig& base, int jobs)
{
    std::vector<RunTrace> traces(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
    const auto n = static_cast<std::ptrdiff_t>(specs.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            traces[k] = execute_run(specs[k], space, oracle, base);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (std::size_t k = 0; k < specs.size(); ++k)
        if (errors[k])
            rethrow_run_failure(specs[k], errors[k]);
    return traces;
}

namespace serial {
std::vector<RunTrace> execute_runs(const std::vector<RunSpec>& specs, const OptionSpace& space, const Oracle& oracle,
                                   const OptimizerConfig& base)
{
    std::vector<RunTrace> traces;
    traces.reserve(specs.size());
    for (const auto& spec : specs) {
        try {
            traces.push_back(execute_run(spec, space, oracle, base));
        } catch (...) {
            rethrow_run_failure(spec, std::current_exception());
        }
    }
    return traces;
}
} // namespace serial

// ---------------------------------------------------------------------------
// Weight selection

PreliminaryBudget preliminary_budget(const ExperimentPlan& plan)
{
    auto tenth_ceil = [](std::size_t v) { return (v + 9) / 10; };
    return {std::max<std::size_t>(1, tenth_ceil(plan.budget)),
            std::max<std::size_t>(2, tenth_ceil(plan.population_size))};
}

std::vector<RunSpec> preliminary_specs(const ExperimentPlan& plan)
{
    const auto scaled = preliminary_budget(plan);
    std::vector<RunSpec> specs;
    for (const auto& m : plan.model_specs()) {
        if (!m.mmo())
            continue;
        for (double w : plan.weights)
            specs.push_back({m.label, w, 0, run_seed(plan.master_seed, "preliminary:" + m.label, w, 0), scaled.budget,
                             scaled.population_size});
    }
    return specs;
}

std::map<std::string, double> choose_preliminary(const std::vector<RunSpec>& specs,
                                                 const std::vector<RunTrace>& traces, std::uint64_t master_seed)
{
    if (specs.size() != traces.size())
        throw Error("preliminary specs and traces differ in number");
    std::vector<std::string> instances;
    for (const auto& s : specs)
        if (std::find(instances.begin(), instances.end(), s.model) == instances.end())
            instances.push_back(s.model);

    std::map<std::string, double> chosen;
    for (const auto& instance : instances) {
        double best = std::numeric_limits<double>::infinity();
        std::vector<double> tied;
        for (std::size_t k = 0; k < specs.size(); ++k) {
            if (specs[k].model != instance || traces[k].empty())
                continue;
            const double result = traces[k].best();
            if (result < best) {
                best = result;
                tied.assign(1, *specs[k].weight);
            } else if (result == best) {
                tied.push_back(*specs[k].weight);
            }
        }
        if (tied.empty())
            continue;
        Rng tie_rng(mix64(fnv1a(fmt::format("preliminary-tie|{}|{}", master_seed, instance))));
        chosen[instance] = tied.size() == 1 ? tied.front() : tied[tie_rng.index(tied.size())];
    }
    return chosen;
}

std::map<std::string, double> preliminary_weight_selection(const ExperimentPlan& plan, const Oracle& oracle,
                                                           int jobs)
{
    plan.validate();
    auto specs = preliminary_specs(plan);
    auto traces = execute_runs(specs, *plan.space, oracle, plan.optimizer, jobs);
    return choose_preliminary(specs, traces, plan.master_seed);
}

WeightSelection choose_full_scale(const std::map<std::string, std::map<double, std::vector<double>>>& results)
{
    WeightSelection selection;
    for (const auto& [instance, per_weight] : results) {
        std::map<std::string, std::vector<double>> groups;
        for (const auto& [w, values] : per_weight)
            groups[format_real(w)] = values;
        auto ranks = scott_knott(groups);
        double best_w = 0.0;
        int best_rank = std::numeric_limits<int>::max();
        double best_mean = std::numeric_limits<double>::infinity();
        for (const auto& [w, values] : per_weight) { // ascending weight
            const int r = ranks.at(format_real(w));
            const double m = mean(values);
            selection.ranks[instance][w] = r;
            selection.means[instance][w] = m;
            if (r < best_rank || (r == best_rank && m < best_mean)) {
                best_rank = r;
                best_mean = m;
                best_w = w;
            }
        }
        selection.chosen[instance] = best_w;
    }
    return selection;
}

WeightSelection full_scale_weight_selection(const ExperimentPlan& plan, const Oracle& oracle, int jobs)
{
    plan.validate();
    std::vector<RunSpec> specs;
    for (const auto& m : plan.model_specs()) {
        if (!m.mmo())
            continue;
        for (double w : plan.weights)
            for (std::size_t r = 0; r < plan.repeats; ++r)
                specs.push_back(
                    {m.label, w, r, run_seed(plan.master_seed, m.label, w, r), plan.budget, plan.population_size});
    }
    auto traces = execute_runs(specs, *plan.space, oracle, plan.optimizer, jobs);
    std::map<std::string, std::map<double, std::vector<double>>> results;
    for (std::size_t k = 0; k < specs.size(); ++k)
        results[specs[k].model][*specs[k].weight].push_back(traces[k].best());
    return choose_full_scale(results);
}

WeightSelection data_driven_weight_selection(const TabularOracle& table, const ExperimentPlan& plan, int jobs)
{
    if (!(table.space() == *plan.space))
        throw Error("table space does not match the plan's space");
    const auto start = std::chrono::steady_clock::now();
    auto selection = full_scale_weight_selection(plan, table, jobs);
    selection.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return selection;
}

// ---------------------------------------------------------------------------
// Campaigns

namespace {

std::string trace_file_name(const RunSpec& spec, std::string_view prefix)
{
    std::string key = spec.key();
    for (auto& ch : key)
        if (ch == ':' || ch == '@' || ch == '/')
            ch = '_';
    return fmt::format("{}/{}_r{:03}.csv", prefix, key, spec.run);
}

} // namespace

Campaign run_campaign(const ExperimentPlan& plan, int jobs)
{
    plan.validate();
    auto oracle = make_oracle(plan);
    const auto& space = *plan.space;

    Campaign campaign;
    campaign.plan_hash = plan_hash(plan);
    campaign.master_seed = plan.master_seed;
    campaign.budget = plan.budget;
    campaign.population_size = plan.population_size;
    campaign.repeats = plan.repeats;

    const auto models = plan.model_specs();
    const bool any_mmo = std::any_of(models.begin(), models.end(), [](const auto& m) { return m.mmo(); });

    std::map<std::string, double> chosen;
    if (plan.preliminary_selection && any_mmo) {
        auto specs = preliminary_specs(plan);
        auto traces = execute_runs(specs, space, *oracle, plan.optimizer, jobs);
        chosen = choose_preliminary(specs, traces, plan.master_seed);
        for (std::size_t k = 0; k < specs.size(); ++k)
            campaign.preliminary.push_back({specs[k], std::move(traces[k]), trace_file_name(specs[k], "preliminary")});
    }

    std::vector<RunSpec> specs;
    for (const auto& m : models) {
        std::vector<std::optional<double>> weights{std::nullopt};
        if (m.mmo()) {
            weights.clear();
            if (plan.full_scale_selected_only && chosen.count(m.label))
                weights.push_back(chosen.at(m.label));
            else
                for (double w : plan.weights)
                    weights.push_back(w);
        }
        for (const auto& w : weights)
            for (std::size_t r = 0; r < plan.repeats; ++r)
                specs.push_back(
                    {m.label, w, r, run_seed(plan.master_seed, m.label, w, r), plan.budget, plan.population_size});
    }
    auto traces = execute_runs(specs, space, *oracle, plan.optimizer, jobs);
    for (std::size_t k = 0; k < specs.size(); ++k)
        campaign.runs.push_back({specs[k], std::move(traces[k]), trace_file_name(specs[k], "traces")});
    return campaign;
}

namespace {

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

struct EntryGroup {
    std::string model;
    std::optional<double> weight;
    std::vector<const CampaignRun*> runs;

    std::string key() const { return weight ? fmt::format("{}@{}", model, format_real(*weight)) : model; }
    std::vector<double> results() const
    {
        std::vector<double> out;
        for (const auto* r : runs)
            out.push_back(r->trace.best());
        return out;
    }
    std::vector<RunTrace> traces() const
    {
        std::vector<RunTrace> out;
        for (const auto* r : runs)
            out.push_back(r->trace);
        return out;
    }
};

std::vector<EntryGroup> group_runs(const std::vector<CampaignRun>& runs)
{
    std::vector<EntryGroup> groups;
    for (const auto& run : runs) {
        if (run.trace.empty())
            throw Error(fmt::format("run {} #{} has an empty trace", run.spec.key(), run.spec.run));
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return g.model == run.spec.model && g.weight == run.spec.weight; });
        if (it == groups.end()) {
            groups.push_back({run.spec.model, run.spec.weight, {}});
            it = std::prev(groups.end());
        }
        it->runs.push_back(&run);
    }
    return groups;
}

} // namespace

json build_report(const Campaign& campaign)
{
    auto groups = group_runs(campaign.runs);

    std::map<std::string, double> selected;
    if (!campaign.preliminary.empty()) {
        std::vector<RunSpec> specs;
        std::vector<RunTrace> traces;
        for (const auto& p : campaign.preliminary) {
            specs.push_back(p.spec);
            traces.push_back(p.trace);
        }
        selected = choose_preliminary(specs, traces, campaign.master_seed);
    }

    std::map<std::string, std::vector<double>> singles, all_groups;
    std::vector<double> everything;
    for (const auto& g : groups) {
        auto results = g.results();
        everything.insert(everything.end(), results.begin(), results.end());
        all_groups[g.key()] = results;
        if (parse_model(g.model).single())
            singles[g.model] = results;
    }

    std::optional<std::string> counterpart;
    if (!singles.empty())
        counterpart = pick_best_counterpart(singles);
    std::optional<double> y_o;
    try {
        y_o = utopian(everything);
    } catch (const Error&) {
    }
    auto sk = scott_knott(all_groups);

    const EntryGroup* baseline = nullptr;
    for (const auto& g : groups)
        if (counterpart && g.model == *counterpart)
            baseline = &g;
    const auto baseline_results = baseline ? baseline->results() : std::vector<double>{};
    const auto baseline_traces = baseline ? baseline->traces() : std::vector<RunTrace>{};

    json entries = json::array();
    for (const auto& g : groups) {
        auto results = g.results();
        json entry{{"model", g.model},
                   {"weight", g.weight ? json(*g.weight) : json(nullptr)},
                   {"runs", results},
                   {"mean", mean(results)},
                   {"stddev", stddev(results)},
                   {"median", median(results)},
                   {"sk_rank", sk.at(g.key())}};
        json to_best = json::array();
        for (const auto* r : g.runs)
            to_best.push_back(*r->trace.measurements_to_best());
        entry["measurements_to_best"] = to_best;
        if (g.weight) {
            auto it = selected.find(g.model);
            entry["selected"] = it != selected.end() && it->second == *g.weight;
        }
        if (baseline) {
            if (y_o && results.size() == baseline_results.size())
                entry["gain"] = number_or_null(normalized_gain(results, baseline_results, *y_o));
            else
                entry["gain"] = nullptr;
            if (results.size() == baseline_results.size()) {
                auto st = compare(results, baseline_results);
                entry["p_value"] = st.p_value;
                entry["a12"] = st.a12;
                entry["magnitude"] = std::string(to_string(st.magnitude));
                entry["significant"] = st.significant;
            }
            auto traces = g.traces();
            auto r = efficiency_ratio(traces, baseline_traces);
            entry["efficiency"] = {{"converged", r.converged},
                                   {"m", r.model_measurements},
                                   {"b", r.baseline_measurements},
                                   {"r", r.converged ? json(r.percent) : json("not-converged")}};
        }
        entries.push_back(std::move(entry));
    }

    json sel = json::object();
    for (const auto& [instance, w] : selected)
        sel[instance] = w;

    return json{{"plan_hash", campaign.plan_hash},
                {"master_seed", campaign.master_seed},
                {"budget", campaign.budget},
                {"population_size", campaign.population_size},
                {"repeats", campaign.repeats},
                {"counterpart", counterpart ? json(*counterpart) : json(nullptr)},
                {"utopian", y_o ? json(*y_o) : json(nullptr)},
                {"preliminary_selection", sel},
                {"entries", entries}};
}

std::string report_text(const Campaign& campaign)
{
    return build_report(campaign).dump(2) + "\n";
}

std::string results_csv(const Campaign& campaign)
{
    std::string out = "model,weight,run,best_target,measurements_to_best\n";
    for (const auto& r : campaign.runs)
        out += fmt::format("{},{},{},{},{}\n", r.spec.model, r.spec.weight ? format_real(*r.spec.weight) : "",
                           r.spec.run, r.trace.empty() ? "" : format_real(r.trace.best()),
                           r.trace.measurements_to_best().value_or(0));
    return out;
}

std::string sweep_csv(const json& report)
{
    std::map<std::string, std::map<double, std::vector<double>>> per_instance;
    std::map<std::pair<std::string, double>, const json*> rows;
    for (const auto& e : report.at("entries")) {
        if (e.at("weight").is_null())
            continue;
        auto model = e.at("model").get<std::string>();
        auto w = e.at("weight").get<double>();
        per_instance[model][w] = e.at("runs").get<std::vector<double>>();
        rows[{model, w}] = &e;
    }
    auto selection = choose_full_scale(per_instance);

    std::string out = "instance,weight,mean,a12,p_value,magnitude,sk_rank\n";
    for (const auto& [instance, per_weight] : per_instance) {
        for (const auto& [w, values] : per_weight) {
            const json& e = *rows.at({instance, w});
            auto field = [&](const char* key) {
                if (!e.contains(key) || e[key].is_null())
                    return std::string();
                return e[key].is_number() ? format_real(e[key].get<double>()) : e[key].get<std::string>();
            };
            out += fmt::format("{},{},{},{},{},{},{}\n", instance, format_real(w), format_real(mean(values)),
                               field("a12"), field("p_value"), field("magnitude"), selection.ranks[instance][w]);
        }
    }
    for (const auto& [instance, w] : selection.chosen)
        out += fmt::format("best,{},{},,,,\n", instance, format_real(w));
    return out;
}

namespace {

json spec_to_json(const CampaignRun& r)
{
    return {{"model", r.spec.model},
            {"weight", r.spec.weight ? json(*r.spec.weight) : json(nullptr)},
            {"run", r.spec.run},
            {"seed", r.spec.seed},
            {"budget", r.spec.budget},
            {"population_size", r.spec.population_size},
            {"file", r.file}};
}

CampaignRun spec_from_json(const json& j, const std::string& dir)
{
    CampaignRun r;
    r.spec.model = j.at("model").get<std::string>();
    if (!j.at("weight").is_null())
        r.spec.weight = j.at("weight").get<double>();
    r.spec.run = j.at("run").get<std::size_t>();
    r.spec.seed = j.at("seed").get<std::uint64_t>();
    r.spec.budget = j.at("budget").get<std::size_t>();
    r.spec.population_size = j.at("population_size").get<std::size_t>();
    r.file = j.at("file").get<std::string>();
    r.trace = load_trace((fs::path(dir) / r.file).string());
    return r;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(fmt::format("cannot write '{}'", path.string()));
    out << text;
}

} // namespace

void write_campaign(const Campaign& campaign, const std::string& dir)
{
    const fs::path root(dir);
    fs::create_directories(root / "traces");
    if (!campaign.preliminary.empty())
        fs::create_directories(root / "preliminary");

    json manifest{{"plan_hash", campaign.plan_hash},
                  {"master_seed", campaign.master_seed},
                  {"budget", campaign.budget},
                  {"population_size", campaign.population_size},
                  {"repeats", campaign.repeats},
                  {"preliminary", json::array()},
                  {"runs", json::array()}};
    for (const auto& r : campaign.preliminary) {
        emit_trace(r.trace, (root / r.file).string());
        manifest["preliminary"].push_back(spec_to_json(r));
    }
    for (const auto& r : campaign.runs) {
        emit_trace(r.trace, (root / r.file).string());
        manifest["runs"].push_back(spec_to_json(r));
    }
    write_text(root / "manifest.json", manifest.dump(2) + "\n");
    write_text(root / "report.json", report_text(campaign));
    write_text(root / "results.csv", results_csv(campaign));
}

Campaign load_campaign(const std::string& dir)
{
    json manifest;
    try {
        manifest = json::parse(read_file((fs::path(dir) / "manifest.json").string()));
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("manifest is not valid JSON: {}", e.what()));
    }
    Campaign c;
    try {
        c.plan_hash = manifest.at("plan_hash").get<std::string>();
        c.master_seed = manifest.at("master_seed").get<std::uint64_t>();
        c.budget = manifest.at("budget").get<std::size_t>();
        c.population_size = manifest.at("population_size").get<std::size_t>();
        c.repeats = manifest.at("repeats").get<std::size_t>();
        for (const auto& j : manifest.at("preliminary"))
            c.preliminary.push_back(spec_from_json(j, dir));
        for (const auto& j : manifest.at("runs"))
            c.runs.push_back(spec_from_json(j, dir));
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("manifest is malformed: {}", e.what()));
    }
    return c;
}

} // namespace mmotune
