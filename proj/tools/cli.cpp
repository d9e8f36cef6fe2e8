#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mmotune/error.hpp"
#include "mmotune/harness.hpp"

namespace mmotune {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct OracleArgs {
    std::string table;
    std::string command;
    bool synthetic = false;
    SyntheticLandscapeParams landscape;
    std::size_t samples = 5;
    long timeout_ms = 60000;
    std::string target_direction = "minimize";
    std::string auxiliary_direction = "minimize";
};

struct TuneArgs {
    std::string space;
    OracleArgs oracle;
    std::string model;
    double weight = 0.0;
    std::size_t budget = 0;
    std::size_t population = 20;
    std::uint64_t seed = 0;
    std::string out = "trace.csv";
    OptimizerConfig optimizer;
};

struct PlanArgs {
    std::string plan;
    std::string out;
    int jobs = 0;
};

struct SelectArgs {
    std::string plan;
    std::string mode = "preliminary";
    std::string table;
    int jobs = 0;
};

struct StatsArgs {
    std::string dir;
    std::string out;
    bool check = false;
};

struct LandscapeArgs {
    std::string space;
    SyntheticLandscapeParams params;
    std::string out;
    bool serial = false;
};

void add_landscape_options(CLI::App* cmd, SyntheticLandscapeParams& p)
{
    cmd->add_option("--landscape-seed", p.seed, "Synthetic landscape seed");
    cmd->add_option("--density", p.local_optima_density, "Fraction of pit configurations")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--ruggedness", p.ruggedness, "Pit depth scale")->check(CLI::NonNegativeNumber);
    cmd->add_option("--correlation", p.correlation, "Target/auxiliary coupling")->check(CLI::Range(-1.0, 1.0));
}

void write_text(const std::string& path, const std::string& text)
{
    const fs::path p(path);
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(fmt::format("cannot write '{}'", path));
    out << text;
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(fmt::format("cannot open '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

int run_tune(const TuneArgs& a, std::ostream& out)
{
    const auto space = load_space(a.space);
    const auto tdir = parse_direction(a.oracle.target_direction);
    const auto adir = parse_direction(a.oracle.auxiliary_direction);

    std::unique_ptr<Oracle> oracle;
    if (!a.oracle.table.empty()) {
        oracle = std::make_unique<TabularOracle>(load_table(a.oracle.table, space, tdir, adir));
    } else if (!a.oracle.command.empty()) {
        CommandOracleOptions opts{a.oracle.command, a.oracle.samples, std::chrono::milliseconds(a.oracle.timeout_ms),
                                  tdir, adir};
        oracle = std::make_unique<CommandOracle>(space, opts);
    } else {
        oracle = std::make_unique<SyntheticOracle>(space, a.oracle.landscape);
    }

    const auto model = parse_model(a.model);
    RunSpec spec{a.model, std::nullopt, 0, seed_from_env(a.seed), a.budget, a.population};
    if (model.mmo())
        spec.weight = a.weight;
    if (model.population_based() && a.budget < a.population)
        throw Error(fmt::format("budget {} is below population size {}", a.budget, a.population));

    auto trace = execute_run(spec, space, *oracle, a.optimizer);
    emit_trace(trace, a.out);
    if (trace.empty()) {
        out << fmt::format("no measurements; trace written to {}\n", a.out);
        return 0;
    }
    out << fmt::format("best {} after {} measurements ({} distinct); trace written to {}\n", format_real(trace.best()),
                       *trace.measurements_to_best(), trace.entries.back().consumed, a.out);
    return 0;
}

ExperimentPlan plan_from_file(const std::string& path)
{
    auto plan = load_plan(path);
    plan.master_seed = seed_from_env(plan.master_seed);
    return plan;
}

int run_campaign_cmd(const PlanArgs& a, std::ostream& out)
{
    const auto plan = plan_from_file(a.plan);
    const auto campaign = run_campaign(plan, a.jobs);
    write_campaign(campaign, a.out);
    out << fmt::format("{} runs written to {} (plan {})\n", campaign.runs.size(), a.out, campaign.plan_hash);
    return 0;
}

int run_sweep(const PlanArgs& a, std::ostream& out)
{
    auto plan = plan_from_file(a.plan);
    plan.full_scale_selected_only = false;
    const auto campaign = run_campaign(plan, a.jobs);
    write_campaign(campaign, a.out);
    const auto sweep = sweep_csv(build_report(campaign));
    write_text((fs::path(a.out) / "sweep.csv").string(), sweep);
    out << sweep;
    return 0;
}

int run_select(const SelectArgs& a, std::ostream& out)
{
    const auto plan = plan_from_file(a.plan);
    json result{{"mode", a.mode}};
    if (a.mode == "preliminary") {
        auto oracle = make_oracle(plan);
        json chosen = json::object();
        for (const auto& [instance, w] : preliminary_weight_selection(plan, *oracle, a.jobs))
            chosen[instance] = w;
        result["chosen"] = chosen;
    } else {
        std::string path = a.table;
        if (path.empty() && plan.oracle.kind == OracleSpec::Kind::table)
            path = plan.oracle.table_path;
        if (path.empty())
            throw Error("data-driven selection needs a table (--table or a table oracle in the plan)");
        const auto table = load_table(path, *plan.space, plan.target_direction, plan.auxiliary_direction);
        const auto selection = data_driven_weight_selection(table, plan, a.jobs);
        json chosen = json::object(), ranks = json::object();
        for (const auto& [instance, w] : selection.chosen)
            chosen[instance] = w;
        for (const auto& [instance, per_weight] : selection.ranks)
            for (const auto& [w, r] : per_weight)
                ranks[instance][format_real(w)] = {{"sk_rank", r}, {"mean", selection.means.at(instance).at(w)}};
        result["chosen"] = chosen;
        result["ranks"] = ranks;
        result["elapsed_seconds"] = selection.elapsed_seconds;
    }
    out << result.dump(2) << "\n";
    return 0;
}

int run_stats(const StatsArgs& a, std::ostream& out, std::ostream& err)
{
    const auto text = report_text(load_campaign(a.dir));
    if (!a.out.empty())
        write_text(a.out, text);
    else
        out << text;
    if (a.check) {
        const auto stored = read_text((fs::path(a.dir) / "report.json").string());
        if (stored != text) {
            err << "error: recomputed report differs from report.json\n";
            return 2;
        }
    }
    return 0;
}

int run_gen_landscape(const LandscapeArgs& a, std::ostream& out)
{
    const auto space = load_space(a.space);
    const SyntheticOracle oracle(space, a.params);
    const auto rows = a.serial ? serial::tabulate(oracle) : tabulate(oracle);
    write_text(a.out, table_to_csv(space, rows));
    out << fmt::format("{} configurations written to {}; optimum {} with target {}\n", rows.size(), a.out,
                       to_string(oracle.planted_optimum()), format_real(oracle.target(oracle.planted_optimum())));
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Configuration tuning with multi-objectivization"};
    app.name("mmotune");
    app.require_subcommand(1);

    TuneArgs tune;
    auto* tune_cmd = app.add_subcommand("tune", "Run one tuning run and write its trace");
    tune_cmd->add_option("--space", tune.space, "Space file")->required()->check(CLI::ExistingFile);
    auto* table_opt = tune_cmd->add_option("--table", tune.oracle.table, "Pre-measured table CSV")->check(CLI::ExistingFile);
    auto* command_opt = tune_cmd->add_option("--command", tune.oracle.command, "Measurement command template");
    auto* synthetic_opt = tune_cmd->add_flag("--synthetic", tune.oracle.synthetic, "Use a synthetic landscape");
    table_opt->excludes(command_opt)->excludes(synthetic_opt);
    command_opt->excludes(synthetic_opt);
    add_landscape_options(tune_cmd, tune.oracle.landscape);
    tune_cmd->add_option("--samples", tune.oracle.samples, "Command samples per configuration")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--timeout-ms", tune.oracle.timeout_ms, "Command timeout")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--target-direction", tune.oracle.target_direction)
        ->check(CLI::IsMember({"minimize", "maximize", "min", "max"}));
    tune_cmd->add_option("--auxiliary-direction", tune.oracle.auxiliary_direction)
        ->check(CLI::IsMember({"minimize", "maximize", "min", "max"}));
    tune_cmd->add_option("--model", tune.model, "Model label")->required()->check(CLI::IsMember(all_model_labels()));
    tune_cmd->add_option("--weight", tune.weight, "MMO weight")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--budget", tune.budget, "Distinct measurement budget")->required()->check(CLI::PositiveNumber);
    tune_cmd->add_option("--population", tune.population, "Population size")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--seed", tune.seed, "Run seed");
    tune_cmd->add_option("--out", tune.out, "Trace CSV path");
    tune_cmd->add_option("--mutation-rate", tune.optimizer.mutation_rate)->check(CLI::Range(0.0, 1.0));
    tune_cmd->add_option("--crossover-rate", tune.optimizer.crossover_rate)->check(CLI::Range(0.0, 1.0));
    tune_cmd->add_option("--idle-limit", tune.optimizer.idle_limit)->check(CLI::PositiveNumber);

    PlanArgs campaign;
    auto* campaign_cmd = app.add_subcommand("campaign", "Run a full experiment plan");
    campaign_cmd->add_option("--plan", campaign.plan, "Plan file")->required()->check(CLI::ExistingFile);
    campaign_cmd->add_option("--out", campaign.out, "Output directory")->required();
    campaign_cmd->add_option("--jobs", campaign.jobs, "Concurrent runs (0 = all cores)")->check(CLI::NonNegativeNumber);

    PlanArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep-weights", "Run every weight at full scale and tabulate against the counterpart");
    sweep_cmd->add_option("--plan", sweep.plan, "Plan file")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--out", sweep.out, "Output directory")->required();
    sweep_cmd->add_option("--jobs", sweep.jobs, "Concurrent runs (0 = all cores)")->check(CLI::NonNegativeNumber);

    SelectArgs select;
    auto* select_cmd = app.add_subcommand("select-weight", "Choose a weight per MMO instance");
    select_cmd->add_option("--plan", select.plan, "Plan file")->required()->check(CLI::ExistingFile);
    select_cmd->add_option("--mode", select.mode)->check(CLI::IsMember({"preliminary", "data-driven"}));
    select_cmd->add_option("--table", select.table, "Table CSV for data-driven mode")->check(CLI::ExistingFile);
    select_cmd->add_option("--jobs", select.jobs, "Concurrent runs (0 = all cores)")->check(CLI::NonNegativeNumber);

    StatsArgs stats;
    auto* stats_cmd = app.add_subcommand("stats", "Recompute a campaign report from its traces");
    stats_cmd->add_option("--dir", stats.dir, "Campaign directory")->required()->check(CLI::ExistingDirectory);
    stats_cmd->add_option("--out", stats.out, "Write the report here instead of standard output");
    stats_cmd->add_flag("--check", stats.check, "Fail unless the result equals the stored report.json");

    LandscapeArgs landscape;
    auto* gen_cmd = app.add_subcommand("gen-landscape", "Tabulate a synthetic landscape to CSV");
    gen_cmd->add_option("--space", landscape.space, "Space file")->required()->check(CLI::ExistingFile);
    add_landscape_options(gen_cmd, landscape.params);
    gen_cmd->add_option("--out", landscape.out, "Table CSV path")->required();
    gen_cmd->add_flag("--serial", landscape.serial, "Use the single-threaded tabulation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (*tune_cmd)
            return run_tune(tune, out);
        if (*campaign_cmd)
            return run_campaign_cmd(campaign, out);
        if (*sweep_cmd)
            return run_sweep(sweep, out);
        if (*select_cmd)
            return run_select(select, out);
        if (*stats_cmd)
            return run_stats(stats, out, err);
        if (*gen_cmd)
            return run_gen_landscape(landscape, out);
    } catch (const MeasurementError& e) {
        err << "error: " << e.what() << "\n";
        if (!e.transcript().empty())
            err << e.transcript() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    std::vector<const char*> argv{"mmotune"};
    for (const auto& a : args)
        argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace mmotune
