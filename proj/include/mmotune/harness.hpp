#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmotune/config_space.hpp"
#include "mmotune/measurement.hpp"
#include "mmotune/models.hpp"
#include "mmotune/optimizers.hpp"
#include "mmotune/stats.hpp"
#include "mmotune/trace.hpp"

namespace mmotune {

// ---------------------------------------------------------------------------
// Models and presets

enum class ModelKind { rs, shc_restart, sa, soga, pmo, mmo };

/// A model label such as "single:SA", "pmo" or "mmo:sqrt".
struct ModelSpec {
    std::string label;
    ModelKind kind = ModelKind::rs;
    MmoShape shape = MmoShape::linear; // meaningful for mmo only

    bool single() const noexcept { return kind != ModelKind::pmo && kind != ModelKind::mmo; }
    bool mmo() const noexcept { return kind == ModelKind::mmo; }
    bool population_based() const noexcept
    {
        return kind == ModelKind::soga || kind == ModelKind::pmo || kind == ModelKind::mmo;
    }
};

ModelSpec parse_model(std::string_view label);
const std::vector<std::string>& all_model_labels();
const std::vector<double>& default_weights();

/// Population size and measurement budget shipped for a named subject system.
struct Preset {
    std::string_view name;
    std::size_t population_size;
    std::size_t budget;
};

const std::vector<Preset>& presets();
std::optional<Preset> find_preset(std::string_view name);

// ---------------------------------------------------------------------------
// Plans

struct OracleSpec {
    enum class Kind { table, command, synthetic };
    Kind kind = Kind::synthetic;
    std::string table_path;
    CommandOracleOptions command;
    SyntheticLandscapeParams synthetic;
};

struct ExperimentPlan {
    std::shared_ptr<const OptionSpace> space;
    OracleSpec oracle;
    std::string preset;
    std::size_t budget = 0;
    std::size_t population_size = 0;
    std::size_t repeats = 30;
    std::vector<std::string> models;
    std::vector<double> weights = default_weights();
    std::uint64_t master_seed = 0;
    Direction target_direction = Direction::minimize;
    Direction auxiliary_direction = Direction::minimize;
    OptimizerConfig optimizer;
    bool preliminary_selection = true;
    bool full_scale_selected_only = false; // MMO full-scale runs use only the preliminary choice

    /// Throws Error for inconsistent plans.
    void validate() const;
    std::vector<ModelSpec> model_specs() const;
};

/// Parses a plan document; relative paths resolve against `base_dir`.
ExperimentPlan parse_plan(std::string_view json_text, const std::string& base_dir = ".");
ExperimentPlan load_plan(const std::string& path);
nlohmann::json plan_to_json(const ExperimentPlan& plan);
std::string plan_hash(const ExperimentPlan& plan);

/// Value of MMO_TUNE_SEED when set, otherwise `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback);

std::unique_ptr<Oracle> make_oracle(const ExperimentPlan& plan);

// ---------------------------------------------------------------------------
// Runs

/// Stable per-run seed from (master seed, model, weight, run index).
std::uint64_t run_seed(std::uint64_t master_seed, std::string_view model, std::optional<double> weight,
                       std::size_t run);

struct RunSpec {
    std::string model;
    std::optional<double> weight;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    std::size_t population_size = 0;

    std::string key() const; // "model", or "model@weight"
};

/// One tuning run with its own ledger and generator.
RunTrace execute_run(const RunSpec& spec, const OptionSpace& space, const Oracle& oracle,
                     const OptimizerConfig& base);

/// Executes independent runs on up to `jobs` threads (0 = OpenMP default).
/// Output order matches `specs`; results do not depend on `jobs`. A failing
/// run aborts the batch with an Error naming it.
std::vector<RunTrace> execute_runs(const std::vector<RunSpec>& specs, const OptionSpace& space, const Oracle& oracle,
                                   const OptimizerConfig& base, int jobs = 0);

namespace serial {
std::vector<RunTrace> execute_runs(const std::vector<RunSpec>& specs, const OptionSpace& space, const Oracle& oracle,
                                   const OptimizerConfig& base);
} // namespace serial

// ---------------------------------------------------------------------------
// Weight selection

struct PreliminaryBudget {
    std::size_t budget;
    std::size_t population_size;
};

/// ceil(10% of budget) and ceil(10% of population), population floored at 2.
PreliminaryBudget preliminary_budget(const ExperimentPlan& plan);

std::vector<RunSpec> preliminary_specs(const ExperimentPlan& plan);

/// Best target per weight wins; ties resolved uniformly from a generator seeded by the master seed.
std::map<std::string, double> choose_preliminary(const std::vector<RunSpec>& specs,
                                                 const std::vector<RunTrace>& traces, std::uint64_t master_seed);

/// One run per weight at the preliminary budget; returns the chosen weight per MMO instance.
std::map<std::string, double> preliminary_weight_selection(const ExperimentPlan& plan, const Oracle& oracle,
                                                           int jobs = 0);

struct WeightSelection {
    std::map<std::string, double> chosen; // per MMO instance
    std::map<std::string, std::map<double, int>> ranks;
    std::map<std::string, std::map<double, double>> means;
    double elapsed_seconds = 0.0;
};

/// Full-scale rule: Scott-Knott rank over the per-weight run results, then mean, then the smaller weight.
WeightSelection choose_full_scale(const std::map<std::string, std::map<double, std::vector<double>>>& results);

/// Full-scale runs (repeats x weights) per MMO instance against `oracle`, then choose_full_scale.
WeightSelection full_scale_weight_selection(const ExperimentPlan& plan, const Oracle& oracle, int jobs = 0);

/// Same computation against pre-measured data only; reports wall time.
/// Throws UnmeasuredConfiguration naming any configuration the table lacks.
WeightSelection data_driven_weight_selection(const TabularOracle& table, const ExperimentPlan& plan, int jobs = 0);

// ---------------------------------------------------------------------------
// Campaigns

struct CampaignRun {
    RunSpec spec;
    RunTrace trace;
    std::string file; // relative to the campaign directory
};

struct Campaign {
    std::string plan_hash;
    std::uint64_t master_seed = 0;
    std::size_t budget = 0;
    std::size_t population_size = 0;
    std::size_t repeats = 0;
    std::vector<CampaignRun> preliminary;
    std::vector<CampaignRun> runs;
};

Campaign run_campaign(const ExperimentPlan& plan, int jobs = 0);

/// Full report; a pure function of the campaign's specs and traces.
nlohmann::json build_report(const Campaign& campaign);
std::string report_text(const Campaign& campaign);

/// `model,weight,run,best_target,measurements_to_best`.
std::string results_csv(const Campaign& campaign);

/// Per-instance, per-weight A12 / p against the best counterpart plus the best weight per instance.
std::string sweep_csv(const nlohmann::json& report);

/// Writes traces/, manifest.json, report.json and results.csv under `dir`.
void write_campaign(const Campaign& campaign, const std::string& dir);

/// Reloads manifest and traces written by write_campaign.
Campaign load_campaign(const std::string& dir);

} // namespace mmotune
