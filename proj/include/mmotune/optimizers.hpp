#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mmotune/config_space.hpp"
#include "mmotune/measurement.hpp"
#include "mmotune/models.hpp"
#include "mmotune/trace.hpp"

namespace mmotune {

struct OptimizerConfig {
    std::size_t population_size = 20;
    double mutation_rate = 0.1;
    double crossover_rate = 0.9;
    /// RS neighbourhood radius; 0 selects half the option count (at least 1).
    std::size_t rs_radius = 0;
    /// SA initial temperature; <= 0 selects the standard deviation of the first sample's targets.
    double sa_initial_temperature = 0.0;
    double sa_cooling = 0.99;
    /// SHC-r consecutive non-improving evaluations before restart; 0 selects 4 x option count.
    std::size_t shc_restart_stall = 0;
    /// Consecutive cache hits after which the next proposal is replaced by an unmeasured configuration.
    std::size_t idle_limit = 50;
    std::uint64_t seed = 0;

    /// Throws Error if a rate or the cooling factor is out of range.
    void validate() const;
    std::size_t effective_rs_radius(const OptionSpace& space) const;
    std::size_t effective_shc_stall(const OptionSpace& space) const;
};

/// A measured configuration with direction-converted values.
struct Individual {
    Configuration config;
    double target = 0.0;
    double auxiliary = 0.0;
};

/// Environmental-selection snapshot handed to observers.
struct SelectionEvent {
    std::span<const Individual> pool;
    std::span<const ObjectivePoint> objectives;
    const std::vector<std::vector<std::size_t>>& fronts;
    std::span<const std::size_t> survivors;
};

/// Optional hooks for tests and diagnostics; all may be empty.
struct RunObserver {
    std::function<void(std::span<const Individual>)> on_population; // SOGA, NSGA-II after replacement
    std::function<void(const SelectionEvent&)> on_selection;       // NSGA-II environmental selection
    std::function<void(const Individual&)> on_current;              // SA, SHC-r current state after each step
};

// Each run stops when the ledger signals budget exhaustion or every
// configuration of the space has been measured. Oracle errors propagate.

RunTrace run_rs(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle, const OptimizerConfig& cfg,
                const RunObserver& observer = {});
RunTrace run_shc_restart(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle,
                         const OptimizerConfig& cfg, const RunObserver& observer = {});
RunTrace run_sa(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle, const OptimizerConfig& cfg,
                const RunObserver& observer = {});
RunTrace run_soga(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle, const OptimizerConfig& cfg,
                  const RunObserver& observer = {});
RunTrace run_nsga2(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle, const MultiModel& model,
                   const OptimizerConfig& cfg, const RunObserver& observer = {});

/// Metropolis rule: delta <= 0 always accepted, otherwise with probability exp(-delta/T).
bool sa_accept(double delta, double temperature, Rng& rng);

/// Each option mutated with probability `rate` to its lower or upper bound (fair coin).
Configuration boundary_mutation(const OptionSpace& space, const Configuration& config, double rate, Rng& rng);

/// With probability `rate`, swaps each position between the children on a fair coin;
/// otherwise the children are copies of the parents. Throws on length mismatch.
std::pair<Configuration, Configuration> uniform_crossover(const Configuration& a, const Configuration& b, double rate,
                                                          Rng& rng);

/// Fronts of mutually nondominated indices; front 0 is the nondominated set.
std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const ObjectivePoint> points);

/// Crowding distance within one front; boundaries per objective are +inf.
std::vector<double> crowding_distance(std::span<const ObjectivePoint> front);

namespace serial {
/// Single-threaded reference for fast_nondominated_sort.
std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const ObjectivePoint> points);
} // namespace serial

} // namespace mmotune
