#pragma once

#include <optional>

#include "mmotune/optimizers.hpp"

namespace mmotune::detail {

/// State shared by every optimizer for one run: budget, trace, generator and
/// the duplicate-stall diversion.
class RunContext {
public:
    RunContext(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle, const OptimizerConfig& cfg);

    /// Budget exhausted, or every configuration of the space measured.
    bool finished() const;

    /// Measures `config` through the ledger. After `idle_limit` consecutive
    /// cache hits a cached proposal is replaced by an unmeasured configuration,
    /// so the returned individual's configuration may differ from the input.
    /// Returns nullopt once the run is finished.
    std::optional<Individual> evaluate(Configuration config);

    /// Uniform over unmeasured configurations when one can be found; falls back to
    /// a uniform draw when the space is too large to enumerate.
    Configuration random_unmeasured();

    Rng& rng() noexcept { return rng_; }
    const OptionSpace& space() const noexcept { return space_; }
    RunTrace& trace() noexcept { return trace_; }
    RunTrace finish() { return std::move(trace_); }

private:
    const OptionSpace& space_;
    BudgetLedger& ledger_;
    const Oracle& oracle_;
    std::size_t idle_limit_;
    std::size_t idle_ = 0;
    Rng rng_;
    RunTrace trace_;
};

/// Uniform without replacement while unmeasured configurations remain.
std::vector<Individual> initial_population(RunContext& ctx, std::size_t size);

} // namespace mmotune::detail
