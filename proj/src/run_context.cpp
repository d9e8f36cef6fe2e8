#include "run_context.hpp"

#include <limits>

#include "mmotune/error.hpp"

namespace mmotune::detail {

void validate_oracle_space(const OptionSpace& space, const Oracle& oracle)
{
    if (!(space == oracle.space()))
        throw Error("optimizer space does not match the oracle's space");
}

RunContext::RunContext(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle,
                       const OptimizerConfig& cfg)
    : space_(space), ledger_(ledger), oracle_(oracle), idle_limit_(std::max<std::size_t>(1, cfg.idle_limit)),
      rng_(cfg.seed)
{
    cfg.validate();
    validate_oracle_space(space, oracle);
    trace_.option_names = space.names();
}

bool RunContext::finished() const
{
    if (ledger_.exhausted())
        return true;
    return !space_.size_overflows() && ledger_.consumed() >= space_.space_size();
}

std::optional<Individual> RunContext::evaluate(Configuration config)
{
    if (finished())
        return std::nullopt;
    if (ledger_.contains(config)) {
        if (++idle_ >= idle_limit_)
            config = random_unmeasured();
    }
    auto result = ledger_.measure(oracle_, config);
    if (!result)
        return std::nullopt;

    auto minimized = to_minimization(result.record);
    if (result.fresh()) {
        idle_ = 0;
        double best = trace_.entries.empty() ? minimized.target
                                             : std::min(trace_.entries.back().best_so_far, minimized.target);
        trace_.entries.push_back({trace_.entries.size(), config, result.record.target_raw,
                                  result.record.auxiliary_raw, ledger_.consumed(), best});
    }
    return Individual{std::move(config), minimized.target, minimized.auxiliary};
}

Configuration RunContext::random_unmeasured()
{
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto c = random_config(space_, rng_);
        if (!ledger_.contains(c))
            return c;
    }
    constexpr std::uint64_t enumerable = std::uint64_t{1} << 22;
    if (!space_.size_overflows() && space_.space_size() <= enumerable) {
        std::vector<std::uint64_t> free_indices;
        for (std::uint64_t i = 0; i < space_.space_size(); ++i)
            if (!ledger_.contains(space_.decode(i)))
                free_indices.push_back(i);
        if (!free_indices.empty())
            return space_.decode(free_indices[rng_.index(free_indices.size())]);
    }
    return random_config(space_, rng_);
}

std::vector<Individual> initial_population(RunContext& ctx, std::size_t size)
{
    std::vector<Individual> population;
    population.reserve(size);
    while (population.size() < size) {
        auto ind = ctx.evaluate(ctx.random_unmeasured());
        if (!ind)
            break;
        population.push_back(std::move(*ind));
    }
    return population;
}

} // namespace mmotune::detail
