#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmotune/optimizers.hpp"
#include "run_context.hpp"

namespace mmotune {

using detail::RunContext;

RunTrace run_rs(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle, const OptimizerConfig& cfg,
                const RunObserver& observer)
{
    RunContext ctx(space, ledger, oracle, cfg);
    const std::size_t radius = cfg.effective_rs_radius(space);
    constexpr std::size_t kNeighborAttempts = 32;

    auto incumbent = ctx.evaluate(ctx.random_unmeasured());
    while (incumbent) {
        std::optional<Configuration> candidate;
        for (std::size_t attempt = 0; attempt < kNeighborAttempts && !candidate; ++attempt) {
            auto nb = neighbors(space, incumbent->config, radius, ctx.rng(), 1);
            if (!ledger.contains(nb.configs.front()))
                candidate = std::move(nb.configs.front());
        }
        auto next = ctx.evaluate(candidate ? std::move(*candidate) : ctx.random_unmeasured());
        if (!next)
            break;
        if (next->target < incumbent->target)
            incumbent = std::move(next);
        if (observer.on_current)
            observer.on_current(*incumbent);
    }
    return ctx.finish();
}

RunTrace run_shc_restart(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle,
                         const OptimizerConfig& cfg, const RunObserver& observer)
{
    RunContext ctx(space, ledger, oracle, cfg);
    const std::size_t stall_limit = cfg.effective_shc_stall(space);

    auto current = ctx.evaluate(random_config(space, ctx.rng()));
    std::size_t stall = 0;
    while (current) {
        auto nb = neighbors(space, current->config, 1, ctx.rng(), 1);
        auto candidate = ctx.evaluate(std::move(nb.configs.front()));
        if (!candidate)
            break;
        if (candidate->target < current->target) {
            current = std::move(candidate);
            stall = 0;
        } else if (++stall >= stall_limit) {
            auto restart = ctx.evaluate(random_config(space, ctx.rng()));
            if (!restart)
                break;
            current = std::move(restart);
            ++ctx.trace().restarts;
            stall = 0;
        }
        if (observer.on_current)
            observer.on_current(*current);
    }
    return ctx.finish();
}

RunTrace run_sa(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle, const OptimizerConfig& cfg,
                const RunObserver& observer)
{
    RunContext ctx(space, ledger, oracle, cfg);

    auto sample = detail::initial_population(ctx, std::max<std::size_t>(1, cfg.population_size));
    if (sample.empty())
        return ctx.finish();

    double temperature = cfg.sa_initial_temperature;
    if (!(temperature > 0.0)) {
        double mean = 0.0;
        for (const auto& s : sample)
            mean += s.target;
        mean /= static_cast<double>(sample.size());
        double var = 0.0;
        for (const auto& s : sample)
            var += (s.target - mean) * (s.target - mean);
        temperature = sample.size() > 1 ? std::sqrt(var / static_cast<double>(sample.size() - 1)) : 0.0;
    }

    auto best_it = std::min_element(sample.begin(), sample.end(),
                                    [](const auto& a, const auto& b) { return a.target < b.target; });
    Individual current = *best_it;
    while (true) {
        const std::size_t before = ledger.consumed();
        auto nb = neighbors(space, current.config, 1, ctx.rng(), 1);
        auto candidate = ctx.evaluate(std::move(nb.configs.front()));
        if (!candidate)
            break;
        if (sa_accept(candidate->target - current.target, temperature, ctx.rng()))
            current = std::move(*candidate);
        if (ledger.consumed() > before)
            temperature *= cfg.sa_cooling;
        if (observer.on_current)
            observer.on_current(current);
    }
    return ctx.finish();
}

namespace {

const Individual& target_tournament(const std::vector<Individual>& pop, Rng& rng)
{
    const auto& a = pop[rng.index(pop.size())];
    const auto& b = pop[rng.index(pop.size())];
    if (a.target < b.target)
        return a;
    if (b.target < a.target)
        return b;
    return rng.coin() ? a : b;
}

} // namespace

RunTrace run_soga(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle, const OptimizerConfig& cfg,
                  const RunObserver& observer)
{
    RunContext ctx(space, ledger, oracle, cfg);
    const std::size_t n = std::max<std::size_t>(2, cfg.population_size);

    auto population = detail::initial_population(ctx, n);
    if (population.empty())
        return ctx.finish();
    if (observer.on_population)
        observer.on_population(population);

    bool stop = false;
    while (!stop) {
        std::vector<Individual> offspring;
        offspring.reserve(n);
        while (offspring.size() < n) {
            const auto& p1 = target_tournament(population, ctx.rng());
            const auto& p2 = target_tournament(population, ctx.rng());
            auto [c1, c2] = uniform_crossover(p1.config, p2.config, cfg.crossover_rate, ctx.rng());
            for (auto* child : {&c1, &c2}) {
                if (offspring.size() >= n)
                    break;
                auto ind = ctx.evaluate(boundary_mutation(space, *child, cfg.mutation_rate, ctx.rng()));
                if (!ind) {
                    stop = true;
                    break;
                }
                offspring.push_back(std::move(*ind));
            }
            if (stop)
                break;
        }
        // elitist (mu + lambda) replacement; parents precede offspring on ties
        std::vector<Individual> pool = std::move(population);
        pool.insert(pool.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));
        std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.target < b.target; });
        pool.resize(std::min(pool.size(), n));
        population = std::move(pool);
        if (observer.on_population)
            observer.on_population(population);
    }
    return ctx.finish();
}

} // namespace mmotune
