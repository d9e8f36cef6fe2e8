#include <algorithm>
#include <limits>
#include <numeric>

#include "mmotune/optimizers.hpp"
#include "run_context.hpp"

namespace mmotune {

namespace {

struct Ranked {
    std::vector<std::size_t> rank;
    std::vector<double> crowding;
};

std::vector<ObjectivePoint> pool_objectives(std::span<const Individual> pool, const NormalizationBounds& bounds,
                                            const MultiModel& model)
{
    std::vector<ObjectivePoint> out;
    out.reserve(pool.size());
    for (const auto& ind : pool)
        out.push_back(model_objectives(model, normalize(bounds, ind.target, 0), normalize(bounds, ind.auxiliary, 1)));
    return out;
}

/// Rank and per-front crowding for every member of `points`.
Ranked rank_and_crowd(std::span<const ObjectivePoint> points, const std::vector<std::vector<std::size_t>>& fronts)
{
    Ranked r{std::vector<std::size_t>(points.size()), std::vector<double>(points.size())};
    std::vector<ObjectivePoint> members;
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        members.clear();
        for (auto i : fronts[f])
            members.push_back(points[i]);
        auto cd = crowding_distance(members);
        for (std::size_t k = 0; k < fronts[f].size(); ++k) {
            r.rank[fronts[f][k]] = f;
            r.crowding[fronts[f][k]] = cd[k];
        }
    }
    return r;
}

/// Nondominated sorting plus crowding truncation to `size` survivors. Members
/// holding the pool's minimal target are always retained.
std::vector<std::size_t> environmental_selection(std::span<const Individual> pool,
                                                 const std::vector<std::vector<std::size_t>>& fronts,
                                                 const Ranked& ranked, std::size_t size)
{
    std::vector<std::size_t> survivors;
    survivors.reserve(size);
    for (const auto& front : fronts) {
        if (survivors.size() + front.size() <= size) {
            survivors.insert(survivors.end(), front.begin(), front.end());
            if (survivors.size() == size)
                break;
            continue;
        }
        std::vector<std::size_t> order = front;
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return ranked.crowding[a] > ranked.crowding[b]; });
        const std::size_t need = size - survivors.size();

        double best_target = std::numeric_limits<double>::infinity();
        for (const auto& ind : pool)
            best_target = std::min(best_target, ind.target);
        std::vector<std::size_t> elite_tail;
        for (std::size_t k = order.size(); k-- > need;)
            if (pool[order[k]].target == best_target)
                elite_tail.push_back(order[k]);
        std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(need));
        // minimal-target members that missed the cut replace the least crowded picks
        for (std::size_t k = chosen.size(); k-- > 0 && !elite_tail.empty();) {
            if (pool[chosen[k]].target == best_target)
                continue;
            chosen[k] = elite_tail.back();
            elite_tail.pop_back();
        }
        survivors.insert(survivors.end(), chosen.begin(), chosen.end());
        break;
    }
    return survivors;
}

std::size_t crowded_tournament(const Ranked& ranked, std::size_t n, Rng& rng)
{
    auto a = rng.index(n);
    auto b = rng.index(n);
    if (ranked.rank[a] != ranked.rank[b])
        return ranked.rank[a] < ranked.rank[b] ? a : b;
    if (ranked.crowding[a] != ranked.crowding[b])
        return ranked.crowding[a] > ranked.crowding[b] ? a : b;
    return rng.coin() ? a : b;
}

} // namespace

RunTrace run_nsga2(const OptionSpace& space, BudgetLedger& ledger, const Oracle& oracle, const MultiModel& model,
                   const OptimizerConfig& cfg, const RunObserver& observer)
{
    detail::RunContext ctx(space, ledger, oracle, cfg);
    const std::size_t n = std::max<std::size_t>(2, cfg.population_size);
    NormalizationBounds bounds;

    auto evaluate = [&](Configuration c) -> std::optional<Individual> {
        auto ind = ctx.evaluate(std::move(c));
        if (ind)
            bounds.update(ind->target, ind->auxiliary);
        return ind;
    };

    std::vector<Individual> population;
    while (population.size() < n) {
        auto ind = evaluate(ctx.random_unmeasured());
        if (!ind)
            break;
        population.push_back(std::move(*ind));
    }
    if (population.empty())
        return ctx.finish();

    auto objectives = pool_objectives(population, bounds, model);
    auto ranked = rank_and_crowd(objectives, fast_nondominated_sort(objectives));
    if (observer.on_population)
        observer.on_population(population);

    bool stop = population.size() < n;
    while (!stop) {
        std::vector<Individual> offspring;
        offspring.reserve(n);
        while (offspring.size() < n) {
            const auto& p1 = population[crowded_tournament(ranked, population.size(), ctx.rng())];
            const auto& p2 = population[crowded_tournament(ranked, population.size(), ctx.rng())];
            auto [c1, c2] = uniform_crossover(p1.config, p2.config, cfg.crossover_rate, ctx.rng());
            for (auto* child : {&c1, &c2}) {
                if (offspring.size() >= n)
                    break;
                auto ind = evaluate(boundary_mutation(space, *child, cfg.mutation_rate, ctx.rng()));
                if (!ind) {
                    stop = true;
                    break;
                }
                offspring.push_back(std::move(*ind));
            }
            if (stop)
                break;
        }

        std::vector<Individual> pool = std::move(population);
        pool.insert(pool.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));
        // objectives are recomputed under the current bounds, which may have widened
        auto pool_obj = pool_objectives(pool, bounds, model);
        auto fronts = fast_nondominated_sort(pool_obj);
        auto pool_ranked = rank_and_crowd(pool_obj, fronts);
        auto survivors = environmental_selection(pool, fronts, pool_ranked, n);
        if (observer.on_selection)
            observer.on_selection(SelectionEvent{pool, pool_obj, fronts, survivors});

        population.clear();
        Ranked next_ranked;
        for (auto i : survivors) {
            population.push_back(pool[i]);
            next_ranked.rank.push_back(pool_ranked.rank[i]);
            next_ranked.crowding.push_back(pool_ranked.crowding[i]);
        }
        ranked = std::move(next_ranked);
        if (observer.on_population)
            observer.on_population(population);
    }
    return ctx.finish();
}

} // namespace mmotune
