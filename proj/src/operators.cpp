#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "mmotune/error.hpp"
#include "mmotune/optimizers.hpp"

namespace mmotune {

void OptimizerConfig::validate() const
{
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
        throw Error(fmt::format("mutation rate {} outside [0, 1]", mutation_rate));
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
        throw Error(fmt::format("crossover rate {} outside [0, 1]", crossover_rate));
    if (!(sa_cooling > 0.0 && sa_cooling < 1.0))
        throw Error(fmt::format("cooling factor {} outside (0, 1)", sa_cooling));
    if (population_size == 0)
        throw Error("population size must be positive");
}

std::size_t OptimizerConfig::effective_rs_radius(const OptionSpace& space) const
{
    return rs_radius > 0 ? rs_radius : std::max<std::size_t>(1, space.size() / 2);
}

std::size_t OptimizerConfig::effective_shc_stall(const OptionSpace& space) const
{
    return shc_restart_stall > 0 ? shc_restart_stall : 4 * space.size();
}

bool sa_accept(double delta, double temperature, Rng& rng)
{
    if (delta <= 0.0)
        return true;
    if (!(temperature > 0.0))
        return false;
    // draw even when the probability underflows so the stream stays aligned
    const double u = rng.uniform01();
    return u < std::exp(-delta / temperature);
}

Configuration boundary_mutation(const OptionSpace& space, const Configuration& config, double rate, Rng& rng)
{
    Configuration out = config;
    for (std::size_t i = 0; i < space.size(); ++i)
        if (rng.bernoulli(rate))
            out.values[i] = rng.coin() ? space[i].upper : space[i].lower;
    return out;
}

std::pair<Configuration, Configuration> uniform_crossover(const Configuration& a, const Configuration& b, double rate,
                                                          Rng& rng)
{
    if (a.values.size() != b.values.size())
        throw Error("crossover parents come from different spaces");
    std::pair<Configuration, Configuration> children{a, b};
    if (!rng.bernoulli(rate))
        return children;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        if (rng.coin())
            std::swap(children.first.values[i], children.second.values[i]);
    return children;
}

namespace {

struct DominationTable {
    std::vector<std::vector<std::size_t>> dominated_by_me;
    std::vector<std::size_t> dominator_count;
};

void fill_row(std::span<const ObjectivePoint> points, DominationTable& t, std::size_t i)
{
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (i == j)
            continue;
        switch (dominates(points[i], points[j])) {
        case Dominance::dominates: t.dominated_by_me[i].push_back(j); break;
        case Dominance::dominated: ++t.dominator_count[i]; break;
        case Dominance::nondominated: break;
        }
    }
}

std::vector<std::vector<std::size_t>> peel(DominationTable& t)
{
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < t.dominator_count.size(); ++i)
        if (t.dominator_count[i] == 0)
            current.push_back(i);
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto i : current)
            for (auto j : t.dominated_by_me[i])
                if (--t.dominator_count[j] == 0)
                    next.push_back(j);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

DominationTable make_table(std::size_t n)
{
    return {std::vector<std::vector<std::size_t>>(n), std::vector<std::size_t>(n, 0)};
}

} // namespace

std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const ObjectivePoint> points)
{
    auto table = make_table(points.size());
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    // rows are independent: each thread writes only its own row
#pragma omp parallel for schedule(dynamic, 16) if (n > 128)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        fill_row(points, table, static_cast<std::size_t>(i));
    return peel(table);
}

namespace serial {
std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const ObjectivePoint> points)
{
    auto table = make_table(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        fill_row(points, table, i);
    return peel(table);
}
} // namespace serial

std::vector<double> crowding_distance(std::span<const ObjectivePoint> front)
{
    const std::size_t n = front.size();
    std::vector<double> distance(n, 0.0);
    if (n == 0)
        return distance;
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (n <= 2) {
        std::fill(distance.begin(), distance.end(), inf);
        return distance;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < front[0].size(); ++m) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return front[a][m] < front[b][m]; });
        distance[order.front()] = inf;
        distance[order.back()] = inf;
        const double range = front[order.back()][m] - front[order.front()][m];
        if (range == 0.0)
            continue;
        for (std::size_t k = 1; k + 1 < n; ++k)
            distance[order[k]] += (front[order[k + 1]][m] - front[order[k - 1]][m]) / range;
    }
    return distance;
}

} // namespace mmotune
