// Wall-clock comparison of the OpenMP kernels against their serial references.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <omp.h>

#include "mmotune/harness.hpp"

using namespace mmotune;

namespace {

double seconds(const std::function<void()>& body, int reps)
{
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i)
        body();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / reps;
}

void row(const std::string& name, double parallel, double serial, bool equal)
{
    fmt::print("{:<32} {:>10.4f} {:>10.4f} {:>8.2f}x  {}\n", name, parallel, serial, serial / parallel,
               equal ? "identical" : "MISMATCH");
}

OptionSpace binary_space(std::size_t n)
{
    std::vector<OptionSpec> options;
    for (std::size_t i = 0; i < n; ++i)
        options.push_back({.name = fmt::format("o{}", i), .kind = OptionKind::binary, .lower = 0, .upper = 1});
    return OptionSpace(std::move(options));
}

} // namespace

int main(int argc, char** argv)
{
    const int reps = argc > 1 ? std::stoi(argv[1]) : 3;
    fmt::print("threads: {}\n", omp_get_max_threads());
    fmt::print("{:<32} {:>10} {:>10} {:>9}\n", "kernel", "parallel s", "serial s", "speedup");

    Rng rng(1);
    std::vector<ObjectivePoint> points;
    for (int i = 0; i < 4000; ++i)
        points.push_back({rng.uniform01(), rng.uniform01()});

    std::vector<std::vector<std::size_t>> fp, fs;
    row("fast_nondominated_sort n=4000", seconds([&] { fp = fast_nondominated_sort(points); }, reps),
        seconds([&] { fs = serial::fast_nondominated_sort(points); }, reps), fp == fs);

    std::vector<std::size_t> pp, ps;
    row("pareto_front n=4000", seconds([&] { pp = pareto_front(points); }, reps),
        seconds([&] { ps = serial::pareto_front(points); }, reps), pp == ps);

    const auto space = binary_space(16);
    SyntheticOracle oracle(space, {.seed = 3});
    std::vector<TableRow> tp, ts;
    row("tabulate 2^16", seconds([&] { tp = tabulate(oracle); }, reps),
        seconds([&] { ts = serial::tabulate(oracle); }, reps),
        tp.size() == ts.size() && std::equal(tp.begin(), tp.end(), ts.begin(), [](const auto& a, const auto& b) {
            return a.config == b.config && a.record == b.record;
        }));

    std::vector<RunSpec> specs;
    for (const auto& m : all_model_labels())
        for (std::size_t r = 0; r < 4; ++r) {
            const auto w = parse_model(m).mmo() ? std::optional<double>(0.5) : std::nullopt;
            specs.push_back({m, w, r, run_seed(7, m, w, r), 400, 20});
        }
    std::vector<RunTrace> rp, rs;
    row("execute_runs 32 x 400", seconds([&] { rp = execute_runs(specs, space, oracle, {}); }, reps),
        seconds([&] { rs = serial::execute_runs(specs, space, oracle, {}); }, reps), rp == rs);
    return 0;
}
