#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmotune/trace.hpp"

namespace mmotune {

// All values here are in minimization orientation: smaller is better.

/// v_o - q, with v_o the minimum and q the gap between v_o and the nearest distinct value.
/// Throws Error when fewer than two distinct values exist.
double utopian(std::span<const double> all_results);

/// Mean over index-paired ascending-sorted runs of (y_i - x_i) / (y_i - y_o), in percent.
/// `x`: the multi-objectivization model's runs; `y`: the counterpart's runs.
double normalized_gain(std::span<const double> x, std::span<const double> y, double y_o);

/// Resource-efficiency ratio r = m / b * 100.
struct EfficiencyRatio {
    bool converged = false;
    std::size_t model_measurements = 0;    // m
    std::size_t baseline_measurements = 0; // b
    double baseline_level = 0.0;
    double percent = 0.0; // valid when converged

    std::string to_string() const;
};

/// Mean best-so-far curve over runs, indexed by consumed count - 1. Runs that
/// stopped early hold their final value.
std::vector<double> mean_best_so_far(std::span<const RunTrace> traces);

EfficiencyRatio efficiency_ratio(std::span<const RunTrace> model_traces, std::span<const RunTrace> baseline_traces);

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences are
/// dropped and ties mid-ranked; exact null distribution up to 25 nonzero pairs,
/// normal approximation with tie and continuity corrections above. p = 1 when
/// every difference is zero.
double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// The W+ statistic (sum of ranks of positive a - b differences).
double wilcoxon_statistic(std::span<const double> a, std::span<const double> b);

enum class Magnitude { negligible, small, medium, large };
std::string_view to_string(Magnitude m);

/// Magnitude of an A12 value, applied symmetrically to A and 1 - A:
/// < 0.56 negligible, < 0.64 small, < 0.71 medium, otherwise large.
Magnitude a12_magnitude(double a12);

enum class Orientation { minimize, maximize };

struct A12Result {
    double value = 0.5;
    Magnitude magnitude = Magnitude::negligible;
};

/// Vargha-Delaney A12: probability that a draw from `a` beats a draw from `b`
/// (ties count half). With Orientation::minimize smaller values win.
A12Result a12(std::span<const double> a, std::span<const double> b, Orientation orientation = Orientation::minimize);

struct StatResult {
    double p_value = 1.0;
    double a12 = 0.5;
    Magnitude magnitude = Magnitude::negligible;
    bool significant = false; // p < 0.05
};

/// Wilcoxon + A12 of `model` against `counterpart`; A12 > 0.5 favours the model.
StatResult compare(std::span<const double> model, std::span<const double> counterpart);

/// Scott-Knott clustering of mean-ordered groups. A split is kept when a
/// one-way F-test between the two candidate clusters rejects equality at
/// alpha. Rank 1 holds the smallest means; ranks are contiguous.
std::map<std::string, int> scott_knott(const std::map<std::string, std::vector<double>>& groups,
                                       double alpha = 0.05);

/// Best Scott-Knott rank, ties broken by the smaller mean (then by label).
std::string pick_best_counterpart(const std::map<std::string, std::vector<double>>& per_optimizer_results);

double mean(std::span<const double> values);
double stddev(std::span<const double> values); // sample standard deviation; 0 for fewer than 2 values
double median(std::vector<double> values);     // midpoint of the two middle values for even sizes

} // namespace mmotune
