#include "mmotune/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>
#include <fmt/format.h>

#include "mmotune/error.hpp"

namespace mmotune {

double mean(std::span<const double> values)
{
    if (values.empty())
        return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(std::span<const double> values)
{
    if (values.size() < 2)
        return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values)
        ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double median(std::vector<double> values)
{
    if (values.empty())
        throw Error("median of an empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ---------------------------------------------------------------------------
// Gain and utopian point

double utopian(std::span<const double> all_results)
{
    if (all_results.empty())
        throw Error("utopian point of an empty result set");
    const double v_o = *std::min_element(all_results.begin(), all_results.end());
    double q = std::numeric_limits<double>::infinity();
    for (double s : all_results)
        if (s != v_o)
            q = std::min(q, s - v_o);
    if (!std::isfinite(q))
        throw Error("utopian point undefined: all results are identical");
    return v_o - q;
}

double normalized_gain(std::span<const double> x, std::span<const double> y, double y_o)
{
    if (x.size() != y.size())
        throw Error(fmt::format("gain needs equal run counts, got {} and {}", x.size(), y.size()));
    if (x.empty())
        throw Error("gain of empty run sets");
    std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double denominator = ys[i] - y_o;
        if (denominator == 0.0)
            throw Error(fmt::format("gain denominator is zero at sorted run {}", i));
        total += (ys[i] - xs[i]) / denominator;
    }
    return total / static_cast<double>(xs.size()) * 100.0;
}

// ---------------------------------------------------------------------------
// Efficiency ratio

std::string EfficiencyRatio::to_string() const
{
    return converged ? fmt::format("{}", percent) : std::string("not-converged");
}

std::vector<double> mean_best_so_far(std::span<const RunTrace> traces)
{
    std::size_t length = 0;
    std::size_t runs = 0;
    for (const auto& t : traces) {
        if (t.empty())
            continue;
        length = std::max(length, t.entries.back().consumed);
        ++runs;
    }
    std::vector<double> curve(length, 0.0);
    if (runs == 0)
        return curve;
    for (const auto& t : traces) {
        if (t.empty())
            continue;
        std::size_t e = 0;
        double value = t.entries.front().best_so_far;
        for (std::size_t k = 0; k < length; ++k) {
            while (e < t.entries.size() && t.entries[e].consumed <= k + 1)
                value = t.entries[e++].best_so_far;
            curve[k] += value;
        }
    }
    for (auto& c : curve)
        c /= static_cast<double>(runs);
    return curve;
}

EfficiencyRatio efficiency_ratio(std::span<const RunTrace> model_traces, std::span<const RunTrace> baseline_traces)
{
    auto baseline = mean_best_so_far(baseline_traces);
    auto model = mean_best_so_far(model_traces);
    EfficiencyRatio r;
    if (baseline.empty() || model.empty())
        return r;
    r.baseline_level = baseline.back();
    for (std::size_t k = 0; k < baseline.size(); ++k)
        if (baseline[k] <= r.baseline_level) {
            r.baseline_measurements = k + 1;
            break;
        }
    for (std::size_t k = 0; k < model.size(); ++k)
        if (model[k] <= r.baseline_level) {
            r.model_measurements = k + 1;
            r.converged = true;
            break;
        }
    if (r.converged)
        r.percent = static_cast<double>(r.model_measurements) / static_cast<double>(r.baseline_measurements) * 100.0;
    return r;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank

namespace {

struct SignedRanks {
    std::vector<long> doubled_ranks; // 2 * mid-rank, so ties stay integral
    std::vector<bool> positive;
    double tie_correction = 0.0; // sum of t^3 - t over tie groups
};

SignedRanks signed_ranks(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw Error(fmt::format("Wilcoxon needs paired samples, got {} and {}", a.size(), b.size()));
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] - b[i] != 0.0)
            diffs.push_back(a[i] - b[i]);

    std::vector<std::size_t> order(diffs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return std::abs(diffs[i]) < std::abs(diffs[j]); });

    SignedRanks out;
    out.doubled_ranks.resize(diffs.size());
    out.positive.resize(diffs.size());
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start;
        while (end < order.size() && std::abs(diffs[order[end]]) == std::abs(diffs[order[start]]))
            ++end;
        // positions start+1 .. end share the mid-rank (start+1+end)/2
        const long doubled = static_cast<long>(start + 1 + end);
        for (std::size_t k = start; k < end; ++k) {
            out.doubled_ranks[order[k]] = doubled;
            out.positive[order[k]] = diffs[order[k]] > 0;
        }
        const double t = static_cast<double>(end - start);
        out.tie_correction += t * t * t - t;
        start = end;
    }
    return out;
}

} // namespace

double wilcoxon_statistic(std::span<const double> a, std::span<const double> b)
{
    auto sr = signed_ranks(a, b);
    long w2 = 0;
    for (std::size_t i = 0; i < sr.doubled_ranks.size(); ++i)
        if (sr.positive[i])
            w2 += sr.doubled_ranks[i];
    return static_cast<double>(w2) / 2.0;
}

double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b)
{
    auto sr = signed_ranks(a, b);
    const std::size_t n = sr.doubled_ranks.size();
    if (n == 0)
        return 1.0;

    long w2 = 0, total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += sr.doubled_ranks[i];
        if (sr.positive[i])
            w2 += sr.doubled_ranks[i];
    }

    if (n <= 25) {
        // exact null: count sign assignments by doubled positive-rank sum
        std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
        count[0] = 1.0;
        long reach = 0;
        for (auto r : sr.doubled_ranks) {
            for (long s = reach; s >= 0; --s)
                if (count[static_cast<std::size_t>(s)] != 0.0)
                    count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
            reach += r;
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        double lower = 0.0, upper = 0.0;
        for (long s = 0; s <= total2; ++s) {
            if (s <= w2)
                lower += count[static_cast<std::size_t>(s)];
            if (s >= w2)
                upper += count[static_cast<std::size_t>(s)];
        }
        return std::min(1.0, 2.0 * std::min(lower, upper) / all);
    }

    const double nn = static_cast<double>(n);
    const double w = static_cast<double>(w2) / 2.0;
    const double mu = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - sr.tie_correction / 48.0;
    if (!(var > 0.0))
        return 1.0;
    const double z = std::max(0.0, std::abs(w - mu) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

// ---------------------------------------------------------------------------
// A12

std::string_view to_string(Magnitude m)
{
    switch (m) {
    case Magnitude::negligible: return "negligible";
    case Magnitude::small: return "small";
    case Magnitude::medium: return "medium";
    case Magnitude::large: return "large";
    }
    return "?";
}

Magnitude a12_magnitude(double a12)
{
    // tolerance absorbs the rounding of 1 - A at the class boundaries
    constexpr double eps = 1e-12;
    const double d = std::max(a12, 1.0 - a12) + eps;
    if (d >= 0.71)
        return Magnitude::large;
    if (d >= 0.64)
        return Magnitude::medium;
    if (d >= 0.56)
        return Magnitude::small;
    return Magnitude::negligible;
}

A12Result a12(std::span<const double> a, std::span<const double> b, Orientation orientation)
{
    if (a.empty() || b.empty())
        throw Error("A12 needs two nonempty samples");
    double wins = 0.0;
    for (double x : a)
        for (double y : b) {
            if (x == y)
                wins += 0.5;
            else if ((orientation == Orientation::minimize) == (x < y))
                wins += 1.0;
        }
    A12Result r;
    r.value = wins / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    r.magnitude = a12_magnitude(r.value);
    return r;
}

StatResult compare(std::span<const double> model, std::span<const double> counterpart)
{
    StatResult r;
    r.p_value = wilcoxon_signed_rank(model, counterpart);
    auto effect = a12(model, counterpart);
    r.a12 = effect.value;
    r.magnitude = effect.magnitude;
    r.significant = r.p_value < 0.05;
    return r;
}

// ---------------------------------------------------------------------------
// Scott-Knott

namespace {

struct Group {
    std::string label;
    std::vector<double> values;
    double mean = 0.0;
};

struct RangeStats {
    double sum = 0.0;
    double count = 0.0;
};

RangeStats range_stats(const std::vector<Group>& g, std::size_t lo, std::size_t hi)
{
    RangeStats s;
    for (std::size_t i = lo; i < hi; ++i) {
        for (double v : g[i].values)
            s.sum += v;
        s.count += static_cast<double>(g[i].values.size());
    }
    return s;
}

double within_ss(const std::vector<Group>& g, std::size_t lo, std::size_t hi, double m)
{
    double ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
        for (double v : g[i].values)
            ss += (v - m) * (v - m);
    return ss;
}

void split(const std::vector<Group>& g, std::size_t lo, std::size_t hi, double alpha, std::vector<std::size_t>& cuts)
{
    if (hi - lo < 2)
        return;
    const auto all = range_stats(g, lo, hi);
    const double grand = all.sum / all.count;
    double best_between = -1.0;
    std::size_t best_cut = lo + 1;
    for (std::size_t cut = lo + 1; cut < hi; ++cut) {
        const auto left = range_stats(g, lo, cut);
        const auto right = range_stats(g, cut, hi);
        const double ml = left.sum / left.count, mr = right.sum / right.count;
        const double between = left.count * (ml - grand) * (ml - grand) + right.count * (mr - grand) * (mr - grand);
        if (between > best_between) {
            best_between = between;
            best_cut = cut;
        }
    }

    const auto left = range_stats(g, lo, best_cut);
    const auto right = range_stats(g, best_cut, hi);
    const double within = within_ss(g, lo, best_cut, left.sum / left.count) +
                          within_ss(g, best_cut, hi, right.sum / right.count);
    const double df2 = all.count - 2.0;
    bool significant = false;
    if (best_between > 0.0 && df2 > 0.0) {
        if (within <= 0.0) {
            significant = true;
        } else {
            const double f = best_between / (within / df2);
            boost::math::fisher_f_distribution<double> dist(1.0, df2);
            significant = boost::math::cdf(boost::math::complement(dist, f)) < alpha;
        }
    }
    if (!significant)
        return;
    split(g, lo, best_cut, alpha, cuts);
    cuts.push_back(best_cut);
    split(g, best_cut, hi, alpha, cuts);
}

} // namespace

std::map<std::string, int> scott_knott(const std::map<std::string, std::vector<double>>& groups, double alpha)
{
    std::vector<Group> ordered;
    for (const auto& [label, values] : groups) {
        if (values.empty())
            throw Error(fmt::format("Scott-Knott group '{}' is empty", label));
        ordered.push_back({label, values, mean(values)});
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.mean < b.mean; });

    std::vector<std::size_t> cuts;
    split(ordered, 0, ordered.size(), alpha, cuts);
    std::sort(cuts.begin(), cuts.end());

    std::map<std::string, int> ranks;
    int rank = 1;
    std::size_t next_cut = 0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        while (next_cut < cuts.size() && cuts[next_cut] == i) {
            ++rank;
            ++next_cut;
        }
        ranks[ordered[i].label] = rank;
    }
    return ranks;
}

std::string pick_best_counterpart(const std::map<std::string, std::vector<double>>& per_optimizer_results)
{
    if (per_optimizer_results.empty())
        throw Error("no optimizer results to choose from");
    auto ranks = scott_knott(per_optimizer_results);
    std::string best;
    int best_rank = std::numeric_limits<int>::max();
    double best_mean = std::numeric_limits<double>::infinity();
    for (const auto& [label, values] : per_optimizer_results) {
        const int r = ranks.at(label);
        const double m = mean(values);
        if (r < best_rank || (r == best_rank && m < best_mean)) {
            best = label;
            best_rank = r;
            best_mean = m;
        }
    }
    return best;
}

} // namespace mmotune
