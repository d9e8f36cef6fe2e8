#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mmotune/measurement.hpp"

namespace mmotune {

/// Minimization-oriented objective vector: 1 value (single-objective) or 2 (PMO, MMO).
class ObjectivePoint {
public:
    static constexpr std::size_t max_size = 2;

    ObjectivePoint() = default;
    ObjectivePoint(std::initializer_list<double> values);
    explicit ObjectivePoint(std::span<const double> values);

    std::size_t size() const noexcept { return size_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }
    std::span<const double> values() const noexcept { return {values_.data(), size_}; }

    bool operator==(const ObjectivePoint& o) const noexcept;

private:
    std::array<double, max_size> values_{};
    std::size_t size_ = 0;
};

struct MinimizedPair {
    double target = 0.0;
    double auxiliary = 0.0;
};

/// Negates each value whose direction is maximize.
MinimizedPair to_minimization(const MeasurementRecord& record);

/// Running per-objective min/max of direction-converted values within one run.
class NormalizationBounds {
public:
    bool initialized() const noexcept { return initialized_; }
    double min(std::size_t objective) const noexcept { return min_[objective]; }
    double max(std::size_t objective) const noexcept { return max_[objective]; }

    /// Widens to include the point; returns true when any bound moved.
    bool update(double target, double auxiliary);
    bool update(const MinimizedPair& p) { return update(p.target, p.auxiliary); }

    bool operator==(const NormalizationBounds&) const = default;

private:
    std::array<double, 2> min_{};
    std::array<double, 2> max_{};
    bool initialized_ = false;
};

/// Functional form of NormalizationBounds::update.
NormalizationBounds update_bounds(NormalizationBounds bounds, const MinimizedPair& point);

/// Max-min scaling to [0, 1]; a degenerate range maps to 0.5.
/// Values outside the bounds are a contract violation (asserted in debug builds).
double normalize(const NormalizationBounds& bounds, double value, std::size_t objective);

enum class MmoShape { linear, sqrt, square };

std::string_view to_string(MmoShape shape);
MmoShape parse_mmo_shape(std::string_view text);

struct MmoInstance {
    MmoShape shape = MmoShape::linear;
    double weight = 1.0; // > 0

    double phi(double fa_norm) const;
};

struct PmoModel {};

/// Models driven by NSGA-II.
using MultiModel = std::variant<PmoModel, MmoInstance>;

/// g1 = ft + w*phi(fa), g2 = ft - w*phi(fa), phi in {identity, sqrt, square}.
ObjectivePoint meta_objectives(const MmoInstance& instance, double ft_norm, double fa_norm);
ObjectivePoint pmo_objectives(double ft_norm, double fa_norm);
ObjectivePoint model_objectives(const MultiModel& model, double ft_norm, double fa_norm);

enum class Dominance { dominates, dominated, nondominated };

/// Pareto relation of u to v; equal points are nondominated. Throws on length mismatch.
Dominance dominates(const ObjectivePoint& u, const ObjectivePoint& v);

/// Indices (ascending) of points dominated by no other point. Parallel over points.
std::vector<std::size_t> pareto_front(std::span<const ObjectivePoint> points);

namespace serial {
/// Single-threaded reference for pareto_front.
std::vector<std::size_t> pareto_front(std::span<const ObjectivePoint> points);
} // namespace serial

} // namespace mmotune
