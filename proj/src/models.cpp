#include "mmotune/models.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include <fmt/format.h>

#include "mmotune/error.hpp"

namespace mmotune {

ObjectivePoint::ObjectivePoint(std::initializer_list<double> values)
    : ObjectivePoint(std::span<const double>(values.begin(), values.size()))
{
}

ObjectivePoint::ObjectivePoint(std::span<const double> values)
{
    if (values.empty() || values.size() > max_size)
        throw Error(fmt::format("objective point must have 1..{} values, got {}", max_size, values.size()));
    size_ = values.size();
    std::copy(values.begin(), values.end(), values_.begin());
}

bool ObjectivePoint::operator==(const ObjectivePoint& o) const noexcept
{
    return size_ == o.size_ && std::equal(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(size_),
                                          o.values_.begin());
}

MinimizedPair to_minimization(const MeasurementRecord& record)
{
    return {record.target_direction == Direction::maximize ? -record.target_raw : record.target_raw,
            record.auxiliary_direction == Direction::maximize ? -record.auxiliary_raw : record.auxiliary_raw};
}

bool NormalizationBounds::update(double target, double auxiliary)
{
    const std::array<double, 2> p{target, auxiliary};
    if (!initialized_) {
        min_ = p;
        max_ = p;
        initialized_ = true;
        return true;
    }
    bool widened = false;
    for (std::size_t k = 0; k < 2; ++k) {
        if (p[k] < min_[k]) {
            min_[k] = p[k];
            widened = true;
        }
        if (p[k] > max_[k]) {
            max_[k] = p[k];
            widened = true;
        }
    }
    return widened;
}

NormalizationBounds update_bounds(NormalizationBounds bounds, const MinimizedPair& point)
{
    bounds.update(point);
    return bounds;
}

double normalize(const NormalizationBounds& bounds, double value, std::size_t objective)
{
    assert(bounds.initialized());
    const double lo = bounds.min(objective);
    const double hi = bounds.max(objective);
    assert(value >= lo && value <= hi);
    if (hi == lo)
        return 0.5;
    return std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
}

std::string_view to_string(MmoShape shape)
{
    switch (shape) {
    case MmoShape::linear: return "linear";
    case MmoShape::sqrt: return "sqrt";
    case MmoShape::square: return "square";
    }
    return "?";
}

MmoShape parse_mmo_shape(std::string_view text)
{
    if (text == "linear")
        return MmoShape::linear;
    if (text == "sqrt")
        return MmoShape::sqrt;
    if (text == "square")
        return MmoShape::square;
    throw FormatError(fmt::format("unknown MMO instance '{}'", text));
}

double MmoInstance::phi(double fa_norm) const
{
    switch (shape) {
    case MmoShape::linear: return weight * fa_norm;
    case MmoShape::sqrt: return weight * std::sqrt(fa_norm);
    case MmoShape::square: return weight * fa_norm * fa_norm;
    }
    return 0.0;
}

ObjectivePoint meta_objectives(const MmoInstance& instance, double ft_norm, double fa_norm)
{
    const double phi = instance.phi(fa_norm);
    return {ft_norm + phi, ft_norm - phi};
}

ObjectivePoint pmo_objectives(double ft_norm, double fa_norm)
{
    return {ft_norm, fa_norm};
}

ObjectivePoint model_objectives(const MultiModel& model, double ft_norm, double fa_norm)
{
    if (const auto* mmo = std::get_if<MmoInstance>(&model))
        return meta_objectives(*mmo, ft_norm, fa_norm);
    return pmo_objectives(ft_norm, fa_norm);
}

Dominance dominates(const ObjectivePoint& u, const ObjectivePoint& v)
{
    if (u.size() != v.size())
        throw Error(fmt::format("cannot compare objective points of length {} and {}", u.size(), v.size()));
    bool u_better = false, v_better = false;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (u[k] < v[k])
            u_better = true;
        else if (v[k] < u[k])
            v_better = true;
    }
    if (u_better && !v_better)
        return Dominance::dominates;
    if (v_better && !u_better)
        return Dominance::dominated;
    return Dominance::nondominated;
}

namespace {
bool dominated_by_any(std::span<const ObjectivePoint> points, std::size_t i)
{
    for (std::size_t j = 0; j < points.size(); ++j)
        if (j != i && dominates(points[j], points[i]) == Dominance::dominates)
            return true;
    return false;
}
} // namespace

std::vector<std::size_t> pareto_front(std::span<const ObjectivePoint> points)
{
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    std::vector<char> keep(points.size(), 0);
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        keep[static_cast<std::size_t>(i)] = dominated_by_any(points, static_cast<std::size_t>(i)) ? 0 : 1;

    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (keep[i])
            front.push_back(i);
    return front;
}

namespace serial {
std::vector<std::size_t> pareto_front(std::span<const ObjectivePoint> points)
{
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (!dominated_by_any(points, i))
            front.push_back(i);
    return front;
}
} // namespace serial

} // namespace mmotune
