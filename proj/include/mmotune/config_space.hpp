#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmotune/rng.hpp"

namespace mmotune {

enum class OptionKind { binary, integer };

struct OptionSpec {
    std::string name;
    OptionKind kind = OptionKind::integer;
    std::int64_t lower = 0;
    std::int64_t upper = 0; // inclusive

    std::uint64_t cardinality() const noexcept { return static_cast<std::uint64_t>(upper - lower) + 1; }
};

/// One value per option, in the space's declaration order.
struct Configuration {
    std::vector<std::int64_t> values;

    bool operator==(const Configuration&) const = default;
    auto operator<=>(const Configuration&) const = default;
};

struct ConfigurationHash {
    std::size_t operator()(const Configuration& c) const noexcept
    {
        std::uint64_t h = 0x84222325cbf29ce4ULL;
        for (auto v : c.values)
            h = hash_combine(h, static_cast<std::uint64_t>(v));
        return static_cast<std::size_t>(h);
    }
};

std::string to_string(const Configuration& c);

/// Result of a neighbourhood draw; `clamped` reports a radius larger than the option count.
struct Neighborhood {
    std::vector<Configuration> configs;
    std::size_t radius = 0;
    bool clamped = false;
};

/// An unconstrained Cartesian product of binary and integer options.
/// Immutable after construction.
class OptionSpace {
public:
    /// Throws SpaceError for an empty list, a duplicate name, or lower > upper.
    explicit OptionSpace(std::vector<OptionSpec> options);

    const std::vector<OptionSpec>& options() const noexcept { return options_; }
    std::size_t size() const noexcept { return options_.size(); }
    const OptionSpec& operator[](std::size_t i) const { return options_[i]; }
    std::optional<std::size_t> index_of(std::string_view name) const;
    std::vector<std::string> names() const;

    /// Product of per-option cardinalities; saturates at UINT64_MAX.
    std::uint64_t space_size() const noexcept { return space_size_; }
    bool size_overflows() const noexcept { return overflow_; }

    bool contains(const Configuration& c) const noexcept;
    /// Throws SpaceError naming the first offending option.
    void validate(const Configuration& c) const;
    /// Validated construction.
    Configuration make(std::vector<std::int64_t> values) const;

    /// Mixed-radix rank in [0, space_size); requires !size_overflows().
    std::uint64_t encode(const Configuration& c) const;
    Configuration decode(std::uint64_t index) const;

    bool operator==(const OptionSpace& other) const;

private:
    std::vector<OptionSpec> options_;
    std::uint64_t space_size_ = 1;
    bool overflow_ = false;
};

/// Parses a space document `{ "options": [ {name, kind, lower, upper}, ... ] }`.
OptionSpace parse_space(std::string_view spec_text);
OptionSpace load_space(const std::string& path);
std::string space_to_json(const OptionSpace& space);

inline std::uint64_t space_size(const OptionSpace& space) noexcept { return space.space_size(); }

/// Every option independently uniform over its range.
Configuration random_config(const OptionSpace& space, Rng& rng);

/// `count` configurations, each at Hamming distance 1..radius from `config`
/// (distance uniform in that range). Changed options take a value uniform over
/// their range excluding the current value. Options of cardinality 1 never change.
Neighborhood neighbors(const OptionSpace& space, const Configuration& config, std::size_t radius, Rng& rng,
                       std::size_t count);

std::size_t hamming_distance(const Configuration& a, const Configuration& b);

} // namespace mmotune
