#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmotune/config_space.hpp"

namespace mmotune {

enum class Direction { minimize, maximize };

Direction parse_direction(std::string_view text);
std::string_view to_string(Direction d);

/// Raw performance values for one configuration, before direction conversion.
struct MeasurementRecord {
    double target_raw = 0.0;
    double auxiliary_raw = 0.0;
    Direction target_direction = Direction::minimize;
    Direction auxiliary_direction = Direction::minimize;

    bool operator==(const MeasurementRecord&) const = default;
};

/// Anything that can measure a configuration. Implementations are read-only
/// after construction and may be shared across threads, except where noted.
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual const OptionSpace& space() const = 0;
    virtual MeasurementRecord measure(const Configuration& config) const = 0;
};

/// Pre-measured data; answers exact-match lookups only.
class TabularOracle final : public Oracle {
public:
    TabularOracle(OptionSpace space, Direction target_direction, Direction auxiliary_direction);

    /// Throws FormatError on duplicates or rows outside the space.
    void add_row(const Configuration& config, double target, double auxiliary);

    const OptionSpace& space() const override { return space_; }
    /// Throws UnmeasuredConfiguration for absent configurations.
    MeasurementRecord measure(const Configuration& config) const override;
    bool contains(const Configuration& config) const { return rows_.count(config) != 0; }

    std::size_t row_count() const noexcept { return rows_.size(); }
    const std::vector<std::string>& column_names() const noexcept { return columns_; }
    bool complete() const noexcept { return !space_.size_overflows() && rows_.size() == space_.space_size(); }

private:
    OptionSpace space_;
    Direction target_direction_;
    Direction auxiliary_direction_;
    std::vector<std::string> columns_;
    std::unordered_map<Configuration, std::pair<double, double>, ConfigurationHash> rows_;
};

/// Reads the tabular CSV: header = option names in any order, then `target`, `auxiliary`.
TabularOracle load_table(const std::string& path, const OptionSpace& space,
                         Direction target_direction = Direction::minimize,
                         Direction auxiliary_direction = Direction::minimize);
TabularOracle parse_table(std::string_view csv_text, const OptionSpace& space,
                          Direction target_direction = Direction::minimize,
                          Direction auxiliary_direction = Direction::minimize);

/// Runs an external command per measurement. The command sees every option
/// as environment variable `OPT_<NAME>`, and `{name}` placeholders in the
/// template are replaced by the option's value. Its final stdout line must be
/// `{"target": <number>, "auxiliary": <number>}`.
struct CommandOracleOptions {
    std::string command_template;
    std::size_t samples = 5;
    std::chrono::milliseconds timeout{60000};
    Direction target_direction = Direction::minimize;
    Direction auxiliary_direction = Direction::minimize;
};

class CommandOracle final : public Oracle {
public:
    CommandOracle(OptionSpace space, CommandOracleOptions options);

    const OptionSpace& space() const override { return space_; }
    /// Throws MeasurementError (carrying the transcript) on nonzero exit,
    /// unparseable output or timeout.
    MeasurementRecord measure(const Configuration& config) const override;

    std::string expand_template(const Configuration& config) const;

private:
    OptionSpace space_;
    CommandOracleOptions options_;
};

/// Free-function form of CommandOracle::measure.
MeasurementRecord command_oracle_measure(const OptionSpace& space, const std::string& command,
                                         const Configuration& config, std::size_t samples = 5);

/// Lower median (the k+1-th order statistic of 2k+1 samples; lower of the two middles otherwise).
double lower_median(std::vector<double> values);

struct SyntheticLandscapeParams {
    std::uint64_t seed = 0;
    double local_optima_density = 0.05; // (0, 1]
    double ruggedness = 1.0;            // >= 0
    double correlation = 0.3;           // [-1, 1], target <-> auxiliary coupling
    std::optional<Configuration> planted_optimum; // derived from the seed when absent
};

/// Deterministic planted-optimum landscape over a space.
///
/// target(x) = 1 + funnel(x) + ruggedness * pit(x)
///   funnel: weighted normalized L1 distance to the planted optimum, in [0, 1].
///   pit:    1 for ordinary configurations; for a seeded `local_optima_density`
///           fraction of "pit" configurations a value in [0, 0.5), which makes
///           an isolated pit a strict Hamming-1 local minimum once
///           ruggedness/2 exceeds the largest one-option funnel step.
/// The planted optimum has funnel 0 and no pit term, so target = 1 there and
/// strictly more everywhere else. With ruggedness 0 the funnel is the whole
/// landscape and the planted optimum is its only local minimum.
///
/// auxiliary(x) = c * target(x) + sqrt(1 - c^2) * (1 + ruggedness) * noise(x),
/// where noise mixes a seeded linear projection of the configuration (so
/// distant regions tend to differ on the auxiliary) with per-configuration
/// hash noise, both independent of the target.
class SyntheticOracle final : public Oracle {
public:
    SyntheticOracle(OptionSpace space, SyntheticLandscapeParams params);

    const OptionSpace& space() const override { return space_; }
    MeasurementRecord measure(const Configuration& config) const override;

    double target(const Configuration& config) const;
    double auxiliary(const Configuration& config) const;
    bool is_pit(const Configuration& config) const;
    const Configuration& planted_optimum() const noexcept { return planted_; }
    const SyntheticLandscapeParams& params() const noexcept { return params_; }
    /// Largest change of the funnel term when one option changes.
    double max_funnel_step() const noexcept { return max_step_; }

private:
    double funnel(const Configuration& config) const;
    std::uint64_t config_hash(const Configuration& config, std::uint64_t salt) const;

    OptionSpace space_;
    SyntheticLandscapeParams params_;
    Configuration planted_;
    std::vector<double> weights_;    // funnel weights, normalized to sum 1
    std::vector<double> projection_; // auxiliary projection coefficients
    double projection_offset_ = 0.0;
    double projection_scale_ = 1.0;
    double max_step_ = 0.0;
};

SyntheticOracle synth_landscape(const OptionSpace& space, const SyntheticLandscapeParams& params);

struct TableRow {
    Configuration config;
    MeasurementRecord record;
};

/// Measures every configuration of the oracle's space in encoding order.
/// Throws SpaceError for spaces above 2^24 configurations.
std::vector<TableRow> tabulate(const Oracle& oracle);

namespace serial {
std::vector<TableRow> tabulate(const Oracle& oracle);
} // namespace serial

/// CSV accepted by load_table: option columns, then `target`, `auxiliary`.
std::string table_to_csv(const OptionSpace& space, const std::vector<TableRow>& rows);

enum class MeasureStatus { cached, measured, budget_exhausted };

struct MeasureResult {
    MeasureStatus status = MeasureStatus::budget_exhausted;
    MeasurementRecord record{};

    explicit operator bool() const noexcept { return status != MeasureStatus::budget_exhausted; }
    bool fresh() const noexcept { return status == MeasureStatus::measured; }
};

/// Distinct-configuration budget plus the per-run measurement cache.
/// Owned by exactly one run.
class BudgetLedger {
public:
    explicit BudgetLedger(std::size_t limit) : limit_(limit) {}

    std::size_t limit() const noexcept { return limit_; }
    std::size_t consumed() const noexcept { return cache_.size(); }
    bool exhausted() const noexcept { return cache_.size() >= limit_; }
    bool contains(const Configuration& c) const { return cache_.count(c) != 0; }
    const MeasurementRecord* find(const Configuration& c) const;

    /// Cache hit: free. Miss with room: measures and charges one unit.
    /// Miss at the limit: budget_exhausted. Oracle errors propagate.
    MeasureResult measure(const Oracle& oracle, const Configuration& config);

private:
    std::size_t limit_;
    std::unordered_map<Configuration, MeasurementRecord, ConfigurationHash> cache_;
};

inline MeasureResult cached_measure(BudgetLedger& ledger, const Oracle& oracle, const Configuration& config)
{
    return ledger.measure(oracle, config);
}

} // namespace mmotune
