#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mmotune/config_space.hpp"

namespace mmotune {

/// One distinct measurement taken during a run.
struct TraceEntry {
    std::size_t step = 0; // 0-based order index
    Configuration config;
    double target_raw = 0.0;
    double auxiliary_raw = 0.0;
    std::size_t consumed = 0;  // ledger consumption after this measurement
    double best_so_far = 0.0;  // running minimum of the direction-converted target

    bool operator==(const TraceEntry&) const = default;
};

/// Ordered log of a tuning run. Only budget-consuming measurements appear;
/// cache hits are free and are not logged.
struct RunTrace {
    std::vector<std::string> option_names;
    std::vector<TraceEntry> entries;
    std::size_t restarts = 0; // SHC-r diagnostics, not serialized

    bool empty() const noexcept { return entries.empty(); }
    std::size_t size() const noexcept { return entries.size(); }
    /// Best direction-converted target; throws on an empty trace.
    double best() const;
    /// Consumed count at which the final best value was first reached.
    std::optional<std::size_t> measurements_to_best() const;

    bool operator==(const RunTrace& o) const { return option_names == o.option_names && entries == o.entries; }
};

/// Trace CSV: `step,<option names...>,target,auxiliary,consumed,best_so_far`.
/// Reals use the shortest representation that round-trips exactly.
std::string trace_to_csv(const RunTrace& trace);
RunTrace trace_from_csv(std::string_view text);

void emit_trace(const RunTrace& trace, const std::string& path);
RunTrace load_trace(const std::string& path);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

} // namespace mmotune
