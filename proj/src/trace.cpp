#include "mmotune/trace.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mmotune/error.hpp"

namespace mmotune {

double RunTrace::best() const
{
    if (entries.empty())
        throw Error("best() of an empty trace");
    return entries.back().best_so_far;
}

std::optional<std::size_t> RunTrace::measurements_to_best() const
{
    if (entries.empty())
        return std::nullopt;
    const double best_value = entries.back().best_so_far;
    for (const auto& e : entries)
        if (e.best_so_far == best_value)
            return e.consumed;
    return entries.back().consumed;
}

std::string format_real(double value)
{
    // fmt prints the shortest round-trip representation
    return fmt::format("{}", value);
}

std::string trace_to_csv(const RunTrace& trace)
{
    std::string out = "step";
    for (const auto& name : trace.option_names)
        out += "," + name;
    out += ",target,auxiliary,consumed,best_so_far\n";
    for (const auto& e : trace.entries) {
        out += std::to_string(e.step);
        for (auto v : e.config.values)
            out += "," + std::to_string(v);
        out += fmt::format(",{},{},{},{}\n", format_real(e.target_raw), format_real(e.auxiliary_raw), e.consumed,
                           format_real(e.best_so_far));
    }
    return out;
}

namespace {

template <typename T>
T parse_cell(std::string_view cell, std::size_t line_no)
{
    T value{};
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size())
        throw FormatError(fmt::format("trace line {}: bad cell '{}'", line_no, cell));
    return value;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

} // namespace

RunTrace trace_from_csv(std::string_view text)
{
    RunTrace trace;
    std::size_t pos = 0, line_no = 0;
    bool header_done = false;
    std::size_t n_options = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        auto cells = split(line);
        if (!header_done) {
            if (cells.size() < 5 || cells.front() != "step" || cells[cells.size() - 4] != "target" ||
                cells[cells.size() - 3] != "auxiliary" || cells[cells.size() - 2] != "consumed" ||
                cells.back() != "best_so_far")
                throw FormatError("trace header must be step,<options...>,target,auxiliary,consumed,best_so_far");
            n_options = cells.size() - 5;
            for (std::size_t i = 1; i <= n_options; ++i)
                trace.option_names.emplace_back(cells[i]);
            header_done = true;
            continue;
        }
        if (cells.size() != n_options + 5)
            throw FormatError(fmt::format("trace line {}: expected {} cells, found {}", line_no, n_options + 5,
                                          cells.size()));
        TraceEntry e;
        e.step = parse_cell<std::size_t>(cells[0], line_no);
        for (std::size_t i = 0; i < n_options; ++i)
            e.config.values.push_back(parse_cell<std::int64_t>(cells[1 + i], line_no));
        e.target_raw = parse_cell<double>(cells[n_options + 1], line_no);
        e.auxiliary_raw = parse_cell<double>(cells[n_options + 2], line_no);
        e.consumed = parse_cell<std::size_t>(cells[n_options + 3], line_no);
        e.best_so_far = parse_cell<double>(cells[n_options + 4], line_no);
        trace.entries.push_back(std::move(e));
    }
    if (!header_done)
        throw FormatError("trace file has no header");
    return trace;
}

void emit_trace(const RunTrace& trace, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(fmt::format("cannot write trace '{}'", path));
    out << trace_to_csv(trace);
    if (!out)
        throw Error(fmt::format("failed writing trace '{}'", path));
}

RunTrace load_trace(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(fmt::format("cannot open trace '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return trace_from_csv(buffer.str());
}

} // namespace mmotune
