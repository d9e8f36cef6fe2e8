#include "mmotune/measurement.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mmotune/error.hpp"
#include "mmotune/trace.hpp"

extern char** environ;

namespace mmotune {

Direction parse_direction(std::string_view text)
{
    if (text == "minimize" || text == "min")
        return Direction::minimize;
    if (text == "maximize" || text == "max")
        return Direction::maximize;
    throw FormatError(fmt::format("unknown direction '{}'", text));
}

std::string_view to_string(Direction d)
{
    return d == Direction::minimize ? "minimize" : "maximize";
}

// ---------------------------------------------------------------------------
// Tabular oracle

TabularOracle::TabularOracle(OptionSpace space, Direction target_direction, Direction auxiliary_direction)
    : space_(std::move(space)), target_direction_(target_direction), auxiliary_direction_(auxiliary_direction)
{
    columns_ = space_.names();
    columns_.emplace_back("target");
    columns_.emplace_back("auxiliary");
}

void TabularOracle::add_row(const Configuration& config, double target, double auxiliary)
{
    if (!space_.contains(config))
        throw FormatError(fmt::format("table row {} lies outside the option space", to_string(config)));
    if (!std::isfinite(target) || !std::isfinite(auxiliary))
        throw FormatError(fmt::format("table row {} has a non-finite value", to_string(config)));
    if (!rows_.emplace(config, std::make_pair(target, auxiliary)).second)
        throw FormatError(fmt::format("duplicate configuration row {}", to_string(config)));
}

MeasurementRecord TabularOracle::measure(const Configuration& config) const
{
    auto it = rows_.find(config);
    if (it == rows_.end())
        throw UnmeasuredConfiguration(fmt::format("unmeasured configuration {}", to_string(config)));
    return {it->second.first, it->second.second, target_direction_, auxiliary_direction_};
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return cells;
}

template <typename T>
T parse_number(std::string_view cell, std::size_t line_no, std::string_view column)
{
    T value{};
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
        throw FormatError(fmt::format("line {}: non-numeric cell '{}' in column '{}'", line_no, cell, column));
    return value;
}

} // namespace

TabularOracle parse_table(std::string_view csv_text, const OptionSpace& space, Direction target_direction,
                          Direction auxiliary_direction)
{
    TabularOracle table(space, target_direction, auxiliary_direction);

    std::size_t line_no = 0;
    std::size_t pos = 0;
    auto next_line = [&](std::string_view& out) {
        if (pos >= csv_text.size())
            return false;
        auto end = csv_text.find('\n', pos);
        out = csv_text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? csv_text.size() : end + 1;
        if (!out.empty() && out.back() == '\r')
            out.remove_suffix(1);
        ++line_no;
        return true;
    };

    std::string_view line;
    if (!next_line(line))
        throw FormatError("table is empty");
    auto header = split_csv_line(line);

    // column index -> option index, plus target/auxiliary positions
    std::vector<std::optional<std::size_t>> option_of_column(header.size());
    std::optional<std::size_t> target_col, aux_col;
    std::vector<bool> option_seen(space.size(), false);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "target") {
            target_col = c;
        } else if (header[c] == "auxiliary") {
            aux_col = c;
        } else if (auto idx = space.index_of(header[c])) {
            if (option_seen[*idx])
                throw FormatError(fmt::format("option column '{}' appears twice", header[c]));
            option_seen[*idx] = true;
            option_of_column[c] = idx;
        } else {
            throw FormatError(fmt::format("unknown option column '{}'", header[c]));
        }
    }
    if (!target_col)
        throw FormatError("table is missing the 'target' column");
    if (!aux_col)
        throw FormatError("table is missing the 'auxiliary' column");
    for (std::size_t i = 0; i < space.size(); ++i)
        if (!option_seen[i])
            throw FormatError(fmt::format("table is missing option column '{}'", space[i].name));

    while (next_line(line)) {
        if (line.empty())
            continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw FormatError(fmt::format("line {}: expected {} cells, found {}", line_no, header.size(), cells.size()));
        Configuration config;
        config.values.resize(space.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            if (option_of_column[c])
                config.values[*option_of_column[c]] =
                    parse_number<std::int64_t>(cells[c], line_no, header[c]);
        double target = parse_number<double>(cells[*target_col], line_no, "target");
        double aux = parse_number<double>(cells[*aux_col], line_no, "auxiliary");
        try {
            table.add_row(config, target, aux);
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("line {}: {}", line_no, e.what()));
        }
    }
    return table;
}

TabularOracle load_table(const std::string& path, const OptionSpace& space, Direction target_direction,
                         Direction auxiliary_direction)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(fmt::format("cannot open table '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_table(buffer.str(), space, target_direction, auxiliary_direction);
}

// ---------------------------------------------------------------------------
// Command oracle

double lower_median(std::vector<double> values)
{
    if (values.empty())
        throw Error("median of an empty sample");
    auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

CommandOracle::CommandOracle(OptionSpace space, CommandOracleOptions options)
    : space_(std::move(space)), options_(std::move(options))
{
    if (options_.samples == 0)
        throw Error("command oracle needs at least one sample");
    if (options_.command_template.empty())
        throw Error("command oracle needs a command");
}

std::string CommandOracle::expand_template(const Configuration& config) const
{
    std::string out = options_.command_template;
    for (std::size_t i = 0; i < space_.size(); ++i) {
        std::string key = "{" + space_[i].name + "}";
        std::string value = std::to_string(config.values[i]);
        for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size()))
            out.replace(pos, key.size(), value);
    }
    return out;
}

namespace {

struct ProcessOutput {
    int exit_status = 0;
    bool timed_out = false;
    std::string out;
    std::string err;
};

ProcessOutput run_shell(const std::string& command, const std::vector<std::string>& extra_env,
                        std::chrono::milliseconds timeout)
{
    // environment assembled before fork so the child only calls execve
    std::vector<std::string> env_storage;
    for (char** e = environ; e && *e; ++e)
        env_storage.emplace_back(*e);
    for (const auto& kv : extra_env)
        env_storage.push_back(kv);
    std::vector<char*> envp;
    for (auto& s : env_storage)
        envp.push_back(s.data());
    envp.push_back(nullptr);

    std::string cmd = command;
    char sh[] = "/bin/sh";
    char dash_c[] = "-c";
    char* argv[] = {sh, dash_c, cmd.data(), nullptr};

    int out_pipe[2], err_pipe[2];
    if (pipe2(out_pipe, O_CLOEXEC) != 0)
        throw MeasurementError("pipe() failed");
    if (pipe2(err_pipe, O_CLOEXEC) != 0) {
        close(out_pipe[0]);
        close(out_pipe[1]);
        throw MeasurementError("pipe() failed");
    }

    pid_t pid = fork();
    if (pid < 0) {
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]})
            close(fd);
        throw MeasurementError("fork() failed");
    }
    if (pid == 0) {
        setpgid(0, 0);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        int devnull = open("/dev/null", O_RDONLY);
        if (devnull >= 0)
            dup2(devnull, STDIN_FILENO);
        execve(sh, argv, envp.data());
        _exit(127);
    }
    close(out_pipe[1]);
    close(err_pipe[1]);

    ProcessOutput result;
    auto deadline = std::chrono::steady_clock::now() + timeout;
    pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    int open_fds = 2;
    char buf[4096];
    while (open_fds > 0) {
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            result.timed_out = true;
            break;
        }
        int rc = poll(fds, 2, static_cast<int>(std::min<long long>(remaining.count(), 1 << 30)));
        if (rc < 0) {
            if (errno == EINTR)
                continue;
            break;
        }
        for (int k = 0; k < 2; ++k) {
            if (fds[k].fd < 0 || !(fds[k].revents & (POLLIN | POLLHUP | POLLERR)))
                continue;
            ssize_t n = read(fds[k].fd, buf, sizeof buf);
            if (n > 0) {
                (k == 0 ? result.out : result.err).append(buf, static_cast<std::size_t>(n));
            } else {
                close(fds[k].fd);
                fds[k].fd = -1;
                --open_fds;
            }
        }
    }
    for (auto& f : fds)
        if (f.fd >= 0)
            close(f.fd);

    if (result.timed_out) {
        kill(-pid, SIGKILL);
        kill(pid, SIGKILL);
    }
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status))
        result.exit_status = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_status = 128 + WTERMSIG(status);
    return result;
}

std::string transcript_of(const std::string& command, const ProcessOutput& p)
{
    return fmt::format("$ {}\n[exit {}]\n--- stdout ---\n{}--- stderr ---\n{}", command, p.exit_status, p.out, p.err);
}

std::string last_nonempty_line(const std::string& text)
{
    std::string_view view(text);
    while (!view.empty() && (view.back() == '\n' || view.back() == '\r' || view.back() == ' '))
        view.remove_suffix(1);
    auto pos = view.rfind('\n');
    return std::string(pos == std::string_view::npos ? view : view.substr(pos + 1));
}

} // namespace

MeasurementRecord CommandOracle::measure(const Configuration& config) const
{
    space_.validate(config);
    const std::string command = expand_template(config);
    std::vector<std::string> env;
    for (std::size_t i = 0; i < space_.size(); ++i) {
        std::string name = space_[i].name;
        for (auto& ch : name)
            ch = std::isalnum(static_cast<unsigned char>(ch)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(ch))) : '_';
        env.push_back(fmt::format("OPT_{}={}", name, config.values[i]));
    }

    std::vector<double> targets, auxiliaries;
    for (std::size_t s = 0; s < options_.samples; ++s) {
        auto p = run_shell(command, env, options_.timeout);
        if (p.timed_out)
            throw MeasurementError(fmt::format("command timed out after {} ms", options_.timeout.count()),
                                   transcript_of(command, p));
        if (p.exit_status != 0)
            throw MeasurementError(fmt::format("command exited with status {}", p.exit_status),
                                   transcript_of(command, p));
        auto line = last_nonempty_line(p.out);
        double target = 0, aux = 0;
        try {
            auto doc = nlohmann::json::parse(line);
            if (!doc.is_object() || !doc.contains("target") || !doc.contains("auxiliary") ||
                !doc["target"].is_number() || !doc["auxiliary"].is_number())
                throw FormatError("missing numeric fields");
            target = doc["target"].get<double>();
            aux = doc["auxiliary"].get<double>();
        } catch (const std::exception& e) {
            throw MeasurementError(fmt::format("unparseable command output '{}'", line), transcript_of(command, p));
        }
        if (!std::isfinite(target) || !std::isfinite(aux))
            throw MeasurementError("command reported a non-finite value", transcript_of(command, p));
        targets.push_back(target);
        auxiliaries.push_back(aux);
    }
    return {lower_median(std::move(targets)), lower_median(std::move(auxiliaries)), options_.target_direction,
            options_.auxiliary_direction};
}

MeasurementRecord command_oracle_measure(const OptionSpace& space, const std::string& command,
                                         const Configuration& config, std::size_t samples)
{
    CommandOracleOptions options;
    options.command_template = command;
    options.samples = samples;
    return CommandOracle(space, options).measure(config);
}

// ---------------------------------------------------------------------------
// Synthetic landscapes

namespace {
constexpr std::uint64_t kSaltPlanted = 0x706c616e74656400ULL;
constexpr std::uint64_t kSaltWeight = 0x7765696768740000ULL;
constexpr std::uint64_t kSaltProjection = 0x70726f6a00000000ULL;
constexpr std::uint64_t kSaltPit = 0x7069740000000000ULL;
constexpr std::uint64_t kSaltDepth = 0x6465707468000000ULL;
constexpr std::uint64_t kSaltNoise = 0x6e6f697365000000ULL;

double normalized_value(const OptionSpec& o, std::int64_t v)
{
    return o.cardinality() > 1 ? static_cast<double>(v - o.lower) / static_cast<double>(o.upper - o.lower) : 0.0;
}
} // namespace

SyntheticOracle::SyntheticOracle(OptionSpace space, SyntheticLandscapeParams params)
    : space_(std::move(space)), params_(std::move(params))
{
    if (!(params_.local_optima_density > 0.0 && params_.local_optima_density <= 1.0))
        throw Error("local_optima_density must lie in (0, 1]");
    if (!(params_.ruggedness >= 0.0) || !std::isfinite(params_.ruggedness))
        throw Error("ruggedness must be a finite non-negative number");
    if (!(params_.correlation >= -1.0 && params_.correlation <= 1.0))
        throw Error("correlation must lie in [-1, 1]");

    const std::uint64_t seed = params_.seed;
    if (params_.planted_optimum) {
        space_.validate(*params_.planted_optimum);
        planted_ = *params_.planted_optimum;
    } else {
        planted_.values.resize(space_.size());
        for (std::size_t i = 0; i < space_.size(); ++i) {
            const auto& o = space_[i];
            auto h = hash_combine(hash_combine(seed, kSaltPlanted), i);
            planted_.values[i] = o.lower + static_cast<std::int64_t>(h % o.cardinality());
        }
        params_.planted_optimum = planted_;
    }

    weights_.assign(space_.size(), 0.0);
    projection_.assign(space_.size(), 0.0);
    double weight_sum = 0.0;
    double proj_min = 0.0, proj_max = 0.0;
    for (std::size_t i = 0; i < space_.size(); ++i) {
        if (space_[i].cardinality() < 2)
            continue;
        weights_[i] = 0.5 + unit_interval(hash_combine(hash_combine(seed, kSaltWeight), i));
        weight_sum += weights_[i];
        projection_[i] = 2.0 * unit_interval(hash_combine(hash_combine(seed, kSaltProjection), i)) - 1.0;
        (projection_[i] < 0 ? proj_min : proj_max) += projection_[i];
    }
    for (auto& w : weights_) {
        if (weight_sum > 0)
            w /= weight_sum;
        max_step_ = std::max(max_step_, w);
    }
    projection_offset_ = proj_min;
    projection_scale_ = proj_max > proj_min ? 1.0 / (proj_max - proj_min) : 0.0;
}

std::uint64_t SyntheticOracle::config_hash(const Configuration& config, std::uint64_t salt) const
{
    std::uint64_t h = hash_combine(params_.seed, salt);
    for (auto v : config.values)
        h = hash_combine(h, static_cast<std::uint64_t>(v));
    return h;
}

double SyntheticOracle::funnel(const Configuration& config) const
{
    double f = 0.0;
    for (std::size_t i = 0; i < space_.size(); ++i)
        f += weights_[i] * std::abs(normalized_value(space_[i], config.values[i]) -
                                    normalized_value(space_[i], planted_.values[i]));
    return f;
}

bool SyntheticOracle::is_pit(const Configuration& config) const
{
    return config != planted_ && unit_interval(config_hash(config, kSaltPit)) < params_.local_optima_density;
}

double SyntheticOracle::target(const Configuration& config) const
{
    if (config == planted_)
        return 1.0;
    double rugged = is_pit(config) ? 0.5 * unit_interval(config_hash(config, kSaltDepth)) : 1.0;
    return 1.0 + funnel(config) + params_.ruggedness * rugged;
}

double SyntheticOracle::auxiliary(const Configuration& config) const
{
    double projection = 0.0;
    for (std::size_t i = 0; i < space_.size(); ++i)
        projection += projection_[i] * normalized_value(space_[i], config.values[i]);
    projection = (projection - projection_offset_) * projection_scale_;
    double noise = 0.7 * projection + 0.3 * unit_interval(config_hash(config, kSaltNoise));
    const double c = params_.correlation;
    return c * target(config) + std::sqrt(std::max(0.0, 1.0 - c * c)) * (1.0 + params_.ruggedness) * noise;
}

MeasurementRecord SyntheticOracle::measure(const Configuration& config) const
{
    space_.validate(config);
    return {target(config), auxiliary(config), Direction::minimize, Direction::minimize};
}

SyntheticOracle synth_landscape(const OptionSpace& space, const SyntheticLandscapeParams& params)
{
    return SyntheticOracle(space, params);
}

// ---------------------------------------------------------------------------
// Budget ledger

const MeasurementRecord* BudgetLedger::find(const Configuration& c) const
{
    auto it = cache_.find(c);
    return it == cache_.end() ? nullptr : &it->second;
}

MeasureResult BudgetLedger::measure(const Oracle& oracle, const Configuration& config)
{
    if (auto it = cache_.find(config); it != cache_.end())
        return {MeasureStatus::cached, it->second};
    if (cache_.size() >= limit_)
        return {MeasureStatus::budget_exhausted, {}};
    auto record = oracle.measure(config);
    cache_.emplace(config, record);
    return {MeasureStatus::measured, record};
}

namespace {
std::size_t tabulation_size(const OptionSpace& space)
{
    constexpr std::uint64_t limit = std::uint64_t{1} << 24;
    if (space.size_overflows() || space.space_size() > limit)
        throw SpaceError(fmt::format("space of {} configurations is too large to tabulate", space.space_size()));
    return static_cast<std::size_t>(space.space_size());
}
} // namespace

std::vector<TableRow> tabulate(const Oracle& oracle)
{
    const auto& space = oracle.space();
    const auto n = tabulation_size(space);
    std::vector<TableRow> rows(n);
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            rows[k].config = space.decode(k);
            rows[k].record = oracle.measure(rows[k].config);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return rows;
}

namespace serial {
std::vector<TableRow> tabulate(const Oracle& oracle)
{
    const auto& space = oracle.space();
    const auto n = tabulation_size(space);
    std::vector<TableRow> rows;
    rows.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        auto config = space.decode(k);
        auto record = oracle.measure(config);
        rows.push_back({std::move(config), record});
    }
    return rows;
}
} // namespace serial

std::string table_to_csv(const OptionSpace& space, const std::vector<TableRow>& rows)
{
    std::string out;
    for (const auto& name : space.names())
        out += name + ",";
    out += "target,auxiliary\n";
    for (const auto& row : rows) {
        for (auto v : row.config.values)
            out += fmt::format("{},", v);
        out += fmt::format("{},{}\n", format_real(row.record.target_raw), format_real(row.record.auxiliary_raw));
    }
    return out;
}

} // namespace mmotune
