#include "mmotune/config_space.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mmotune/error.hpp"

namespace mmotune {

std::string to_string(const Configuration& c)
{
    return fmt::format("({})", fmt::join(c.values, ","));
}

OptionSpace::OptionSpace(std::vector<OptionSpec> options) : options_(std::move(options))
{
    if (options_.empty())
        throw SpaceError("option space has no options");
    std::unordered_set<std::string> seen;
    for (const auto& o : options_) {
        if (o.name.empty())
            throw SpaceError("option with empty name");
        if (!seen.insert(o.name).second)
            throw SpaceError(fmt::format("duplicate option name '{}'", o.name));
        if (o.lower > o.upper)
            throw SpaceError(fmt::format("option '{}' has lower {} > upper {}", o.name, o.lower, o.upper));
        if (o.kind == OptionKind::binary && (o.lower != 0 || o.upper != 1))
            throw SpaceError(fmt::format("binary option '{}' must range over 0..1", o.name));
        auto card = o.cardinality();
        if (!overflow_ && space_size_ > std::numeric_limits<std::uint64_t>::max() / card)
            overflow_ = true;
        space_size_ = overflow_ ? std::numeric_limits<std::uint64_t>::max() : space_size_ * card;
    }
}

std::optional<std::size_t> OptionSpace::index_of(std::string_view name) const
{
    for (std::size_t i = 0; i < options_.size(); ++i)
        if (options_[i].name == name)
            return i;
    return std::nullopt;
}

std::vector<std::string> OptionSpace::names() const
{
    std::vector<std::string> out;
    out.reserve(options_.size());
    for (const auto& o : options_)
        out.push_back(o.name);
    return out;
}

bool OptionSpace::contains(const Configuration& c) const noexcept
{
    if (c.values.size() != options_.size())
        return false;
    for (std::size_t i = 0; i < options_.size(); ++i)
        if (c.values[i] < options_[i].lower || c.values[i] > options_[i].upper)
            return false;
    return true;
}

void OptionSpace::validate(const Configuration& c) const
{
    if (c.values.size() != options_.size())
        throw SpaceError(fmt::format("configuration has {} values, space has {} options", c.values.size(),
                                     options_.size()));
    for (std::size_t i = 0; i < options_.size(); ++i) {
        const auto& o = options_[i];
        if (c.values[i] < o.lower || c.values[i] > o.upper)
            throw SpaceError(fmt::format("value {} of option '{}' outside [{}, {}]", c.values[i], o.name, o.lower,
                                         o.upper));
    }
}

Configuration OptionSpace::make(std::vector<std::int64_t> values) const
{
    Configuration c{std::move(values)};
    validate(c);
    return c;
}

std::uint64_t OptionSpace::encode(const Configuration& c) const
{
    if (overflow_)
        throw SpaceError("space too large for index encoding");
    std::uint64_t index = 0;
    for (std::size_t i = 0; i < options_.size(); ++i)
        index = index * options_[i].cardinality() + static_cast<std::uint64_t>(c.values[i] - options_[i].lower);
    return index;
}

Configuration OptionSpace::decode(std::uint64_t index) const
{
    if (overflow_)
        throw SpaceError("space too large for index encoding");
    if (index >= space_size_)
        throw SpaceError(fmt::format("index {} outside space of size {}", index, space_size_));
    Configuration c;
    c.values.resize(options_.size());
    for (std::size_t k = options_.size(); k-- > 0;) {
        auto card = options_[k].cardinality();
        c.values[k] = options_[k].lower + static_cast<std::int64_t>(index % card);
        index /= card;
    }
    return c;
}

bool OptionSpace::operator==(const OptionSpace& other) const
{
    if (options_.size() != other.options_.size())
        return false;
    for (std::size_t i = 0; i < options_.size(); ++i) {
        const auto& a = options_[i];
        const auto& b = other.options_[i];
        if (a.name != b.name || a.kind != b.kind || a.lower != b.lower || a.upper != b.upper)
            return false;
    }
    return true;
}

OptionSpace parse_space(std::string_view spec_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(spec_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("space document is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("options") || !doc["options"].is_array())
        throw FormatError("space document must be an object with an \"options\" array");

    std::vector<OptionSpec> specs;
    for (const auto& entry : doc["options"]) {
        if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string())
            throw FormatError("every option needs a string \"name\"");
        OptionSpec spec;
        spec.name = entry["name"].get<std::string>();
        std::string kind = entry.value("kind", std::string("integer"));
        if (kind == "binary") {
            spec.kind = OptionKind::binary;
            spec.lower = 0;
            spec.upper = 1;
        } else if (kind == "integer") {
            spec.kind = OptionKind::integer;
        } else {
            throw FormatError(fmt::format("option '{}' has unknown kind '{}'", spec.name, kind));
        }
        auto read_bound = [&](const char* key, std::int64_t& out) {
            if (!entry.contains(key)) {
                if (spec.kind == OptionKind::binary)
                    return;
                throw FormatError(fmt::format("integer option '{}' is missing \"{}\"", spec.name, key));
            }
            if (!entry[key].is_number_integer())
                throw FormatError(fmt::format("option '{}' field \"{}\" must be an integer", spec.name, key));
            out = entry[key].get<std::int64_t>();
        };
        read_bound("lower", spec.lower);
        read_bound("upper", spec.upper);
        specs.push_back(std::move(spec));
    }
    return OptionSpace(std::move(specs));
}

OptionSpace load_space(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError(fmt::format("cannot open space file '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_space(buffer.str());
}

std::string space_to_json(const OptionSpace& space)
{
    nlohmann::json options = nlohmann::json::array();
    for (const auto& o : space.options())
        options.push_back({{"name", o.name},
                           {"kind", o.kind == OptionKind::binary ? "binary" : "integer"},
                           {"lower", o.lower},
                           {"upper", o.upper}});
    return nlohmann::json{{"options", options}}.dump(2);
}

Configuration random_config(const OptionSpace& space, Rng& rng)
{
    Configuration c;
    c.values.reserve(space.size());
    for (const auto& o : space.options())
        c.values.push_back(rng.uniform_int(o.lower, o.upper));
    return c;
}

Neighborhood neighbors(const OptionSpace& space, const Configuration& config, std::size_t radius, Rng& rng,
                       std::size_t count)
{
    space.validate(config);
    if (radius == 0)
        throw SpaceError("neighbourhood radius must be at least 1");

    Neighborhood out;
    out.clamped = radius > space.size();
    out.radius = std::min(radius, space.size());

    std::vector<std::size_t> mutable_positions;
    for (std::size_t i = 0; i < space.size(); ++i)
        if (space[i].cardinality() > 1)
            mutable_positions.push_back(i);
    const std::size_t max_distance = std::min(out.radius, mutable_positions.size());

    out.configs.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Configuration neighbor = config;
        if (max_distance > 0) {
            auto distance = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_distance)));
            // partial Fisher-Yates over the mutable positions
            auto positions = mutable_positions;
            for (std::size_t j = 0; j < distance; ++j) {
                std::size_t pick = j + rng.index(positions.size() - j);
                std::swap(positions[j], positions[pick]);
                const auto& o = space[positions[j]];
                auto& value = neighbor.values[positions[j]];
                auto drawn = rng.uniform_int(o.lower, o.upper - 1);
                value = drawn >= value ? drawn + 1 : drawn;
            }
        }
        out.configs.push_back(std::move(neighbor));
    }
    return out;
}

std::size_t hamming_distance(const Configuration& a, const Configuration& b)
{
    std::size_t d = 0;
    for (std::size_t i = 0; i < std::min(a.values.size(), b.values.size()); ++i)
        d += a.values[i] != b.values[i] ? 1 : 0;
    return d + (std::max(a.values.size(), b.values.size()) - std::min(a.values.size(), b.values.size()));
}

} // namespace mmotune
