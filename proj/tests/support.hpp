#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "mmotune/config_space.hpp"

namespace testing {

inline mmotune::OptionSpace binary_space(std::size_t n)
{
    std::vector<mmotune::OptionSpec> opts;
    for (std::size_t i = 0; i < n; ++i)
        opts.push_back({fmt::format("o{}", i), mmotune::OptionKind::binary, 0, 1});
    return mmotune::OptionSpace(std::move(opts));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                fmt::format("mmotune-test-{}-{}-{}", ::getpid(), stamp, counter++);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

/// |observed - expected| within k binomial standard deviations.
inline bool within_sigma(double successes, double trials, double p, double k = 3.0)
{
    const double sd = std::sqrt(trials * p * (1.0 - p));
    return std::abs(successes - trials * p) <= k * sd;
}

} // namespace testing
