#pragma once

#include "ddfc/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ddfc {

/// Mixes a base seed with a list of stream keys (splitmix64 finalizer chain).
/// Used to give every repeat, instant, particle and grid node its own stream.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

/// Seedable generator handle. The contract is N(0,1) / U[0,1) draws that are
/// reproducible for a fixed seed on a given standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    /// Uniform index on {0, ..., n-1}.
    std::size_t index(std::size_t n)
    {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    void fill_normal(VectorRef out)
    {
        for (Index k = 0; k < out.size(); ++k) {
            out[k] = normal_(engine_);
        }
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Stream tags keep derived seeds for different purposes apart.
enum class Stream : std::uint64_t {
    initial_truth = 1,
    initial_cloud = 2,
    truth_noise = 3,
    observation_noise = 4,
    optimizer = 5,
    filter_predict = 6,
    filter_resample = 7,
    grid_solver = 8,
    full_solution_paths = 9,
    repeat = 10,
};

inline std::uint64_t stream_seed(std::uint64_t base, Stream tag, std::uint64_t a = 0, std::uint64_t b = 0)
{
    return derive_seed(base, {static_cast<std::uint64_t>(tag), a, b});
}

} // namespace ddfc
