#ifndef SYNCNET_RNG_HPP
#define SYNCNET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace syncnet {

// Independent random streams inside one trial. Every stream is a separate
// mt19937_64 seeded from (master_seed, trial, purpose, index), so the draws
// for one edge never depend on how many draws another edge consumed.
enum class Stream : std::uint32_t {
    world = 1,
    training = 2,
    sync_set = 3,
    kf_exchange = 4,
};

/// Reproducible generator: mt19937_64 seeded through std::seed_seq.
///
/// Uniform doubles use the top 53 bits of one engine output. Gaussian samples
/// use the Box-Muller transform, consuming two uniforms per pair and caching
/// the second value. Both are written out here (instead of using the
/// <random> distributions) because the standard leaves those algorithms
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    Rng(std::uint64_t master_seed, std::uint64_t trial, Stream stream, std::uint64_t index = 0);

    /// Uniform on [0, 1).
    double uniform01();
    /// Uniform on [lo, hi]; returns lo when lo == hi.
    double uniform(double lo, double hi);
    double gaussian(double mean, double stddev);

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

inline Rng::Rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    engine_.seed(seq);
}

inline Rng::Rng(std::uint64_t master_seed, std::uint64_t trial, Stream stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(trial),
                      static_cast<std::uint32_t>(trial >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    engine_.seed(seq);
}

inline double Rng::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

inline double Rng::uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return lo + (hi - lo) * uniform01();
}

inline double Rng::gaussian(double mean, double stddev) {
    if (has_cached_) {
        has_cached_ = false;
        return mean + stddev * cached_;
    }
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return mean + stddev * radius * std::cos(angle);
}

}  // namespace syncnet

#endif  // SYNCNET_RNG_HPP
