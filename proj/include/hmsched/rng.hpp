#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hmsched {

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. All conversions to floating point and integer ranges are done
/// here rather than through <random> distributions, whose algorithms are
/// implementation-defined, so streams are bit-identical across toolchains.
///
/// Independent streams are derived with `split(tag)`: the child seed is
/// SplitMix64(parent_seed ^ FNV-1a(tag)). Adding a new consumer with its own
/// tag never shifts the draws of an existing one.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    [[nodiscard]] Rng split(std::string_view tag) const;
    [[nodiscard]] Rng split(std::uint64_t index) const;
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform on the closed integer range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    double exponential(double rate);
    /// Standard normal via Box-Muller (the spare value is cached).
    double normal();

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace hmsched
