#pragma once

#include <cstdint>
#include <vector>

namespace hmsched {

/// Unscrambled Sobol sequence in Gray-code order with Joe-Kuo direction
/// numbers (new-joe-kuo-6.21201). Index 0 is the origin; index 1 is the
/// all-0.5 point.
class SobolSequence {
public:
    static constexpr int kMaxDimension = 64;
    static constexpr int kBits = 32;

    explicit SobolSequence(int dimension);

    [[nodiscard]] int dimension() const { return dimension_; }

    /// Point at `index` (0-based, direct Gray-code evaluation).
    [[nodiscard]] std::vector<double> point(std::uint64_t index) const;
    /// `count` consecutive points starting at `first`.
    [[nodiscard]] std::vector<std::vector<double>> points(std::uint64_t first, std::size_t count) const;

private:
    int dimension_;
    std::vector<std::uint32_t> directions_;  // dimension_ x kBits
};

}  // namespace hmsched
