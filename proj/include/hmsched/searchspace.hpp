#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hmsched/rng.hpp"

namespace hmsched {

using ParamValue = std::variant<double, std::int64_t, std::string>;

enum class ParamKind { Continuous, Integer, Categorical };

/// Parameter is active only while `param` (a categorical) takes one of `values`.
struct Conditional {
    std::string param;
    std::vector<std::string> values;

    bool operator==(const Conditional&) const = default;
};

struct ParamDef {
    std::string name;
    ParamKind kind = ParamKind::Continuous;
    double lo = 0.0;  // continuous and integer bounds, inclusive
    double hi = 1.0;
    std::vector<std::string> options;  // categorical only
    std::optional<Conditional> conditional_on;

    static ParamDef continuous(std::string name, double lo, double hi);
    static ParamDef integer(std::string name, std::int64_t lo, std::int64_t hi);
    static ParamDef categorical(std::string name, std::vector<std::string> options);

    /// Number of encoded coordinates (one-hot width for categoricals).
    [[nodiscard]] std::size_t width() const { return kind == ParamKind::Categorical ? options.size() : 1; }

    bool operator==(const ParamDef&) const = default;
};

/// Assignment of every active parameter. Suppressed conditionals are absent.
struct DesignPoint {
    std::map<std::string, ParamValue> values;

    [[nodiscard]] bool has(const std::string& name) const { return values.contains(name); }
    [[nodiscard]] double real(const std::string& name) const;
    [[nodiscard]] std::int64_t integer(const std::string& name) const;
    [[nodiscard]] const std::string& category(const std::string& name) const;

    bool operator==(const DesignPoint&) const = default;
};

struct SearchSpace {
    std::vector<ParamDef> params;
    /// Integer parameters whose sum must be at least one (the core counts).
    std::vector<std::string> at_least_one;

    [[nodiscard]] std::size_t dimension() const;
    [[nodiscard]] const ParamDef* find(const std::string& name) const;
    /// Name of each encoded coordinate; one-hot coordinates are `param=option`.
    [[nodiscard]] std::vector<std::string> encoded_names() const;
    /// Index of the owning parameter for each encoded coordinate.
    [[nodiscard]] std::vector<std::size_t> encoded_owner() const;
    /// Structural problems (bad bounds, dangling conditionals, ...).
    [[nodiscard]] std::vector<std::string> definition_violations() const;
};

/// Frequencies and counts per core class, scheduler and conditional quantum.
SearchSpace default_space();

/// Every way `point` breaks `space`; empty when valid.
std::vector<std::string> validate(const DesignPoint& point, const SearchSpace& space);

/// Unit-cube encoding. Throws ValidationError for an invalid point.
std::vector<double> encode(const DesignPoint& point, const SearchSpace& space);

struct DecodeResult {
    DesignPoint point;
    bool repaired = false;  // zero-core repair applied
};

/// Inverse of `encode` onto the parameter lattice. Throws DomainError on a
/// dimension mismatch.
DesignPoint decode(std::span<const double> vec, const SearchSpace& space);
DecodeResult decode_with_info(std::span<const double> vec, const SearchSpace& space);

/// First `n` Sobol points (starting at index 1), decoded. The sequence is
/// unscrambled, so `seed` does not change the output.
std::vector<DesignPoint> sobol_sample(std::size_t n, const SearchSpace& space, std::uint64_t seed = 0);

/// Independent uniform draw per parameter, redrawn while the at-least-one
/// constraint fails.
DesignPoint random_sample(const SearchSpace& space, Rng& rng);

std::string to_string(const ParamValue& v);

}  // namespace hmsched
