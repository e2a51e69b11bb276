#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hmsched/gp.hpp"

namespace hmsched {

/// Two minimized objectives, e.g. (ln E, ln T).
struct ObjectivePair {
    double first = 0.0;
    double second = 0.0;

    bool operator==(const ObjectivePair&) const = default;
};

using ReferencePoint = ObjectivePair;

/// a dominates b: no worse in both objectives and strictly better in one.
bool dominates(const ObjectivePair& a, const ObjectivePair& b);

struct FrontMember {
    ObjectivePair value;
    std::size_t index = 0;  // position in the input (trial index)

    bool operator==(const FrontMember&) const = default;
};

/// Non-dominated set sorted by `first` ascending (so `second` strictly descending).
struct ParetoFront {
    std::vector<FrontMember> members;

    [[nodiscard]] std::size_t size() const { return members.size(); }
    [[nodiscard]] bool empty() const { return members.empty(); }
};

/// Non-dominated subset; equal points collapse to the lowest index.
ParetoFront pareto_front(std::span<const ObjectivePair> points);
/// Same, with explicit indices for each point.
ParetoFront pareto_front(std::span<const ObjectivePair> points, std::span<const std::size_t> indices);

/// Members that weakly dominate `ref` (no coordinate above it).
ParetoFront clip_to_reference(const ParetoFront& front, const ReferencePoint& ref);

/// Area dominated by `front` and bounded by `ref`. Throws DomainError when a
/// member lies beyond `ref` in either objective.
double hypervolume_2d(const ParetoFront& front, const ReferencePoint& ref);

/// HV(front + p) - HV(front); p beyond `ref` contributes nothing.
double hypervolume_improvement(const ParetoFront& front, const ReferencePoint& ref, const ObjectivePair& p);

/// Exact expected hypervolume improvement of a point whose objectives are
/// independent Gaussians, by strip decomposition of the non-dominated region.
double ehvi(const Posterior& first, const Posterior& second, const ParetoFront& front, const ReferencePoint& ref);

}  // namespace hmsched
