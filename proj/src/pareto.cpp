#include "hmsched/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hmsched/acquisition.hpp"
#include "hmsched/errors.hpp"

namespace hmsched {

bool dominates(const ObjectivePair& a, const ObjectivePair& b)
{
    return a.first <= b.first && a.second <= b.second && (a.first < b.first || a.second < b.second);
}

ParetoFront pareto_front(std::span<const ObjectivePair> points, std::span<const std::size_t> indices)
{
    if (points.size() != indices.size()) throw DomainError("pareto_front: size mismatch");
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& pa = points[a];
        const auto& pb = points[b];
        if (pa.first != pb.first) return pa.first < pb.first;
        if (pa.second != pb.second) return pa.second < pb.second;
        return indices[a] < indices[b];
    });
    ParetoFront front;
    double best_second = std::numeric_limits<double>::infinity();
    for (std::size_t k : order) {
        if (points[k].second < best_second) {
            front.members.push_back({points[k], indices[k]});
            best_second = points[k].second;
        }
    }
    return front;
}

ParetoFront pareto_front(std::span<const ObjectivePair> points)
{
    std::vector<std::size_t> indices(points.size());
    std::iota(indices.begin(), indices.end(), 0);
    return pareto_front(points, indices);
}

ParetoFront clip_to_reference(const ParetoFront& front, const ReferencePoint& ref)
{
    ParetoFront out;
    for (const auto& m : front.members) {
        if (m.value.first <= ref.first && m.value.second <= ref.second) out.members.push_back(m);
    }
    return out;
}

double hypervolume_2d(const ParetoFront& front, const ReferencePoint& ref)
{
    double volume = 0.0;
    const auto& m = front.members;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i].value.first > ref.first || m[i].value.second > ref.second) {
            throw DomainError("hypervolume_2d: front member does not dominate the reference point");
        }
        const double next_x = i + 1 < m.size() ? m[i + 1].value.first : ref.first;
        volume += (next_x - m[i].value.first) * (ref.second - m[i].value.second);
    }
    return volume;
}

double hypervolume_improvement(const ParetoFront& front, const ReferencePoint& ref, const ObjectivePair& p)
{
    const ParetoFront clipped = clip_to_reference(front, ref);
    if (p.first >= ref.first || p.second >= ref.second) return 0.0;
    // Strip i spans [a_i, a_{i+1}) x (-inf, b_i): a_0 = -inf, b_0 = ref.second.
    const auto& m = clipped.members;
    double gain = 0.0;
    for (std::size_t i = 0; i <= m.size(); ++i) {
        const double a_lo = i == 0 ? -std::numeric_limits<double>::infinity() : m[i - 1].value.first;
        const double a_hi = i < m.size() ? m[i].value.first : ref.first;
        const double b = i == 0 ? ref.second : m[i - 1].value.second;
        const double width = a_hi - std::max(p.first, a_lo);
        const double height = b - p.second;
        if (width > 0.0 && height > 0.0) gain += width * height;
    }
    return gain;
}

double ehvi(const Posterior& first, const Posterior& second, const ParetoFront& front, const ReferencePoint& ref)
{
    const ParetoFront clipped = clip_to_reference(front, ref);
    const auto& m = clipped.members;
    const double sx = std::sqrt(std::max(first.variance, 0.0));
    const double sy = std::sqrt(std::max(second.variance, 0.0));
    // With the strips above, HVI = sum_i (E(a_{i+1} - X)^+ - E(a_i - X)^+) * E(b_i - Y)^+.
    double total = 0.0;
    double prev = 0.0;  // E(a_0 - X)^+ with a_0 = -inf
    for (std::size_t i = 0; i <= m.size(); ++i) {
        const double a_hi = i < m.size() ? m[i].value.first : ref.first;
        const double b = i == 0 ? ref.second : m[i - 1].value.second;
        const double cur = lower_partial_moment(a_hi, first.mean, sx);
        const double dx = std::max(cur - prev, 0.0);
        total += dx * lower_partial_moment(b, second.mean, sy);
        prev = cur;
    }
    return std::max(total, 0.0);
}

}  // namespace hmsched
