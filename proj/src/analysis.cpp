#include "hmsched/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hmsched/errors.hpp"

namespace hmsched {

double ImportanceReport::weight(const std::string& name) const
{
    for (const auto& [n, w] : weights) {
        if (n == name) return w;
    }
    throw DomainError("no importance recorded for parameter '" + name + "'");
}

std::vector<std::string> ImportanceReport::ranking() const
{
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weights[a].second > weights[b].second; });
    std::vector<std::string> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back(weights[i].first);
    return out;
}

std::vector<double> raw_importance(const GpModel& model, const SearchSpace& space)
{
    const auto owner = space.encoded_owner();
    const auto& ls = model.kernel.length_scales;
    if (ls.size() != owner.size()) {
        throw DomainError("model has " + std::to_string(ls.size()) + " length-scales but the space encodes " +
                          std::to_string(owner.size()) + " dimensions");
    }
    std::vector<double> scores(space.params.size(), 0.0);
    for (std::size_t d = 0; d < ls.size(); ++d) {
        if (!(ls[d] > 0.0)) throw DomainError("length-scales must be positive");
        scores[owner[d]] += 1.0 / ls[d];
    }
    return scores;
}

ImportanceReport sensitivity_importance(const GpModel& model, const SearchSpace& space, std::string objective,
                                        std::string study_id)
{
    if (model.degenerate) {
        throw DomainError("GP for '" + objective +
                          "' was fitted to constant targets; its length-scales carry no sensitivity information. "
                          "Run more trials.");
    }
    const auto scores = raw_importance(model, space);
    const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    ImportanceReport r;
    r.objective = std::move(objective);
    r.kernel = model.kernel.family;
    r.study_id = std::move(study_id);
    for (std::size_t i = 0; i < scores.size(); ++i) r.weights.emplace_back(space.params[i].name, scores[i] / total);
    return r;
}

std::pair<ImportanceReport, ImportanceReport> moo_importance(const Study& study, const SearchSpace& space,
                                                             const std::string& study_id)
{
    const auto e = study.final_models.find("energy");
    const auto t = study.final_models.find("time");
    if (e == study.final_models.end() || t == study.final_models.end()) {
        throw DomainError("study has no fitted energy/time models; run a multi-objective study with BO trials");
    }
    return {sensitivity_importance(e->second, space, "Energy", study_id),
            sensitivity_importance(t->second, space, "Time", study_id)};
}

nlohmann::ordered_json importance_to_json(const ImportanceReport& report)
{
    nlohmann::ordered_json w = nlohmann::ordered_json::object();
    for (const auto& [name, value] : report.weights) w[name] = value;
    return {{"objective", report.objective},
            {"kernel", to_string(report.kernel)},
            {"study_id", report.study_id},
            {"weights", w},
            {"ranking", report.ranking()}};
}

double percentile(std::vector<double> values, double q)
{
    if (values.empty()) throw DomainError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<std::size_t> pareto_plot_indices(const Study& study)
{
    std::vector<std::size_t> valid;
    std::vector<double> first, second;
    for (const auto& t : study.trials) {
        if (t.penalized || t.loss == study.objective.penalty) continue;
        valid.push_back(t.index);
        first.push_back(t.objectives.first);
        second.push_back(t.objectives.second);
    }
    if (valid.empty()) return valid;
    const double c1 = percentile(first, 99.0);
    const double c2 = percentile(second, 99.0);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < valid.size(); ++i) {
        if (first[i] <= c1 && second[i] <= c2) kept.push_back(valid[i]);
    }
    return kept;
}

}  // namespace hmsched
