#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmsched/gp.hpp"
#include "hmsched/searchspace.hpp"
#include "hmsched/study.hpp"

namespace hmsched {

/// Share of sensitivity per search-space parameter, in space order.
struct ImportanceReport {
    std::string objective;  // "loss", "Energy", "Time"
    KernelFamily kernel = KernelFamily::Matern52;
    std::string study_id;
    std::vector<std::pair<std::string, double>> weights;

    /// Weight of `name`; throws DomainError if absent.
    [[nodiscard]] double weight(const std::string& name) const;
    /// Parameter names sorted by decreasing weight (ties keep space order).
    [[nodiscard]] std::vector<std::string> ranking() const;
};

/// Unnormalized 1/l score per parameter; one-hot blocks are summed.
std::vector<double> raw_importance(const GpModel& model, const SearchSpace& space);

/// Scores proportional to inverse ARD length-scale, normalized to sum 1.
/// Throws DomainError for a degenerate model (constant targets).
ImportanceReport sensitivity_importance(const GpModel& model, const SearchSpace& space, std::string objective = "loss",
                                        std::string study_id = {});

/// Energy and Time reports of a multi-objective study's final models.
std::pair<ImportanceReport, ImportanceReport> moo_importance(const Study& study, const SearchSpace& space,
                                                             const std::string& study_id = {});

nlohmann::ordered_json importance_to_json(const ImportanceReport& report);

/// Trials kept in a Pareto scatter: non-penalized, loss below the penalty
/// sentinel and both objectives at or under their 99th percentile.
std::vector<std::size_t> pareto_plot_indices(const Study& study);

/// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

}  // namespace hmsched
