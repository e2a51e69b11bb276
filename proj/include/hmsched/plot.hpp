#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "hmsched/analysis.hpp"

namespace hmsched {

enum class PlotKind { History, Pareto, Importance, Contour };
std::string to_string(PlotKind kind);

/// Tabular data behind one figure. Columns per kind:
///   history     trial, loss, best
///   pareto      ln_energy, ln_latency, on_front
///   importance  one column per objective; `row_labels` names the parameters
///   contour     x, y, mean on a square grid
struct PlotSeries {
    PlotKind kind = PlotKind::History;
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> columns;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::vector<std::string> violations() const;
};

PlotSeries history_series(const Study& study);
/// Filtered scatter of (ln E, ln T) with the front of the kept points marked.
PlotSeries pareto_series(const Study& study);
/// Grouped bars: one column per report, rows in parameter order of the first.
PlotSeries importance_series(const std::vector<ImportanceReport>& reports);
/// GP mean over two continuous or integer parameters, the others fixed at
/// `anchor`'s encoding.
PlotSeries contour_series(const GpModel& model, const SearchSpace& space, const DesignPoint& anchor,
                          const std::string& x_param, const std::string& y_param, std::size_t grid = 50);

struct PlotFiles {
    std::filesystem::path svg;
    std::filesystem::path csv;
};

/// Writes `path` (SVG) and the same path with a .csv extension. Throws
/// ValidationError for an invalid series and std::runtime_error on I/O failure.
PlotFiles emit_plot(const PlotSeries& series, const std::filesystem::path& path);

/// Reads a sidecar back; title and axis labels are not stored.
PlotSeries read_plot_csv(const std::filesystem::path& path, PlotKind kind);

}  // namespace hmsched
