#include "hmsched/plot.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hmsched/errors.hpp"
#include "hmsched/pareto.hpp"

namespace hmsched {

std::string to_string(PlotKind kind)
{
    switch (kind) {
    case PlotKind::History: return "history";
    case PlotKind::Pareto: return "pareto";
    case PlotKind::Importance: return "importance";
    case PlotKind::Contour: return "contour";
    }
    return "unknown";
}

std::vector<std::string> PlotSeries::violations() const
{
    std::vector<std::string> out;
    if (rows.empty()) out.emplace_back("series has no data");
    if (columns.empty()) out.emplace_back("series has no columns");
    if (kind == PlotKind::Importance && row_labels.size() != rows.size()) {
        out.emplace_back("importance series needs one label per row");
    }
    const std::size_t want = kind == PlotKind::Importance ? 0 : 3;
    if (want != 0 && columns.size() != want) {
        out.emplace_back(to_string(kind) + " series needs " + std::to_string(want) + " columns");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != columns.size()) {
            out.push_back("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) + " values, expected " +
                          std::to_string(columns.size()));
            continue;
        }
        for (double v : rows[i]) {
            if (!std::isfinite(v)) {
                out.push_back("row " + std::to_string(i) + " has a non-finite value");
                break;
            }
        }
    }
    return out;
}

PlotSeries history_series(const Study& study)
{
    PlotSeries s;
    s.kind = PlotKind::History;
    s.title = "Optimization history (" + study.method + ")";
    s.x_label = "trial";
    s.y_label = "loss";
    s.columns = {"trial", "loss", "best"};
    for (std::size_t i = 0; i < study.trials.size(); ++i) {
        s.rows.push_back({static_cast<double>(i), study.trials[i].loss, study.incumbent_trace[i]});
    }
    return s;
}

PlotSeries pareto_series(const Study& study)
{
    PlotSeries s;
    s.kind = PlotKind::Pareto;
    s.title = "Energy / latency trade-off";
    s.x_label = "ln E [J]";
    s.y_label = "ln T [s]";
    s.columns = {"ln_energy", "ln_latency", "on_front"};
    const auto kept = pareto_plot_indices(study);
    std::vector<ObjectivePair> pts;
    for (auto i : kept) pts.push_back(study.trials[i].objectives);
    const ParetoFront front = pareto_front(pts);
    std::vector<bool> on(pts.size(), false);
    for (const auto& m : front.members) on[m.index] = true;
    for (std::size_t i = 0; i < pts.size(); ++i) s.rows.push_back({pts[i].first, pts[i].second, on[i] ? 1.0 : 0.0});
    return s;
}

PlotSeries importance_series(const std::vector<ImportanceReport>& reports)
{
    PlotSeries s;
    s.kind = PlotKind::Importance;
    s.title = "Hyperparameter importance";
    s.x_label = "parameter";
    s.y_label = "importance";
    if (reports.empty()) return s;
    for (const auto& r : reports) s.columns.push_back(r.objective);
    for (const auto& [name, w] : reports.front().weights) {
        s.row_labels.push_back(name);
        std::vector<double> row;
        for (const auto& r : reports) row.push_back(r.weight(name));
        s.rows.push_back(std::move(row));
    }
    return s;
}

PlotSeries contour_series(const GpModel& model, const SearchSpace& space, const DesignPoint& anchor,
                          const std::string& x_param, const std::string& y_param, std::size_t grid)
{
    if (grid < 2) throw DomainError("contour grid needs at least 2 points per axis");
    const auto names = space.encoded_names();
    auto column_of = [&](const std::string& p) {
        const ParamDef* def = space.find(p);
        if (def == nullptr || def->kind == ParamKind::Categorical) {
            throw DomainError("contour axis '" + p + "' must be a continuous or integer parameter");
        }
        return static_cast<std::size_t>(std::find(names.begin(), names.end(), p) - names.begin());
    };
    const std::size_t cx = column_of(x_param);
    const std::size_t cy = column_of(y_param);
    if (cx == cy) throw DomainError("contour axes must differ");
    const ParamDef& dx = *space.find(x_param);
    const ParamDef& dy = *space.find(y_param);

    const auto base = encode(anchor, space);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(grid * grid), static_cast<Eigen::Index>(base.size()));
    for (std::size_t j = 0; j < grid; ++j) {
        for (std::size_t i = 0; i < grid; ++i) {
            const auto r = static_cast<Eigen::Index>(j * grid + i);
            for (std::size_t k = 0; k < base.size(); ++k) x(r, static_cast<Eigen::Index>(k)) = base[k];
            x(r, static_cast<Eigen::Index>(cx)) = static_cast<double>(i) / static_cast<double>(grid - 1);
            x(r, static_cast<Eigen::Index>(cy)) = static_cast<double>(j) / static_cast<double>(grid - 1);
        }
    }
    const auto post = predict(model, x);

    PlotSeries s;
    s.kind = PlotKind::Contour;
    s.title = "GP posterior mean";
    s.x_label = x_param;
    s.y_label = y_param;
    s.columns = {"x", "y", "mean"};
    for (std::size_t j = 0; j < grid; ++j) {
        for (std::size_t i = 0; i < grid; ++i) {
            const double u = static_cast<double>(i) / static_cast<double>(grid - 1);
            const double v = static_cast<double>(j) / static_cast<double>(grid - 1);
            s.rows.push_back({dx.lo + u * (dx.hi - dx.lo), dy.lo + v * (dy.hi - dy.lo), post[j * grid + i].mean});
        }
    }
    return s;
}

namespace {

std::string shortest(double v)
{
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string fmt(const char* spec, double v)
{
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), spec, v);
    return buf.data();
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 72, kRight = 24, kTop = 40, kBottom = 56;
const std::array<const char*, 6> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

struct Range {
    double lo, hi;
};

Range padded(double lo, double hi)
{
    if (!(hi > lo)) {
        const double w = std::max(std::abs(lo) * 0.05, 0.5);
        return {lo - w, hi + w};
    }
    const double pad = (hi - lo) * 0.05;
    return {lo - pad, hi + pad};
}

class Canvas {
public:
    Canvas(const PlotSeries& s, Range xr, Range yr) : xr_(xr), yr_(yr)
    {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
        out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out_ << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                "font-size=\"15\">"
             << escape(s.title) << "</text>\n";
        out_ << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
             << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(s.x_label)
             << "</text>\n";
        out_ << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
             << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
             << (kTop + kHeight - kBottom) / 2 << ")\">" << escape(s.y_label) << "</text>\n";
    }

    double x(double v) const { return kLeft + (v - xr_.lo) / (xr_.hi - xr_.lo) * (kWidth - kLeft - kRight); }
    double y(double v) const { return kHeight - kBottom - (v - yr_.lo) / (yr_.hi - yr_.lo) * (kHeight - kTop - kBottom); }

    void axes(bool x_ticks = true)
    {
        const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
        out_ << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
        out_ << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\"/>\n";
        out_ << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\"/>\n";
        out_ << "</g>\n<g font-family=\"sans-serif\" font-size=\"10\">\n";
        for (int k = 0; k <= 4; ++k) {
            const double fy = yr_.lo + (yr_.hi - yr_.lo) * k / 4.0;
            out_ << "<text x=\"" << x0 - 4 << "\" y=\"" << fmt("%.2f", y(fy) + 3) << "\" text-anchor=\"end\">"
                 << fmt("%.4g", fy) << "</text>\n";
            if (!x_ticks) continue;
            const double fx = xr_.lo + (xr_.hi - xr_.lo) * k / 4.0;
            out_ << "<text x=\"" << fmt("%.2f", x(fx)) << "\" y=\"" << y0 + 14 << "\" text-anchor=\"middle\">"
                 << fmt("%.4g", fx) << "</text>\n";
        }
        out_ << "</g>\n";
    }

    void circle(double px, double py, double r, const char* fill, const char* cls)
    {
        out_ << "<circle class=\"" << cls << "\" cx=\"" << fmt("%.2f", x(px)) << "\" cy=\"" << fmt("%.2f", y(py))
             << "\" r=\"" << r << "\" fill=\"" << fill << "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke, const char* cls)
    {
        out_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            out_ << (i ? " " : "") << fmt("%.2f", x(pts[i].first)) << ',' << fmt("%.2f", y(pts[i].second));
        }
        out_ << "\"/>\n";
    }

    std::ostringstream& raw() { return out_; }

    std::string finish()
    {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    Range xr_, yr_;
    std::ostringstream out_;
};

Range column_range(const PlotSeries& s, std::size_t c)
{
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : s.rows) {
        lo = std::min(lo, r[c]);
        hi = std::max(hi, r[c]);
    }
    return {lo, hi};
}

std::string render_history(const PlotSeries& s)
{
    // Penalized trials would flatten the plot; cap the axis and pin them to the top.
    std::vector<double> losses;
    for (const auto& r : s.rows) losses.push_back(r[1]);
    const Range best = column_range(s, 2);
    const double lo = std::min(best.lo, column_range(s, 1).lo);
    const double cap = std::max(percentile(losses, 90.0), lo);
    const Range yr = padded(lo, cap);
    Canvas c(s, padded(column_range(s, 0).lo, column_range(s, 0).hi), yr);
    c.axes();
    std::vector<std::pair<double, double>> line;
    for (const auto& r : s.rows) {
        c.circle(r[0], std::min(r[1], yr.hi), 3, "#1f77b4", "trial");
        line.emplace_back(r[0], std::min(r[2], yr.hi));
    }
    c.polyline(line, "#d62728", "running-min");
    return c.finish();
}

std::string render_pareto(const PlotSeries& s)
{
    const Range xr = column_range(s, 0), yr = column_range(s, 1);
    Canvas c(s, padded(xr.lo, xr.hi), padded(yr.lo, yr.hi));
    c.axes();
    std::vector<std::pair<double, double>> front;
    for (const auto& r : s.rows) {
        if (r[2] != 0.0) {
            front.emplace_back(r[0], r[1]);
        } else {
            c.circle(r[0], r[1], 3, "#9e9e9e", "dominated");
        }
    }
    std::sort(front.begin(), front.end());
    std::vector<std::pair<double, double>> stair;
    for (std::size_t i = 0; i < front.size(); ++i) {
        if (i > 0) stair.emplace_back(front[i].first, front[i - 1].second);
        stair.push_back(front[i]);
    }
    if (stair.size() > 1) c.polyline(stair, "#d62728", "front-line");
    for (const auto& [fx, fy] : front) c.circle(fx, fy, 4.5, "#d62728", "front");
    return c.finish();
}

std::string render_importance(const PlotSeries& s)
{
    double hi = 0.0;
    for (const auto& r : s.rows) {
        for (double v : r) hi = std::max(hi, v);
    }
    const auto n = static_cast<double>(s.rows.size());
    Canvas c(s, {0.0, n}, {0.0, hi > 0.0 ? hi * 1.1 : 1.0});
    c.axes(false);
    auto& out = c.raw();
    const double groups = static_cast<double>(s.columns.size());
    const double slot = (c.x(1.0) - c.x(0.0)) * 0.8 / groups;
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const double left = c.x(static_cast<double>(i)) + (c.x(1.0) - c.x(0.0)) * 0.1;
        for (std::size_t g = 0; g < s.columns.size(); ++g) {
            const double top = c.y(s.rows[i][g]);
            out << "<rect class=\"bar\" x=\"" << fmt("%.2f", left + slot * static_cast<double>(g)) << "\" y=\""
                << fmt("%.2f", top) << "\" width=\"" << fmt("%.2f", slot) << "\" height=\""
                << fmt("%.2f", c.y(0.0) - top) << "\" fill=\"" << kPalette[g % kPalette.size()] << "\"/>\n";
        }
        const double mid = c.x(static_cast<double>(i) + 0.5);
        out << "<text x=\"" << fmt("%.2f", mid) << "\" y=\"" << kHeight - kBottom + 12
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"9\" transform=\"rotate(-30 "
            << fmt("%.2f", mid) << ' ' << kHeight - kBottom + 12 << ")\">" << escape(s.row_labels[i]) << "</text>\n";
    }
    for (std::size_t g = 0; g < s.columns.size(); ++g) {
        const double ly = kTop + 4 + 14.0 * static_cast<double>(g);
        out << "<rect x=\"" << kWidth - kRight - 110 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\""
            << kPalette[g % kPalette.size()] << "\"/>\n";
        out << "<text x=\"" << kWidth - kRight - 95 << "\" y=\"" << ly + 9
            << "\" font-family=\"sans-serif\" font-size=\"10\">" << escape(s.columns[g]) << "</text>\n";
    }
    return c.finish();
}

std::string level_color(double t)
{
    // Viridis anchors, sampled at 12 discrete levels.
    static const std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                             {94, 201, 98}, {253, 231, 37}}};
    t = std::floor(std::clamp(t, 0.0, 1.0) * 11.999) / 11.0;
    const double pos = t * 4.0;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(pos), 3);
    const double f = pos - static_cast<double>(k);
    std::array<char, 8> buf{};
    const auto ch = [&](int i) {
        return static_cast<int>(std::lround(stops[k][i] + f * (stops[k + 1][i] - stops[k][i])));
    };
    std::snprintf(buf.data(), buf.size(), "#%02x%02x%02x", ch(0), ch(1), ch(2));
    return buf.data();
}

std::string render_contour(const PlotSeries& s)
{
    const auto grid = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(s.rows.size()))));
    if (grid * grid != s.rows.size() || grid < 2) throw ValidationError({"contour series must be a square grid"});
    const Range xr = column_range(s, 0), yr = column_range(s, 1), zr = column_range(s, 2);
    Canvas c(s, xr, yr);
    auto& out = c.raw();
    const double dx = (xr.hi - xr.lo) / static_cast<double>(grid - 1);
    const double dy = (yr.hi - yr.lo) / static_cast<double>(grid - 1);
    const double span = zr.hi > zr.lo ? zr.hi - zr.lo : 1.0;
    out << "<g class=\"cells\" shape-rendering=\"crispEdges\">\n";
    for (const auto& r : s.rows) {
        const double px = std::max(c.x(r[0] - dx / 2), c.x(xr.lo));
        const double py = std::max(c.y(r[1] + dy / 2), c.y(yr.hi));
        const double pw = std::min(c.x(r[0] + dx / 2), c.x(xr.hi)) - px;
        const double ph = std::min(c.y(r[1] - dy / 2), c.y(yr.lo)) - py;
        out << "<rect x=\"" << fmt("%.2f", px) << "\" y=\"" << fmt("%.2f", py) << "\" width=\"" << fmt("%.2f", pw)
            << "\" height=\"" << fmt("%.2f", ph) << "\" fill=\"" << level_color((r[2] - zr.lo) / span) << "\"/>\n";
    }
    out << "</g>\n";
    c.axes();
    out << "<text x=\"" << kWidth - kRight << "\" y=\"" << kTop - 6
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">mean " << fmt("%.4g", zr.lo) << " .. "
        << fmt("%.4g", zr.hi) << "</text>\n";
    return c.finish();
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

PlotFiles emit_plot(const PlotSeries& series, const std::filesystem::path& path)
{
    if (auto v = series.violations(); !v.empty()) throw ValidationError(std::move(v));
    std::string svg;
    switch (series.kind) {
    case PlotKind::History: svg = render_history(series); break;
    case PlotKind::Pareto: svg = render_pareto(series); break;
    case PlotKind::Importance: svg = render_importance(series); break;
    case PlotKind::Contour: svg = render_contour(series); break;
    }
    PlotFiles files{path, path};
    files.csv.replace_extension(".csv");

    std::ofstream s(files.svg, std::ios::binary);
    if (!s) throw std::runtime_error("cannot write " + files.svg.string());
    s << svg;
    if (!s.flush()) throw std::runtime_error("write failed: " + files.svg.string());

    std::ofstream c(files.csv, std::ios::binary);
    if (!c) throw std::runtime_error("cannot write " + files.csv.string());
    const bool labelled = series.kind == PlotKind::Importance;
    if (labelled) c << "parameter,";
    for (std::size_t i = 0; i < series.columns.size(); ++i) c << (i ? "," : "") << series.columns[i];
    c << '\n';
    for (std::size_t r = 0; r < series.rows.size(); ++r) {
        if (labelled) c << series.row_labels[r] << ',';
        for (std::size_t i = 0; i < series.rows[r].size(); ++i) c << (i ? "," : "") << shortest(series.rows[r][i]);
        c << '\n';
    }
    if (!c.flush()) throw std::runtime_error("write failed: " + files.csv.string());
    return files;
}

PlotSeries read_plot_csv(const std::filesystem::path& path, PlotKind kind)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    PlotSeries s;
    s.kind = kind;
    const bool labelled = kind == PlotKind::Importance;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    auto header = split_csv(line);
    if (labelled) {
        if (header.empty() || header.front() != "parameter") {
            throw std::runtime_error(path.string() + ": importance CSV must start with a parameter column");
        }
        header.erase(header.begin());
    }
    s.columns = header;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (labelled) {
            s.row_labels.push_back(cells.front());
            cells.erase(cells.begin());
        }
        if (cells.size() != s.columns.size()) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": wrong number of fields");
        }
        std::vector<double> row;
        for (const auto& cell : cells) {
            double v = 0.0;
            auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
            row.push_back(v);
        }
        s.rows.push_back(std::move(row));
    }
    return s;
}

}  // namespace hmsched
