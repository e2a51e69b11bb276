#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hmsched/analysis.hpp"
#include "hmsched/errors.hpp"
#include "hmsched/plot.hpp"
#include "hmsched/rng.hpp"

using namespace hmsched;
namespace fs = std::filesystem;

namespace {

SearchSpace box(std::size_t d)
{
    SearchSpace s;
    for (std::size_t i = 0; i < d; ++i) s.params.push_back(ParamDef::continuous("x" + std::to_string(i), 0.0, 1.0));
    return s;
}

GpModel model_with(const std::vector<double>& ls, std::uint64_t seed = 1)
{
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(ls.size());
    Eigen::MatrixXd x(6, d);
    Eigen::VectorXd y(6);
    for (Eigen::Index i = 0; i < 6; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) x(i, k) = rng.uniform();
        y[i] = rng.normal();
    }
    return condition_gp(KernelSpec{KernelFamily::Matern52, ls, 1.0, 1e-4}, x, y);
}

std::size_t count(const std::string& text, const std::string& needle)
{
    std::size_t n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / "hmsched_analysis_test";
    fs::create_directories(dir);
    return dir / name;
}

Evaluation toy(const DesignPoint& p)
{
    const double a = p.real("x0"), b = p.real("x1");
    return {std::exp(a * a + 0.5 * b), std::exp((b - 0.4) * (b - 0.4) + 0.2 * a)};
}

StudyOptions quick(std::size_t budget, std::uint64_t seed, ObjectiveMode mode = ObjectiveMode::Scalarized)
{
    StudyOptions o;
    o.budget = budget;
    o.n_init = 6;
    o.seed = seed;
    o.objective.mode = mode;
    o.candidates.sobol = 128;
    o.candidates.uniform = 64;
    o.gp_restarts = 3;
    return o;
}

}  // namespace

TEST_CASE("importance is the normalized inverse length-scale")
{
    const auto r = sensitivity_importance(model_with({0.25, 0.5, 1.0}), box(3));
    CHECK(r.weight("x0") == doctest::Approx(4.0 / 7));
    CHECK(r.weight("x1") == doctest::Approx(2.0 / 7));
    CHECK(r.weight("x2") == doctest::Approx(1.0 / 7));
    CHECK(r.ranking() == std::vector<std::string>{"x0", "x1", "x2"});
    CHECK_THROWS_AS((void)r.weight("nope"), DomainError);

    const auto flat = sensitivity_importance(model_with({0.7, 0.7, 0.7, 0.7}), box(4));
    for (const auto& [name, w] : flat.weights) CHECK(w == doctest::Approx(0.25));
}

TEST_CASE("one-hot blocks are summed per parameter")
{
    SearchSpace s;
    s.params = {ParamDef::continuous("a", 0, 1), ParamDef::categorical("c", {"p", "q", "r"})};
    const auto r = sensitivity_importance(model_with({1.0, 1.0, 1.0, 1.0}), s);
    REQUIRE(r.weights.size() == 2);
    CHECK(r.weight("a") == doctest::Approx(0.25));
    CHECK(r.weight("c") == doctest::Approx(0.75));
    CHECK(raw_importance(model_with({0.5, 1.0, 2.0, 4.0}), s)[1] == doctest::Approx(1.75));
}

TEST_CASE("importance follows a permutation of the inputs")
{
    const std::vector<double> ls{0.3, 2.0, 0.9, 0.05};
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    std::vector<double> pls;
    SearchSpace ps;
    const auto base = box(4);
    for (auto k : perm) {
        pls.push_back(ls[k]);
        ps.params.push_back(base.params[k]);
    }
    const auto a = sensitivity_importance(model_with(ls), base);
    const auto b = sensitivity_importance(model_with(pls), ps);
    for (const auto& [name, w] : a.weights) CHECK(b.weight(name) == doctest::Approx(w));
}

TEST_CASE("degenerate models have no importance")
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 2);
    const auto m = fit_gp(x, Eigen::VectorXd::Constant(5, 1.0), KernelFamily::RBF);
    REQUIRE(m.degenerate);
    CHECK_THROWS_AS(sensitivity_importance(m, box(2)), DomainError);
}

TEST_CASE("an irrelevant input gets little weight")
{
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        Eigen::MatrixXd x(25, 2);
        Eigen::VectorXd y(25);
        for (Eigen::Index i = 0; i < 25; ++i) {
            x(i, 0) = rng.uniform();
            x(i, 1) = rng.uniform();
            y[i] = std::sin(6 * x(i, 0));
        }
        FitOptions o;
        o.seed = seed;
        const auto r = sensitivity_importance(fit_gp(x, y, KernelFamily::Matern52, o), box(2));
        ok += r.weight("x0") > 0.8;
    }
    CHECK(ok >= 4);
}

TEST_CASE("energy and time importance decouple")
{
    const Evaluator f = [](const DesignPoint& p) -> Evaluation {
        return {std::exp(std::sin(5 * p.real("x0"))), std::exp(std::cos(5 * p.real("x1")))};
    };
    const auto s = run_study(box(2), quick(20, 3, ObjectiveMode::MultiObjective), f);
    const auto [e, t] = moo_importance(s, box(2), "toy");
    CHECK(e.objective == "Energy");
    CHECK(t.objective == "Time");
    CHECK(e.ranking().front() == "x0");
    CHECK(t.ranking().front() == "x1");
    const auto j = importance_to_json(e);
    CHECK(j["study_id"] == "toy");
}

TEST_CASE("percentile")
{
    CHECK(percentile({1, 2, 3, 4, 5}, 50) == 3.0);
    CHECK(percentile({1, 2, 3, 4}, 50) == 2.5);
    CHECK(percentile({10, 0}, 100) == 10.0);
    CHECK(percentile({0, 100}, 99) == doctest::Approx(99.0));
    CHECK_THROWS(percentile({}, 50));
}

TEST_CASE("pareto scatter drops penalized trials and outliers")
{
    Study s;
    for (std::size_t i = 0; i < 200; ++i) {
        Trial t;
        t.index = i;
        t.objectives = {static_cast<double>(i % 17), static_cast<double>(i % 13)};
        t.loss = 1.0;
        s.trials.push_back(t);
    }
    s.trials[5].penalized = true;
    s.trials[6].loss = s.objective.penalty;
    s.trials[7].objectives = {1e9, 0.0};
    const auto keep = pareto_plot_indices(s);
    CHECK(std::find(keep.begin(), keep.end(), 5) == keep.end());
    CHECK(std::find(keep.begin(), keep.end(), 6) == keep.end());
    CHECK(std::find(keep.begin(), keep.end(), 7) == keep.end());
    CHECK(keep.size() > 150);
}

TEST_CASE("history plot")
{
    const auto s = run_study(box(2), quick(12, 0), toy);
    const auto series = history_series(s);
    REQUIRE(series.rows.size() == 12);
    CHECK(series.columns == std::vector<std::string>{"trial", "loss", "best"});
    for (std::size_t i = 0; i < 12; ++i) CHECK(series.rows[i][2] == s.incumbent_trace[i]);
    const auto files = emit_plot(series, scratch("history.svg"));
    const auto svg = slurp(files.svg);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count(svg, "class=\"trial\"") == 12);
    CHECK(count(svg, "class=\"running-min\"") == 1);
    const auto back = read_plot_csv(files.csv, PlotKind::History);
    CHECK(back.columns == series.columns);
    CHECK(back.rows == series.rows);
}

TEST_CASE("pareto plot marks exactly the front")
{
    const auto s = run_study(box(2), quick(16, 1, ObjectiveMode::MultiObjective), toy);
    const auto series = pareto_series(s);
    const auto keep = pareto_plot_indices(s);
    REQUIRE(series.rows.size() == keep.size());
    std::vector<ObjectivePair> pts;
    for (const auto& r : series.rows) pts.push_back({r[0], r[1]});
    const auto front = pareto_front(pts);
    std::size_t marked = 0;
    for (std::size_t i = 0; i < series.rows.size(); ++i) {
        const bool on = series.rows[i][2] == 1.0;
        marked += on;
        const bool in_front = std::any_of(front.members.begin(), front.members.end(),
                                          [&](const FrontMember& m) { return m.value == pts[i]; });
        CHECK(on == in_front);
    }
    CHECK(marked >= front.size());
    const auto files = emit_plot(series, scratch("pareto.svg"));
    const auto svg = slurp(files.svg);
    CHECK(count(svg, "class=\"front\"") == marked);
    CHECK(count(svg, "class=\"dominated\"") == series.rows.size() - marked);
}

TEST_CASE("importance and contour plots")
{
    const auto r1 = sensitivity_importance(model_with({0.25, 0.5, 1.0}), box(3), "loss", "a");
    const auto r2 = sensitivity_importance(model_with({1.0, 0.5, 0.25}), box(3), "loss", "b");
    const auto bars = importance_series({r1, r2});
    CHECK(bars.rows.size() == 3);
    CHECK(bars.columns.size() == 2);
    CHECK(bars.row_labels == std::vector<std::string>{"x0", "x1", "x2"});
    const auto files = emit_plot(bars, scratch("importance.svg"));
    CHECK(count(slurp(files.svg), "class=\"bar\"") == 6);
    const auto back = read_plot_csv(files.csv, PlotKind::Importance);
    CHECK(back.row_labels == bars.row_labels);
    CHECK(back.rows == bars.rows);

    const auto m = model_with({0.3, 0.6, 0.9});
    DesignPoint anchor;
    anchor.values = {{"x0", 0.5}, {"x1", 0.5}, {"x2", 0.25}};
    const auto c = contour_series(m, box(3), anchor, "x0", "x1");
    REQUIRE(c.rows.size() == 2500);
    const std::vector<double> probe{c.rows[77][0], c.rows[77][1], 0.25};
    CHECK(c.rows[77][2] == doctest::Approx(predict(m, probe).mean));
    const auto cf = emit_plot(c, scratch("contour.svg"));
    CHECK(read_plot_csv(cf.csv, PlotKind::Contour).rows.size() == 2500);
    CHECK_THROWS(contour_series(m, box(3), anchor, "x0", "missing"));
}

TEST_CASE("empty series are rejected")
{
    PlotSeries empty;
    empty.columns = {"trial", "loss", "best"};
    CHECK_THROWS_AS(emit_plot(empty, scratch("empty.svg")), ValidationError);
}
