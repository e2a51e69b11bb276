#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hmsched/errors.hpp"
#include "hmsched/study.hpp"

using namespace hmsched;

namespace {

// Cheap stand-in for the simulator on the default space.
Evaluation toy_eval(const DesignPoint& p)
{
    double power = 0.1, speed = 0.0;
    for (const char* c : {"little", "medium", "big"}) {
        const auto n = static_cast<double>(p.integer(std::string("count_") + c));
        const double f = p.real(std::string("freq_") + c + "_ghz");
        power += n * f * f;
        speed += n * f;
    }
    double t = 1.0 / (0.05 + speed);
    if (p.category("scheduler") == "FCFS") t *= 1.3;
    if (p.has("quantum_ms")) t *= 1.0 + 0.02 * p.real("quantum_ms");
    return {power * t, t};
}

StudyOptions quick(std::size_t budget, std::size_t n_init, std::uint64_t seed)
{
    StudyOptions o;
    o.budget = budget;
    o.n_init = n_init;
    o.seed = seed;
    o.candidates.sobol = 256;
    o.candidates.uniform = 128;
    o.gp_restarts = 3;
    o.gp_max_iterations = 50;
    return o;
}

SearchSpace unit_box(std::size_t d)
{
    SearchSpace s;
    for (std::size_t i = 0; i < d; ++i) s.params.push_back(ParamDef::continuous("x" + std::to_string(i), 0.0, 1.0));
    return s;
}

double branin(double u, double v)
{
    const double x = 15 * u - 5, y = 15 * v;
    const double pi = std::numbers::pi;
    const double a = y - 5.1 / (4 * pi * pi) * x * x + 5 / pi * x - 6;
    return a * a + 10 * (1 - 1 / (8 * pi)) * std::cos(x) + 10;
}

}  // namespace

TEST_CASE("scalarized cost")
{
    const double e = std::numbers::e;
    CHECK(scalarized_cost(e, 1.0, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(scalarized_cost(e * e, e, 2.0, 1.0) == doctest::Approx(5.0));
    CHECK(scalarized_cost(1.0, 1.0, 3.0, 7.0) == 0.0);
    CHECK_THROWS_AS(scalarized_cost(0.0, 1.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(scalarized_cost(1.0, -1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("argmax_first breaks ties toward the earliest index")
{
    CHECK(argmax_first({1.0, 3.0, 3.0, 2.0}) == 1);
    CHECK(argmax_first({-1.0}) == 0);
    CHECK(argmax_first({5.0, 5.0}) == 0);
}

TEST_CASE("study option validation")
{
    StudyOptions o;
    o.budget = 5;
    o.n_init = 10;
    CHECK_FALSE(o.violations().empty());
    o.budget = 10;
    CHECK(o.violations().empty());
    ObjectiveSpec bad;
    bad.beta = -1.0;
    CHECK_FALSE(bad.violations().empty());
}

TEST_CASE("warm-up only: no model is fitted")
{
    const auto s = run_study(default_space(), quick(6, 6, 1), toy_eval);
    CHECK(s.trials.size() == 6);
    CHECK(s.gp_history.empty());
    CHECK(s.final_models.empty());
    for (const auto& t : s.trials) CHECK(t.source == TrialSource::Sobol);
    CHECK(s.trials[0].point.real("freq_little_ghz") == doctest::Approx(1.0));
}

TEST_CASE("bo study bookkeeping")
{
    const auto space = default_space();
    const auto s = run_study(space, quick(25, 8, 3), toy_eval);
    REQUIRE(s.trials.size() == 25);
    REQUIRE(s.incumbent_trace.size() == 25);
    for (std::size_t i = 0; i < s.trials.size(); ++i) {
        const auto& t = s.trials[i];
        CHECK(t.index == i);
        CHECK(validate(t.point, space).empty());
        CHECK(t.source == (i < 8 ? TrialSource::Sobol : TrialSource::BO));
        CHECK(t.loss == doctest::Approx(std::log(t.energy) + std::log(t.latency)));
        if (i > 0) CHECK(s.incumbent_trace[i] <= s.incumbent_trace[i - 1]);
    }
    REQUIRE(s.incumbent);
    CHECK(s.trials[*s.incumbent].loss == s.best_loss());
    CHECK(s.incumbent_trace.back() == s.best_loss());
    for (const auto& t : s.trials) CHECK(t.loss >= s.best_loss());
    CHECK(s.gp_history.size() == 17);
    CHECK(s.final_models.count("loss") == 1);
}

TEST_CASE("studies are deterministic in their seed")
{
    const auto a = run_study(default_space(), quick(16, 6, 9), toy_eval);
    const auto b = run_study(default_space(), quick(16, 6, 9), toy_eval);
    REQUIRE(a.trials.size() == b.trials.size());
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        CHECK(a.trials[i].point == b.trials[i].point);
        CHECK(a.trials[i].loss == b.trials[i].loss);
    }
    std::ostringstream ja, jb;
    write_study_json(a, default_space(), ja);
    write_study_json(b, default_space(), jb);
    CHECK(ja.str() == jb.str());
}

TEST_CASE("random search")
{
    const auto space = default_space();
    const auto s = random_search(space, quick(30, 10, 4), toy_eval);
    CHECK(s.method == "random");
    CHECK(s.trials.size() == 30);
    CHECK(s.gp_history.empty());
    for (const auto& t : s.trials) {
        CHECK(t.source == TrialSource::Random);
        CHECK(validate(t.point, space).empty());
    }
    const auto again = random_search(space, quick(30, 10, 4), toy_eval);
    CHECK(again.trials.back().point == s.trials.back().point);
}

TEST_CASE("failed evaluations are penalized and never become the incumbent")
{
    const Evaluator flaky = [](const DesignPoint& p) -> Evaluation {
        if (p.category("scheduler") == "RR") throw std::runtime_error("simulator blew up");
        return toy_eval(p);
    };
    auto o = quick(20, 8, 2);
    const auto s = run_study(default_space(), o, flaky);
    std::size_t penalized = 0;
    for (const auto& t : s.trials) {
        if (t.point.category("scheduler") == "RR") {
            CHECK(t.penalized);
            CHECK(t.loss == o.objective.penalty);
            CHECK(t.note.find("blew up") != std::string::npos);
            ++penalized;
        } else {
            CHECK_FALSE(t.penalized);
        }
    }
    CHECK(penalized > 0);
    REQUIRE(s.incumbent);
    CHECK_FALSE(s.trials[*s.incumbent].penalized);
    CHECK(std::any_of(s.log.begin(), s.log.end(),
                      [](const std::string& l) { return l.find("penalized") != std::string::npos; }));
}

TEST_CASE("one-dimensional quadratic is bracketed")
{
    const auto space = unit_box(1);
    const Evaluator f = [](const DesignPoint& p) -> Evaluation {
        const double x = p.real("x0");
        return {std::exp((x - 0.3) * (x - 0.3)), 1.0};
    };
    const auto s = run_study(space, quick(15, 4, 0), f);
    const double best = s.trials[*s.incumbent].point.real("x0");
    CHECK(std::abs(best - 0.3) < 0.05);
}

TEST_CASE("bo beats random search on a smooth two-dimensional function")
{
    const auto space = unit_box(2);
    const Evaluator f = [](const DesignPoint& p) -> Evaluation {
        return {std::exp(branin(p.real("x0"), p.real("x1"))), 1.0};
    };
    std::vector<double> bo, rs;
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto o = quick(30, 5, seed);
        bo.push_back(run_study(space, o, f).best_loss());
        rs.push_back(random_search(space, o, f).best_loss());
        wins += bo.back() < rs.back();
    }
    std::sort(bo.begin(), bo.end());
    std::sort(rs.begin(), rs.end());
    const double med_bo = 0.5 * (bo[9] + bo[10]);
    const double med_rs = 0.5 * (rs[9] + rs[10]);
    MESSAGE("branin median bo=" << med_bo << " random=" << med_rs << " wins=" << wins);
    CHECK(med_bo < med_rs);
    CHECK(wins >= 14);
    CHECK(med_bo < 0.397887 + 0.5);
}

TEST_CASE("doubling both weights leaves the search unchanged")
{
    auto a = quick(16, 6, 5);
    auto b = a;
    b.objective.beta = 2.0;
    b.objective.gamma = 2.0;
    const auto sa = run_study(default_space(), a, toy_eval);
    const auto sb = run_study(default_space(), b, toy_eval);
    for (std::size_t i = 0; i < sa.trials.size(); ++i) {
        CHECK(sa.trials[i].point == sb.trials[i].point);
        CHECK(sb.trials[i].loss == doctest::Approx(2 * sa.trials[i].loss));
    }
}

TEST_CASE("multi-objective study")
{
    auto o = quick(20, 8, 6);
    o.objective.mode = ObjectiveMode::MultiObjective;
    const auto s = run_study(default_space(), o, toy_eval);
    REQUIRE(s.reference);
    REQUIRE(s.hv_trace.size() == s.trials.size());
    for (std::size_t i = 1; i < s.hv_trace.size(); ++i) CHECK(s.hv_trace[i] >= s.hv_trace[i - 1] - 1e-12);
    CHECK(s.hv_trace.back() == doctest::Approx(hypervolume_2d(clip_to_reference(s.front, *s.reference), *s.reference)));
    for (const auto& m : s.front.members) {
        for (const auto& t : s.trials) CHECK_FALSE(dominates(t.objectives, m.value));
    }
    CHECK(s.final_models.count("energy") == 1);
    CHECK(s.final_models.count("time") == 1);
    // Warm-up rule: max plus a tenth of the range.
    double hi = -1e300, lo = 1e300;
    for (std::size_t i = 0; i < 8; ++i) {
        hi = std::max(hi, s.trials[i].objectives.first);
        lo = std::min(lo, s.trials[i].objectives.first);
    }
    CHECK(s.reference->first == doctest::Approx(hi + 0.1 * (hi - lo)));
}

TEST_CASE("trial csv layout")
{
    const auto s = run_study(default_space(), quick(5, 5, 0), toy_eval);
    std::ostringstream out;
    write_trials_csv(s, default_space(), out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("index,source,", 0) == 0);
    CHECK(header.find("penalized") != std::string::npos);
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) rows += !line.empty();
    CHECK(rows == 5);
}
