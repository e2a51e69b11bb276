#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hmsched/acquisition.hpp"
#include "hmsched/errors.hpp"
#include "hmsched/pareto.hpp"
#include "oracles.hpp"

using namespace hmsched;

TEST_CASE("log expected improvement examples")
{
    CHECK(log_expected_improvement(0.0, 1.0, 0.0) == doctest::Approx(-0.91894).epsilon(1e-5));
    CHECK(log_expected_improvement(2.0, 0.0, 3.0) == doctest::Approx(0.0));
    CHECK(log_expected_improvement(3.0, 0.0, 2.0) == kLogFloor);
    CHECK(log_expected_improvement(3.0, 0.0, 3.0) == kLogFloor);
}

TEST_CASE("log expected improvement against Monte Carlo")
{
    int cases = 0;
    for (double z : {-8.0, -6.0, -4.5, -3.0, -2.0, -1.5, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0,
                     -5.0, -3.5, 0.75}) {
        const double sd = 0.3 + 0.1 * cases;
        const double best = 1.0;
        const double mu = best - z * sd;
        const bool tail = z < -2.5;
        const auto mc = oracle::mc_expected_improvement(mu, sd, best, 200000, 100 + cases, tail);
        const double ei = std::exp(log_expected_improvement(mu, sd * sd, best));
        CHECK_MESSAGE(std::abs(ei - mc.mean) <= 3 * mc.se + 1e-14, "z=" << z << " ei=" << ei << " mc=" << mc.mean);
        ++cases;
    }
    CHECK(cases == 20);
}

TEST_CASE("log expected improvement stays finite and ordered deep in the tail")
{
    double prev = -std::numeric_limits<double>::infinity();
    for (double z = -60.0; z <= 5.0; z += 0.5) {
        const double v = log_expected_improvement(-z, 1.0, 0.0);
        CHECK(std::isfinite(v));
        CHECK(v > kLogFloor);
        CHECK(v > prev);
        prev = v;
    }
    // Asymptote log phi(z) - 2 log|z| for z -> -inf.
    const double z = -40.0;
    const double approx = -0.5 * z * z - 0.5 * std::log(2 * std::numbers::pi) - 2 * std::log(-z);
    CHECK(log_expected_improvement(-z, 1.0, 0.0) == doctest::Approx(approx).epsilon(1e-3));
}

TEST_CASE("erfcx and log_h")
{
    for (double x : {-2.0, -0.5, 0.0, 0.3, 1.0, 4.0, 10.0}) {
        CHECK(erfcx(x) == doctest::Approx(std::exp(x * x) * std::erfc(x)).epsilon(1e-10));
    }
    CHECK(erfcx(1e4) == doctest::Approx(1.0 / (1e4 * std::sqrt(std::numbers::pi))).epsilon(1e-8));
    for (double z : {-3.0, -1.0, 0.0, 2.0}) {
        CHECK(log_h(z) == doctest::Approx(std::log(normal_pdf(z) + z * normal_cdf(z))).epsilon(1e-10));
    }
    CHECK(lower_partial_moment(1.0, 0.0, 0.0) == 1.0);
    CHECK(lower_partial_moment(-1.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("pareto front examples")
{
    const std::vector<ObjectivePair> pts{{1, 3}, {2, 2}, {3, 1}, {2.5, 2.5}, {2, 2}};
    const auto f = pareto_front(pts);
    REQUIRE(f.size() == 3);
    CHECK(f.members[0].index == 0);
    CHECK(f.members[1].index == 1);
    CHECK(f.members[2].index == 2);
    CHECK(dominates({1, 1}, {1, 2}));
    CHECK_FALSE(dominates({1, 1}, {1, 1}));
    CHECK(pareto_front(std::vector<ObjectivePair>{}).empty());
}

TEST_CASE("pareto front against brute force")
{
    std::mt19937_64 eng(77);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + eng() % 64;
        std::vector<ObjectivePair> pts(n);
        std::vector<oracle::Pair> raw(n);
        const bool coarse = rep % 2 == 0;  // ties and duplicates
        for (std::size_t i = 0; i < n; ++i) {
            double a = std::uniform_real_distribution<double>(0, 1)(eng);
            double b = std::uniform_real_distribution<double>(0, 1)(eng);
            if (coarse) {
                a = std::round(a * 5) / 5;
                b = std::round(b * 5) / 5;
            }
            pts[i] = {a, b};
            raw[i] = {a, b};
        }
        const auto f = pareto_front(pts);
        std::vector<std::size_t> got;
        for (const auto& m : f.members) got.push_back(m.index);
        for (std::size_t i = 1; i < f.size(); ++i) {
            CHECK(f.members[i - 1].value.first < f.members[i].value.first);
            CHECK(f.members[i - 1].value.second > f.members[i].value.second);
        }
        std::sort(got.begin(), got.end());
        CHECK(got == oracle::brute_pareto(raw));
    }
}

TEST_CASE("hypervolume examples")
{
    const std::vector<ObjectivePair> one{{1, 1}};
    CHECK(hypervolume_2d(pareto_front(one), {2, 2}) == doctest::Approx(1.0));
    const std::vector<ObjectivePair> two{{1, 2}, {2, 1}};
    CHECK(hypervolume_2d(pareto_front(two), {3, 3}) == doctest::Approx(3.0));
    CHECK(hypervolume_2d(ParetoFront{}, {3, 3}) == 0.0);
    const std::vector<ObjectivePair> beyond{{1, 4}};
    CHECK_THROWS_AS(hypervolume_2d(pareto_front(beyond), {3, 3}), DomainError);
    CHECK(clip_to_reference(pareto_front(beyond), {3, 3}).empty());
}

TEST_CASE("hypervolume against box-union and grid oracles")
{
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(0, 1);
    const ReferencePoint ref{1.1, 1.2};
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + eng() % 30;
        std::vector<ObjectivePair> pts(n);
        std::vector<oracle::Pair> raw(n);
        for (std::size_t i = 0; i < n; ++i) {
            pts[i] = {u(eng), u(eng)};
            raw[i] = {pts[i].first, pts[i].second};
        }
        const auto f = pareto_front(pts);
        const double hv = hypervolume_2d(f, ref);
        CHECK(hv == doctest::Approx(oracle::union_area(raw, {ref.first, ref.second})).epsilon(1e-12));
        if (rep < 10) {
            CHECK(std::abs(hv - oracle::grid_area(raw, {0, 0}, {ref.first, ref.second}, 500)) < 0.01);
        }
        const ObjectivePair p{u(eng), u(eng)};
        auto with = pts;
        with.push_back(p);
        const double hvi = hypervolume_improvement(f, ref, p);
        CHECK(hvi == doctest::Approx(hypervolume_2d(pareto_front(with), ref) - hv).epsilon(1e-10).scale(1.0));
        CHECK(hvi >= 0.0);
        CHECK(hypervolume_improvement(f, ref, {2.0, 0.0}) == 0.0);
    }
}

TEST_CASE("expected hypervolume improvement against Monte Carlo")
{
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> u(0, 1);
    std::normal_distribution<double> g(0, 1);
    const ReferencePoint ref{1.0, 1.0};
    for (int rep = 0; rep < 8; ++rep) {
        std::vector<ObjectivePair> pts(6);
        for (auto& p : pts) p = {u(eng), u(eng)};
        const auto f = pareto_front(pts);
        const Posterior a{u(eng), 0.01 + 0.1 * u(eng)};
        const Posterior b{u(eng), 0.01 + 0.1 * u(eng)};
        std::vector<double> draws(200000);
        for (auto& d : draws) {
            const ObjectivePair p{a.mean + std::sqrt(a.variance) * g(eng), b.mean + std::sqrt(b.variance) * g(eng)};
            d = hypervolume_improvement(f, ref, p);
        }
        const auto mc = oracle::summarize(draws);
        const double e = ehvi(a, b, f, ref);
        CHECK_MESSAGE(std::abs(e - mc.mean) <= 3 * mc.se + 1e-12, "ehvi=" << e << " mc=" << mc.mean);
    }
}

TEST_CASE("expected hypervolume improvement degenerate cases")
{
    const std::vector<ObjectivePair> pts{{0.2, 0.8}, {0.5, 0.5}, {0.8, 0.1}};
    const auto f = pareto_front(pts);
    const ReferencePoint ref{1, 1};
    const ObjectivePair p{0.3, 0.4};
    CHECK(ehvi({p.first, 0.0}, {p.second, 0.0}, f, ref) == doctest::Approx(hypervolume_improvement(f, ref, p)));
    CHECK(ehvi({0.6, 0.0}, {0.6, 0.0}, f, ref) == 0.0);
    CHECK(ehvi({5.0, 1e-4}, {5.0, 1e-4}, f, ref) < 1e-12);
    // Empty front factorizes into two lower partial moments.
    const Posterior a{0.4, 0.04}, b{0.7, 0.09};
    CHECK(ehvi(a, b, ParetoFront{}, ref) ==
          doctest::Approx(lower_partial_moment(1, 0.4, 0.2) * lower_partial_moment(1, 0.7, 0.3)));
}
