#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "hmsched/errors.hpp"
#include "hmsched/rng.hpp"
#include "hmsched/workload.hpp"
#include "oracles.hpp"

using namespace hmsched;

TEST_CASE("rng streams are reproducible and tag-separated")
{
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng root(7);
    Rng x = root.split("arrivals"), y = root.split("arrivals"), z = root.split("priorities");
    CHECK(x.next_u64() == y.next_u64());
    CHECK(x.seed() != z.seed());
    CHECK(root.split(std::uint64_t{1}).seed() != root.split(std::uint64_t{2}).seed());
}

TEST_CASE("rng conversions stay in range")
{
    Rng r(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const auto k = r.uniform_int(-2, 5);
        CHECK(k >= -2);
        CHECK(k <= 5);
        CHECK(r.exponential(2.0) >= 0.0);
    }
    CHECK(r.uniform_int(4, 4) == 4);
}

TEST_CASE("rng normal has unit moments")
{
    Rng r(11);
    std::vector<double> v(200000);
    for (auto& x : v) x = r.normal();
    const auto m = oracle::summarize(v);
    double var = 0.0;
    for (double x : v) var += (x - m.mean) * (x - m.mean);
    var /= static_cast<double>(v.size() - 1);
    CHECK(std::abs(m.mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.015);
}

TEST_CASE("sample_arrivals edge cases")
{
    Rng r(1);
    CHECK(sample_arrivals(1000.0, 0.0, 500, r).empty());
    CHECK(sample_arrivals(1e9, 1.0, 3, r).size() == 3);
    CHECK(sample_arrivals(1000.0, 1.0, 0, r).empty());
    CHECK_THROWS_AS(sample_arrivals(0.0, 1.0, 10, r), DomainError);
    CHECK_THROWS_AS(sample_arrivals(-5.0, 1.0, 10, r), DomainError);
    CHECK_THROWS_AS(sample_arrivals(10.0, -1.0, 10, r), DomainError);
}

TEST_CASE("sample_arrivals is strictly increasing and capped by the horizon")
{
    Rng r(5);
    const auto t = sample_arrivals(1000.0, 0.5, 1000000, r);
    REQUIRE(!t.empty());
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
    CHECK(t.back() <= 0.5);
}

TEST_CASE("mean inter-arrival gap is 1/rate")
{
    int within = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng r(seed);
        const auto t = sample_arrivals(1000.0, 1.0, 1000000, r);
        REQUIRE(t.size() > 1);
        const double mean_gap_ms = t.back() / static_cast<double>(t.size()) * 1e3;
        within += mean_gap_ms >= 0.9 && mean_gap_ms <= 1.1;
    }
    CHECK(within >= 9);
}

TEST_CASE("inter-arrival gaps pass a KS test against the exponential law")
{
    int pass = 0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        Rng r(static_cast<std::uint64_t>(seed) + 100);
        const auto t = sample_arrivals(1000.0, 10.0, 5000, r);
        std::vector<double> gaps(t.size());
        gaps[0] = t[0];
        for (std::size_t i = 1; i < t.size(); ++i) gaps[i] = t[i] - t[i - 1];
        const double crit = 1.628 / std::sqrt(static_cast<double>(gaps.size()));
        pass += oracle::ks_exponential(gaps, 1000.0) < crit;
    }
    CHECK(pass >= 18);
}

TEST_CASE("generate_tasks respects its settings")
{
    WorkloadSpec spec;
    const TaskSet set = generate_tasks(spec, 9);
    CHECK(set.size() <= static_cast<std::size_t>(spec.max_tasks));
    CHECK(set.size() > 400);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& t = set.tasks[i];
        CHECK(t.id == static_cast<std::int64_t>(i));
        CHECK(t.arrival_time >= 0.0);
        CHECK(t.arrival_time <= spec.horizon);
        CHECK(t.instruction_count >= spec.instructions_lo);
        CHECK(t.instruction_count <= spec.instructions_hi);
        CHECK(t.priority >= 0);
        CHECK(t.priority <= spec.priority_levels);
        CHECK_FALSE(t.finish_time.has_value());
        CHECK(t.energy == 0.0);
        if (i > 0) CHECK(t.arrival_time >= set.tasks[i - 1].arrival_time);
    }
}

TEST_CASE("generate_tasks is deterministic and seed-sensitive")
{
    WorkloadSpec spec;
    CHECK(generate_tasks(spec, 4).tasks == generate_tasks(spec, 4).tasks);
    CHECK(generate_tasks(spec, 4).tasks != generate_tasks(spec, 5).tasks);
}

TEST_CASE("generate_tasks with no tasks and invalid specs")
{
    WorkloadSpec spec;
    spec.max_tasks = 0;
    CHECK(generate_tasks(spec, 1).empty());

    WorkloadSpec bad;
    bad.arrival_rate = 0.0;
    bad.instructions_lo = 0;
    bad.instructions_hi = -1;
    CHECK(bad.violations().size() >= 2);
    CHECK_THROWS_AS(generate_tasks(bad, 1), DomainError);
}

TEST_CASE("priority histogram is uniform over 0..K")
{
    WorkloadSpec spec;
    spec.priority_levels = 3;
    spec.max_tasks = 10000;
    spec.horizon = 100.0;
    const TaskSet set = generate_tasks(spec, 21);
    REQUIRE(set.size() == 10000);
    std::vector<long> counts(4, 0);
    for (const auto& t : set.tasks) ++counts[static_cast<std::size_t>(t.priority)];
    CHECK(oracle::chi_square_uniform(counts) < 11.345);  // chi2(3) at 0.01
}

TEST_CASE("task CSV round-trips")
{
    WorkloadSpec spec;
    spec.max_tasks = 50;
    const TaskSet set = generate_tasks(spec, 2);
    std::stringstream buf;
    write_tasks_csv(set, buf);
    CHECK(buf.str().rfind("id,arrival_ms,instructions,priority\n", 0) == 0);
    const auto back = read_tasks_csv(buf);
    REQUIRE(back.size() == set.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].id == set.tasks[i].id);
        CHECK(back[i].instruction_count == set.tasks[i].instruction_count);
        CHECK(back[i].priority == set.tasks[i].priority);
        CHECK(back[i].arrival_time == doctest::Approx(set.tasks[i].arrival_time).epsilon(1e-14));
    }
    std::stringstream bad("id,arrival\n1,2\n");
    CHECK_THROWS_AS(read_tasks_csv(bad), ConfigError);
}
