#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hmsched/rng.hpp"

namespace hmsched {

/// One unit of work. Priority 0 is the most important level.
struct Task {
    std::int64_t id = 0;
    double arrival_time = 0.0;          // s
    std::int64_t instruction_count = 1;
    int priority = 0;
    std::optional<double> finish_time;  // s, set by the simulator
    double energy = 0.0;                // J, set by the simulator

    bool operator==(const Task&) const = default;
};

struct WorkloadSpec {
    double arrival_rate = 1000.0;    // tasks per second
    std::int64_t max_tasks = 500;
    double horizon = 1.0;            // s; no arrivals after this time
    int priority_levels = 3;         // K: priorities are drawn from {0..K}
    std::int64_t instructions_lo = 500'000;
    std::int64_t instructions_hi = 5'000'000;
    std::uint64_t seed = 0;

    /// Every problem with these settings; empty when valid.
    [[nodiscard]] std::vector<std::string> violations() const;

    bool operator==(const WorkloadSpec&) const = default;
};

struct TaskSet {
    std::vector<Task> tasks;  // sorted by arrival_time, ids dense 0..N-1
    WorkloadSpec spec;

    [[nodiscard]] std::size_t size() const { return tasks.size(); }
    [[nodiscard]] bool empty() const { return tasks.empty(); }
};

/// Poisson arrival times on [0, horizon], at most `max_n` of them. Throws
/// DomainError for a non-positive rate or negative horizon.
std::vector<double> sample_arrivals(double rate, double horizon, std::int64_t max_n, Rng& rng);

/// Task set for `spec`, drawn from independent arrival, instruction and
/// priority streams derived from `seed`.
TaskSet generate_tasks(const WorkloadSpec& spec, std::uint64_t seed);

/// CSV with header `id,arrival_ms,instructions,priority`.
void write_tasks_csv(const TaskSet& tasks, std::ostream& out);
std::vector<Task> read_tasks_csv(std::istream& in);

}  // namespace hmsched
