#include "hmsched/workload.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "hmsched/errors.hpp"

namespace hmsched {

std::vector<std::string> WorkloadSpec::violations() const
{
    std::vector<std::string> out;
    if (!(arrival_rate > 0.0) || !std::isfinite(arrival_rate)) {
        out.emplace_back("arrival_rate must be positive and finite");
    }
    if (max_tasks < 0) {
        out.emplace_back("max_tasks must be >= 0");
    }
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
        out.emplace_back("horizon must be >= 0 and finite");
    }
    if (priority_levels < 0) {
        out.emplace_back("priority_levels must be >= 0");
    }
    if (instructions_lo < 1) {
        out.emplace_back("instruction range lower bound must be >= 1");
    }
    if (instructions_hi < instructions_lo) {
        out.emplace_back("instruction range upper bound must be >= lower bound");
    }
    return out;
}

std::vector<double> sample_arrivals(double rate, double horizon, std::int64_t max_n, Rng& rng)
{
    if (!(rate > 0.0)) {
        throw DomainError("sample_arrivals: rate must be positive");
    }
    if (!(horizon >= 0.0)) {
        throw DomainError("sample_arrivals: horizon must be non-negative");
    }
    std::vector<double> times;
    double t = 0.0;
    while (static_cast<std::int64_t>(times.size()) < max_n) {
        const double next = t + rng.exponential(rate);
        if (next > horizon) {
            break;
        }
        // A zero gap would break strict ordering; it needs u == 0 exactly.
        if (next <= t && !times.empty()) {
            continue;
        }
        times.push_back(next);
        t = next;
    }
    return times;
}

TaskSet generate_tasks(const WorkloadSpec& spec, std::uint64_t seed)
{
    if (auto v = spec.violations(); !v.empty()) {
        throw DomainError(ValidationError(std::move(v)).what());
    }
    const Rng root(seed);
    Rng arrivals_rng = root.split("arrivals");
    Rng instr_rng = root.split("instructions");
    Rng prio_rng = root.split("priorities");

    const auto times = sample_arrivals(spec.arrival_rate, spec.horizon, spec.max_tasks, arrivals_rng);

    TaskSet set;
    set.spec = spec;
    set.spec.seed = seed;
    set.tasks.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        Task task;
        task.id = static_cast<std::int64_t>(i);
        task.arrival_time = times[i];
        task.instruction_count = instr_rng.uniform_int(spec.instructions_lo, spec.instructions_hi);
        task.priority = static_cast<int>(prio_rng.uniform_int(0, spec.priority_levels));
        set.tasks.push_back(task);
    }
    return set;
}

void write_tasks_csv(const TaskSet& tasks, std::ostream& out)
{
    out << "id,arrival_ms,instructions,priority\n";
    std::ostringstream row;
    row << std::setprecision(17);
    for (const auto& t : tasks.tasks) {
        row.str("");
        row << t.id << ',' << t.arrival_time * 1e3 << ',' << t.instruction_count << ',' << t.priority << '\n';
        out << row.str();
    }
}

std::vector<Task> read_tasks_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,arrival_ms,instructions,priority", 0) != 0) {
        throw ConfigError("task CSV: missing header 'id,arrival_ms,instructions,priority'");
    }
    std::vector<Task> tasks;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream ss(line);
        Task t;
        double arrival_ms = 0.0;
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(ss >> t.id >> c1 >> arrival_ms >> c2 >> t.instruction_count >> c3 >> t.priority) || c1 != ',' ||
            c2 != ',' || c3 != ',') {
            throw ConfigError("task CSV: malformed row at line " + std::to_string(lineno));
        }
        t.arrival_time = arrival_ms * 1e-3;
        tasks.push_back(t);
    }
    return tasks;
}

}  // namespace hmsched
