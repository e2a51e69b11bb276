#include "hmsched/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "hmsched/errors.hpp"

namespace hmsched {

std::vector<std::string> PowerConstants::violations() const
{
    std::vector<std::string> out;
    if (!(k_v > 0.0)) out.emplace_back("k_v must be positive");
    if (!std::isfinite(b_f)) out.emplace_back("b_f must be finite");
    if (!(capacitance > 0.0)) out.emplace_back("capacitance must be positive");
    if (!(leakage_current >= 0.0)) out.emplace_back("leakage_current must be >= 0");
    if (!(activity >= 0.0 && activity <= 1.0)) out.emplace_back("activity must lie in [0, 1]");
    if (!(ipc > 0.0)) out.emplace_back("ipc must be positive");
    return out;
}

std::string to_string(CoreClass c)
{
    switch (c) {
    case CoreClass::Little: return "little";
    case CoreClass::Medium: return "medium";
    case CoreClass::Big: return "big";
    }
    return "unknown";
}

std::string to_string(SchedulerKind k)
{
    switch (k) {
    case SchedulerKind::FCFS: return "FCFS";
    case SchedulerKind::RoundRobin: return "RR";
    case SchedulerKind::Priority: return "Priority";
    }
    return "unknown";
}

SchedulerKind parse_scheduler(const std::string& name)
{
    if (name == "FCFS" || name == "FIFO") return SchedulerKind::FCFS;
    if (name == "RR" || name == "RoundRobin") return SchedulerKind::RoundRobin;
    if (name == "Priority") return SchedulerKind::Priority;
    throw ConfigError("unknown scheduler '" + name + "'");
}

SystemConfig SystemConfig::from_classes(const std::array<int, 3>& counts, const std::array<double, 3>& frequencies,
                                        SchedulerPolicy policy, PowerConstants constants)
{
    SystemConfig config;
    config.policy = policy;
    config.constants = constants;
    int id = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        for (int i = 0; i < counts[k]; ++i) {
            config.cores.push_back({id++, kCoreClasses[k], frequencies[k]});
        }
    }
    return config;
}

std::vector<std::string> SystemConfig::violations() const
{
    auto out = constants.violations();
    if (cores.empty()) {
        out.emplace_back("configuration has zero cores");
    }
    for (std::size_t i = 0; i < cores.size(); ++i) {
        if (cores[i].id != static_cast<int>(i)) {
            out.emplace_back("core ids must be dense and ordered");
            break;
        }
    }
    for (const auto& core : cores) {
        if (!(core.frequency > 0.0) || !std::isfinite(core.frequency)) {
            out.emplace_back("core " + std::to_string(core.id) + " frequency must be positive");
        } else if (core.frequency < constants.b_f) {
            out.emplace_back("core " + std::to_string(core.id) + " frequency below b_f");
        }
    }
    const bool sliced = policy.kind != SchedulerKind::FCFS;
    if (sliced && !policy.quantum) {
        out.emplace_back(to_string(policy.kind) + " requires a quantum");
    }
    if (!sliced && policy.quantum) {
        out.emplace_back("FCFS takes no quantum");
    }
    if (policy.quantum && !(*policy.quantum > 0.0)) {
        out.emplace_back("quantum must be positive");
    }
    return out;
}

void EventLog::add(double time, std::string component, std::string message)
{
    records_.push_back({time, std::move(component), std::move(message)});
}

void EventLog::write(std::ostream& out) const
{
    for (const auto& r : records_) {
        out << "INFO:" << r.component << ':' << r.message << '\n';
    }
}

double voltage_from_frequency(double frequency, const PowerConstants& c)
{
    if (frequency < c.b_f) {
        throw DomainError("voltage_from_frequency: frequency below b_f");
    }
    return (frequency - c.b_f) / c.k_v;
}

double dynamic_power(double frequency, const PowerConstants& c)
{
    const double v = voltage_from_frequency(frequency, c);
    return c.activity * c.capacitance * v * v * frequency;
}

double leakage_power(double frequency, const PowerConstants& c)
{
    return voltage_from_frequency(frequency, c) * c.leakage_current;
}

double execution_time(double instruction_count, const PowerConstants& c, double frequency)
{
    if (!(frequency > 0.0)) {
        throw DomainError("execution_time: frequency must be positive");
    }
    return instruction_count / (c.ipc * frequency);
}

double task_active_energy(double instruction_count, double frequency, const PowerConstants& c)
{
    if (!(frequency > 0.0)) {
        throw DomainError("task_active_energy: frequency must be positive");
    }
    const double v = voltage_from_frequency(frequency, c);
    // Energy per cycle, times cycles.
    const double per_cycle = c.activity * c.capacitance * v * v + v * c.leakage_current / frequency;
    return per_cycle * (instruction_count / c.ipc);
}

double idle_leakage_energy(double frequency, double duration, const PowerConstants& c)
{
    if (duration < 0.0) {
        throw DomainError("idle_leakage_energy: negative duration");
    }
    return leakage_power(frequency, c) * duration;
}

double priority_weight(int priority)
{
    if (priority < 0) {
        throw DomainError("priority_weight: negative priority");
    }
    const double d = static_cast<double>(priority) + 1.0;
    return 1.0 / (d * d);
}

double aggregated_latency(std::span<const double> latencies, std::span<const int> priorities)
{
    if (latencies.size() != priorities.size()) {
        throw DomainError("aggregated_latency: size mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < latencies.size(); ++i) {
        sum += priority_weight(priorities[i]) * latencies[i];
    }
    return sum;
}

namespace {

std::string fmt_ms(double seconds)
{
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(6) << seconds * 1e3;
    return ss.str();
}

std::string scheduler_component(SchedulerKind k)
{
    switch (k) {
    case SchedulerKind::FCFS: return "FCFS scheduler";
    case SchedulerKind::RoundRobin: return "Round Robin scheduler";
    case SchedulerKind::Priority: return "Priority scheduler";
    }
    return "Scheduler";
}

/// Global ready queue: FIFO for FCFS/RR, (priority, arrival, id) for Priority.
class ReadyQueue {
public:
    ReadyQueue(SchedulerKind kind, const std::vector<Task>& tasks) : kind_(kind), tasks_(tasks) {}

    void push(std::size_t task)
    {
        if (kind_ == SchedulerKind::Priority) {
            const auto& t = tasks_[task];
            ordered_.emplace(t.priority, t.arrival_time, t.id, task);
        } else {
            fifo_.push_back(task);
        }
    }

    std::size_t pop()
    {
        if (kind_ == SchedulerKind::Priority) {
            auto it = ordered_.begin();
            const std::size_t task = std::get<3>(*it);
            ordered_.erase(it);
            return task;
        }
        const std::size_t task = fifo_.front();
        fifo_.pop_front();
        return task;
    }

    [[nodiscard]] bool empty() const { return kind_ == SchedulerKind::Priority ? ordered_.empty() : fifo_.empty(); }

private:
    SchedulerKind kind_;
    const std::vector<Task>& tasks_;
    std::deque<std::size_t> fifo_;
    std::set<std::tuple<int, double, std::int64_t, std::size_t>> ordered_;
};

struct CoreState {
    bool busy = false;
    std::size_t task = 0;
    double slice_start = 0.0;
    double slice_end = 0.0;
    bool completes = false;
    double rate = 0.0;  // instructions per second
    double p_dynamic = 0.0;
    double p_leakage = 0.0;
};

}  // namespace

SimOutput run_simulation(const SystemConfig& config, const TaskSet& task_set, bool record_log)
{
    if (auto v = config.violations(); !v.empty()) {
        throw ConfigError(ValidationError(std::move(v)).what());
    }
    const auto& tasks = task_set.tasks;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].id != static_cast<std::int64_t>(i)) {
            throw ConfigError("run_simulation: task ids must be dense 0..N-1 in order");
        }
        if (i > 0 && tasks[i].arrival_time < tasks[i - 1].arrival_time) {
            throw ConfigError("run_simulation: tasks must be sorted by arrival time");
        }
    }

    const auto& c = config.constants;
    const SchedulerKind kind = config.policy.kind;
    const double quantum = config.policy.quantum.value_or(std::numeric_limits<double>::infinity());
    const std::string sched_name = scheduler_component(kind);

    SimOutput out;
    EventLog& log = out.log;
    SimResult& res = out.result;
    res.per_task.assign(tasks.size(), {});
    res.per_core.assign(config.cores.size(), {});

    std::vector<CoreState> cores(config.cores.size());
    for (std::size_t k = 0; k < cores.size(); ++k) {
        const double f = config.cores[k].frequency;
        cores[k].rate = c.ipc * f;
        cores[k].p_dynamic = dynamic_power(f, c);
        cores[k].p_leakage = leakage_power(f, c);
    }

    if (record_log) {
        log.add(0.0, "Task factory", "Created " + std::to_string(tasks.size()) + " tasks.");
        for (const auto& core : config.cores) {
            std::ostringstream ss;
            ss << "Frequency = " << core.frequency * 1e-9 << " GHz (" << to_string(core.core_class) << ").";
            log.add(0.0, "Processor " + std::to_string(core.id), ss.str());
        }
        if (config.policy.quantum) {
            log.add(0.0, sched_name, "Initialized with quantum = " + fmt_ms(quantum) + " ms.");
        } else {
            log.add(0.0, sched_name, "Initialized.");
        }
    }

    std::vector<double> remaining(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        remaining[i] = static_cast<double>(tasks[i].instruction_count);
    }

    ReadyQueue ready(kind, tasks);
    std::size_t next_arrival = 0;
    std::size_t finished = 0;
    constexpr double inf = std::numeric_limits<double>::infinity();

    while (finished < tasks.size()) {
        double now = next_arrival < tasks.size() ? tasks[next_arrival].arrival_time : inf;
        for (const auto& core : cores) {
            if (core.busy) now = std::min(now, core.slice_end);
        }

        // Arrivals at `now` enter the queue ahead of tasks preempted at `now`.
        while (next_arrival < tasks.size() && tasks[next_arrival].arrival_time <= now) {
            const auto& t = tasks[next_arrival];
            if (record_log) {
                log.add(now, "Simulator",
                        "Task " + std::to_string(t.id) + " arrived at time " + fmt_ms(t.arrival_time) +
                            ", with instruction " + std::to_string(t.instruction_count) + ".");
            }
            ready.push(next_arrival++);
        }

        for (std::size_t k = 0; k < cores.size(); ++k) {
            auto& core = cores[k];
            if (!core.busy || core.slice_end > now) continue;
            const double len = core.slice_end - core.slice_start;
            const std::size_t ti = core.task;
            res.per_core[k].busy_time += len;
            res.per_core[k].dynamic_energy += core.p_dynamic * len;
            res.per_task[ti].energy += (core.p_dynamic + core.p_leakage) * len;
            core.busy = false;
            if (core.completes) {
                remaining[ti] = 0.0;
                res.per_task[ti].finish_time = core.slice_end;
                res.per_task[ti].turnaround = core.slice_end - tasks[ti].arrival_time;
                ++finished;
                if (record_log) {
                    log.add(now, "Simulator",
                            "Task " + std::to_string(tasks[ti].id) + " finished at time " + fmt_ms(now) +
                                " on processor " + std::to_string(k) + ".");
                }
            } else {
                remaining[ti] -= core.rate * len;
                if (record_log) {
                    log.add(now, sched_name,
                            "Task " + std::to_string(tasks[ti].id) + " quantum expired, enqueuing again.");
                }
                ready.push(ti);
            }
        }

        for (std::size_t k = 0; k < cores.size() && !ready.empty(); ++k) {
            auto& core = cores[k];
            if (core.busy) continue;
            const std::size_t ti = ready.pop();
            const double needed = remaining[ti] / core.rate;
            core.busy = true;
            core.task = ti;
            core.slice_start = now;
            if (needed <= quantum) {
                core.completes = true;
                core.slice_end = now + needed;
            } else {
                core.completes = false;
                core.slice_end = now + quantum;
            }
            if (record_log) {
                log.add(now, "Simulator",
                        "Task " + std::to_string(tasks[ti].id) + " dispatched to processor " + std::to_string(k) +
                            " at time " + fmt_ms(now) + ".");
            }
        }
    }

    double makespan = 0.0;
    for (const auto& t : res.per_task) makespan = std::max(makespan, t.finish_time);
    res.makespan = makespan;

    double total = 0.0;
    for (std::size_t k = 0; k < cores.size(); ++k) {
        res.per_core[k].leakage_energy = cores[k].p_leakage * makespan;
        total += res.per_core[k].dynamic_energy + res.per_core[k].leakage_energy;
    }
    res.total_energy = total;

    double latency = 0.0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        latency += priority_weight(tasks[i].priority) * res.per_task[i].turnaround;
    }
    res.aggregated_latency = latency;
    return out;
}

void write_sim_result_json(const SimResult& result, std::ostream& out)
{
    nlohmann::ordered_json j;
    j["total_energy_j"] = result.total_energy;
    j["aggregated_latency_s"] = result.aggregated_latency;
    j["makespan_s"] = result.makespan;
    auto& cores = j["per_core"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < result.per_core.size(); ++k) {
        const auto& u = result.per_core[k];
        cores.push_back({{"core", k},
                         {"busy_time_s", u.busy_time},
                         {"dynamic_energy_j", u.dynamic_energy},
                         {"leakage_energy_j", u.leakage_energy}});
    }
    auto& per_task = j["per_task"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < result.per_task.size(); ++i) {
        const auto& t = result.per_task[i];
        per_task.push_back(
            {{"id", i}, {"finish_time_s", t.finish_time}, {"turnaround_s", t.turnaround}, {"energy_j", t.energy}});
    }
    out << j.dump(2) << '\n';
}

void write_sim_result_csv(const SimResult& result, const TaskSet& tasks, std::ostream& out)
{
    out << "id,arrival_ms,priority,finish_ms,turnaround_ms,energy_j\n";
    std::ostringstream row;
    row << std::setprecision(17);
    for (std::size_t i = 0; i < result.per_task.size() && i < tasks.size(); ++i) {
        const auto& t = result.per_task[i];
        row.str("");
        row << i << ',' << tasks.tasks[i].arrival_time * 1e3 << ',' << tasks.tasks[i].priority << ','
            << t.finish_time * 1e3 << ',' << t.turnaround * 1e3 << ',' << t.energy << '\n';
        out << row.str();
    }
}

}  // namespace hmsched
