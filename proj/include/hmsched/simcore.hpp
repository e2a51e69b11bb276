#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmsched/workload.hpp"

namespace hmsched {

/// Processor power model constants, SI units throughout.
struct PowerConstants {
    double k_v = 5e9;               // Hz per volt
    double b_f = 0.0;               // Hz
    double capacitance = 1e-9;      // F
    double leakage_current = 0.3;   // A
    double activity = 1.0;          // switching activity while executing
    double ipc = 1.0;               // instructions per cycle

    [[nodiscard]] std::vector<std::string> violations() const;
    bool operator==(const PowerConstants&) const = default;
};

enum class CoreClass { Little = 0, Medium = 1, Big = 2 };
inline constexpr std::array<CoreClass, 3> kCoreClasses{CoreClass::Little, CoreClass::Medium, CoreClass::Big};
std::string to_string(CoreClass c);

struct CoreSpec {
    int id = 0;
    CoreClass core_class = CoreClass::Little;
    double frequency = 1e9;  // Hz
};

enum class SchedulerKind { FCFS, RoundRobin, Priority };
std::string to_string(SchedulerKind k);
/// Accepts "FCFS", "RR"/"RoundRobin", "Priority".
SchedulerKind parse_scheduler(const std::string& name);

struct SchedulerPolicy {
    SchedulerKind kind = SchedulerKind::FCFS;
    std::optional<double> quantum;  // s; present iff RoundRobin or Priority

    static SchedulerPolicy fcfs() { return {SchedulerKind::FCFS, std::nullopt}; }
    static SchedulerPolicy round_robin(double quantum) { return {SchedulerKind::RoundRobin, quantum}; }
    static SchedulerPolicy priority(double quantum) { return {SchedulerKind::Priority, quantum}; }
};

struct SystemConfig {
    std::vector<CoreSpec> cores;
    SchedulerPolicy policy;
    PowerConstants constants;

    /// Cores laid out little, medium, big; ids follow that order.
    static SystemConfig from_classes(const std::array<int, 3>& counts, const std::array<double, 3>& frequencies,
                                     SchedulerPolicy policy, PowerConstants constants = {});

    [[nodiscard]] std::vector<std::string> violations() const;
};

struct TaskOutcome {
    double finish_time = 0.0;  // s
    double turnaround = 0.0;   // s
    double energy = 0.0;       // J, dynamic + leakage while the task runs
};

struct CoreUsage {
    double busy_time = 0.0;       // s
    double dynamic_energy = 0.0;  // J
    double leakage_energy = 0.0;  // J, over [0, makespan]
};

struct SimResult {
    std::vector<TaskOutcome> per_task;  // indexed by task id
    std::vector<CoreUsage> per_core;    // indexed by core id
    double total_energy = 0.0;
    double aggregated_latency = 0.0;
    double makespan = 0.0;
};

struct LogRecord {
    double time = 0.0;  // s
    std::string component;
    std::string message;

    bool operator==(const LogRecord&) const = default;
};

/// Records rendered as `INFO:<component>:<message>` lines.
class EventLog {
public:
    void add(double time, std::string component, std::string message);
    [[nodiscard]] const std::vector<LogRecord>& records() const { return records_; }
    [[nodiscard]] bool empty() const { return records_.empty(); }
    void write(std::ostream& out) const;

private:
    std::vector<LogRecord> records_;
};

struct SimOutput {
    SimResult result;
    EventLog log;
};

// Physics. Frequencies in Hz, times in s, energies in J.

/// V = (f - b_f) / k_V. Throws DomainError when f < b_f.
double voltage_from_frequency(double frequency, const PowerConstants& c);
/// alpha * C * V^2 * f.
double dynamic_power(double frequency, const PowerConstants& c);
/// V * I_leakage.
double leakage_power(double frequency, const PowerConstants& c);
/// n_ic / (ipc * f).
double execution_time(double instruction_count, const PowerConstants& c, double frequency);
/// Dynamic plus leakage energy of running `instruction_count` instructions
/// at `frequency`. With b_f = 0 this is (alpha C f^2 / k_V^2 + I / k_V) * n_ic / ipc.
double task_active_energy(double instruction_count, double frequency, const PowerConstants& c);
double idle_leakage_energy(double frequency, double duration, const PowerConstants& c);

/// 1 / (p + 1)^2.
double priority_weight(int priority);
/// Sum of priority_weight(p_i) * t_i (not normalised).
double aggregated_latency(std::span<const double> latencies, std::span<const int> priorities);

/// Discrete-event run of `tasks` on `config` until every task completes.
/// Throws ConfigError for an invalid configuration (e.g. zero cores).
SimOutput run_simulation(const SystemConfig& config, const TaskSet& tasks, bool record_log = true);

/// Writes the result as JSON (schema in README) to `out`.
void write_sim_result_json(const SimResult& result, std::ostream& out);
/// Per-task CSV: id,arrival_ms,priority,finish_ms,turnaround_ms,energy_j.
void write_sim_result_csv(const SimResult& result, const TaskSet& tasks, std::ostream& out);

}  // namespace hmsched
