#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmsched/searchspace.hpp"
#include "hmsched/simcore.hpp"
#include "hmsched/study.hpp"
#include "hmsched/workload.hpp"

namespace hmsched {

enum class Scenario { Single, KernelComparison, PreferenceSweep, LambdaSweep, Moo };
std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

/// Resolved experiment description, in SI units. The file format uses GHz,
/// ms and tasks per ms; see README.
struct ExperimentConfig {
    int schema_version = 1;
    std::string name = "experiment";
    Scenario scenario = Scenario::Single;
    WorkloadSpec workload;
    bool workload_seed_fixed = false;  // false: each replicate uses its own seed for the task set
    PowerConstants constants;
    SearchSpace space = default_space();
    ObjectiveSpec objective;
    std::vector<std::pair<double, double>> weights{{1.0, 1.0}, {3.0, 1.0}, {1.0, 3.0}};
    KernelFamily kernel = KernelFamily::Matern52;
    std::vector<KernelFamily> kernels{KernelFamily::RBF, KernelFamily::Matern32, KernelFamily::Matern52};
    std::vector<double> lambdas{500.0, 1000.0, 2500.0, 5000.0};  // tasks per second
    std::size_t budget = 100;
    std::size_t n_init = 10;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    CandidateOptions candidates;
    int gp_restarts = 8;
    int gp_max_iterations = 100;
    double reference_margin = 0.1;
    bool random_baseline = true;
    bool plots = true;
    std::filesystem::path output_dir = "results";

    [[nodiscard]] std::vector<std::string> violations() const;
};

/// Parses YAML text. An empty document yields the defaults. Throws ConfigError
/// (with line numbers) for malformed YAML or wrongly typed values and
/// ValidationError listing every unknown key and invalid value.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// The resolved config in file units, suitable for re-parsing.
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

/// Hardware and policy described by a design point. Class counts whose
/// parameter is missing from the point are 0; a missing scheduler means FCFS.
SystemConfig system_config_from_point(const DesignPoint& point, const PowerConstants& constants);

/// Simulates `tasks` on each proposed configuration and reports
/// (total energy, aggregated latency).
Evaluator make_evaluator(TaskSet tasks, PowerConstants constants);

}  // namespace hmsched
