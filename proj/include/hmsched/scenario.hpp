#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmsched/experiment.hpp"

namespace hmsched {

inline constexpr const char* kVersion = "0.1.0";

/// One independent (variant, method, seed) study of a scenario.
struct RunSpec {
    std::string id;       // also the run's directory relative to the output root
    std::string variant;  // e.g. "default", "kernel_rbf", "beta_3_gamma_1", "lambda_0.5", "moo"
    std::string method;   // "bo" or "random"
    KernelFamily kernel = KernelFamily::Matern52;
    std::uint64_t seed = 0;
    ObjectiveSpec objective;
    WorkloadSpec workload;
};

struct RunRecord {
    RunSpec spec;
    bool ok = false;
    std::string error;
    double seconds = 0.0;
    std::vector<std::string> outputs;  // relative to the output root
    std::optional<std::size_t> incumbent_trial;
    DesignPoint incumbent;
    double best_loss = 0.0;
    double energy = 0.0;
    double latency = 0.0;
    std::size_t front_size = 0;
    std::optional<double> final_hv;
};

struct RunManifest {
    nlohmann::ordered_json config;
    std::string tool_version = kVersion;
    std::filesystem::path output_dir;
    std::vector<RunRecord> runs;
    std::vector<std::string> outputs;  // scenario-level files
    double seconds = 0.0;

    [[nodiscard]] bool all_ok() const;
};

struct RunOptions {
    unsigned jobs = 1;
    bool quiet = false;
    std::ostream* log = nullptr;  // progress lines; nullptr means std::cerr
};

/// Every study the scenario runs, in output order.
std::vector<RunSpec> plan_runs(const ExperimentConfig& config);

/// Executes one planned study and writes its files under `root / spec.id`.
/// Failures are captured in the record rather than thrown.
RunRecord execute_run(const ExperimentConfig& config, const RunSpec& spec, const std::filesystem::path& root);

/// Runs the whole scenario, then writes manifest.json, summary.csv and
/// summary.txt (plus scenario-level plots) under config.output_dir.
RunManifest run_scenario(const ExperimentConfig& config, const RunOptions& options = {});

nlohmann::ordered_json manifest_to_json(const RunManifest& manifest);

/// Fixed-width table, one panel per variant; absent core classes print "-".
std::string print_summary(const RunManifest& manifest);
void write_summary_csv(const RunManifest& manifest, std::ostream& out);

}  // namespace hmsched
