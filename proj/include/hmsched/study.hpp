#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmsched/gp.hpp"
#include "hmsched/pareto.hpp"
#include "hmsched/rng.hpp"
#include "hmsched/searchspace.hpp"

namespace hmsched {

enum class ObjectiveMode { Scalarized, MultiObjective };

struct ObjectiveSpec {
    ObjectiveMode mode = ObjectiveMode::Scalarized;
    double beta = 1.0;   // weight on ln E
    double gamma = 1.0;  // weight on ln T
    double penalty = 1e6;

    [[nodiscard]] std::vector<std::string> violations() const;
};

/// beta * ln(E) + gamma * ln(T). Throws DomainError unless E, T > 0.
double scalarized_cost(double energy, double latency, double beta, double gamma);

enum class TrialSource { Sobol, BO, Random };
std::string to_string(TrialSource s);

/// Raw objectives of one evaluated design point.
struct Evaluation {
    double energy = 0.0;   // J
    double latency = 0.0;  // s
};

/// Maps a design point to its objectives; may throw.
using Evaluator = std::function<Evaluation(const DesignPoint&)>;

struct Trial {
    std::size_t index = 0;
    DesignPoint point;
    double energy = 0.0;
    double latency = 0.0;
    double loss = 0.0;            // scalarized loss (penalty when penalized)
    ObjectivePair objectives;     // (ln E, ln T); the reference point when penalized
    bool penalized = false;
    TrialSource source = TrialSource::Sobol;
    std::string note;             // failure reason, fallback marker
};

/// Hyperparameters of one GP refit.
struct GpSnapshot {
    std::size_t trial = 0;  // index of the trial the fit proposed
    std::string objective;  // "loss", "energy" or "time"
    KernelSpec kernel;
    double lml = 0.0;
    bool degenerate = false;
    double acquisition = 0.0;  // value at the chosen candidate (LogEI or EHVI)
    std::string candidate;     // "sobol", "uniform" or "perturbation"
};

struct CandidateOptions {
    std::size_t sobol = 1024;
    std::size_t uniform = 512;
    std::size_t perturbations = 16;
    double perturbation_sigma = 0.05;
};

struct StudyOptions {
    ObjectiveSpec objective;
    KernelFamily kernel = KernelFamily::Matern52;
    std::size_t budget = 100;
    std::size_t n_init = 10;
    std::uint64_t seed = 0;
    CandidateOptions candidates;
    int gp_restarts = 8;
    int gp_max_iterations = 100;
    std::optional<ReferencePoint> reference;  // overrides the warm-up rule
    double reference_margin = 0.1;
    bool final_fit = true;  // fit models on all trials at the end for analysis

    [[nodiscard]] std::vector<std::string> violations() const;
};

struct Study {
    std::string method;  // "bo" or "random"
    ObjectiveSpec objective;
    KernelFamily kernel = KernelFamily::Matern52;
    std::uint64_t seed = 0;
    std::vector<Trial> trials;
    std::optional<std::size_t> incumbent;  // scalarized: best trial index
    std::vector<double> incumbent_trace;   // running best loss per trial
    ParetoFront front;                     // over (ln E, ln T) of non-penalized trials
    std::optional<ReferencePoint> reference;
    std::vector<double> hv_trace;          // multi-objective only
    std::vector<GpSnapshot> gp_history;
    std::vector<std::string> log;
    nlohmann::ordered_json config;         // snapshot supplied by the caller
    std::map<std::string, GpModel> final_models;  // "loss" or "energy"/"time"

    [[nodiscard]] double best_loss() const;
};

/// Next point to evaluate: fits GP(s) to the encoded trials and maximizes
/// LogEI (scalarized) or EHVI (multi-objective) over a candidate set. Falls
/// back to random_sample if the fit fails. Appends refits to study.gp_history.
DesignPoint propose_next(Study& study, const SearchSpace& space, KernelFamily family, const ObjectiveSpec& objective,
                         Rng& rng, const StudyOptions& options = {});

/// Index of the largest score; ties go to the earliest.
std::size_t argmax_first(const std::vector<double>& scores);

/// Sobol warm-up of n_init points followed by BO proposals up to budget.
Study run_study(const SearchSpace& space, const StudyOptions& options, const Evaluator& evaluator);

/// `budget` independent uniform draws with the same bookkeeping.
Study random_search(const SearchSpace& space, const StudyOptions& options, const Evaluator& evaluator);

/// Adds a trial for `point`, evaluating it and updating incumbent, front,
/// reference and hv_trace.
void record_trial(Study& study, const SearchSpace& space, const StudyOptions& options, const DesignPoint& point,
                  TrialSource source, const Evaluator& evaluator);

nlohmann::ordered_json point_to_json(const DesignPoint& point);
nlohmann::ordered_json study_to_json(const Study& study, const SearchSpace& space);
void write_study_json(const Study& study, const SearchSpace& space, std::ostream& out);
/// index,source,<params...>,energy_j,latency_s,loss,ln_energy,ln_latency,penalized
void write_trials_csv(const Study& study, const SearchSpace& space, std::ostream& out);

}  // namespace hmsched
