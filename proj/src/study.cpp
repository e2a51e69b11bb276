#include "hmsched/study.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "hmsched/acquisition.hpp"
#include "hmsched/errors.hpp"
#include "hmsched/sobol.hpp"

namespace hmsched {

std::vector<std::string> ObjectiveSpec::violations() const
{
    std::vector<std::string> out;
    if (!(beta >= 0.0) || !std::isfinite(beta)) out.emplace_back("beta must be >= 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) out.emplace_back("gamma must be >= 0");
    if (mode == ObjectiveMode::Scalarized && beta == 0.0 && gamma == 0.0) {
        out.emplace_back("beta and gamma cannot both be 0");
    }
    if (!std::isfinite(penalty)) out.emplace_back("penalty must be finite");
    return out;
}

std::vector<std::string> StudyOptions::violations() const
{
    auto out = objective.violations();
    if (n_init < 1) out.emplace_back("n_init must be >= 1");
    if (budget < n_init) out.emplace_back("budget must be >= n_init");
    if (candidates.sobol + candidates.uniform + candidates.perturbations == 0) {
        out.emplace_back("candidate set is empty");
    }
    if (reference_margin < 0.0) out.emplace_back("reference_margin must be >= 0");
    return out;
}

double scalarized_cost(double energy, double latency, double beta, double gamma)
{
    if (!(energy > 0.0) || !(latency > 0.0)) {
        throw DomainError("scalarized_cost: energy and latency must be positive");
    }
    return beta * std::log(energy) + gamma * std::log(latency);
}

std::string to_string(TrialSource s)
{
    switch (s) {
    case TrialSource::Sobol: return "sobol";
    case TrialSource::BO: return "bo";
    case TrialSource::Random: return "random";
    }
    return "unknown";
}

std::size_t argmax_first(const std::vector<double>& scores)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

double Study::best_loss() const
{
    return incumbent ? trials[*incumbent].loss : std::numeric_limits<double>::infinity();
}

namespace {

void refresh_front_and_hv(Study& study)
{
    std::vector<ObjectivePair> pts;
    std::vector<std::size_t> idx;
    study.hv_trace.assign(study.trials.size(), 0.0);
    for (const auto& t : study.trials) {
        if (!t.penalized) {
            pts.push_back(t.objectives);
            idx.push_back(t.index);
        }
        if (study.objective.mode == ObjectiveMode::MultiObjective && study.reference) {
            const ParetoFront f = clip_to_reference(pareto_front(pts, idx), *study.reference);
            study.hv_trace[t.index] = hypervolume_2d(f, *study.reference);
        }
    }
    study.front = pareto_front(pts, idx);
    if (study.objective.mode != ObjectiveMode::MultiObjective) study.hv_trace.clear();
}

void maybe_set_reference(Study& study, const StudyOptions& options)
{
    if (study.reference) return;
    if (options.reference) {
        study.reference = options.reference;
    } else {
        if (study.trials.size() < options.n_init) return;
        double lo1 = std::numeric_limits<double>::infinity(), hi1 = -lo1;
        double lo2 = lo1, hi2 = -lo1;
        std::size_t valid = 0;
        // Warm-up trials, or every trial so far if the warm-up had no valid one.
        const std::size_t span = std::min(options.n_init, study.trials.size());
        for (std::size_t pass = 0; pass < 2 && valid == 0; ++pass) {
            const std::size_t upto = pass == 0 ? span : study.trials.size();
            for (std::size_t i = 0; i < upto; ++i) {
                const auto& t = study.trials[i];
                if (t.penalized) continue;
                ++valid;
                lo1 = std::min(lo1, t.objectives.first);
                hi1 = std::max(hi1, t.objectives.first);
                lo2 = std::min(lo2, t.objectives.second);
                hi2 = std::max(hi2, t.objectives.second);
            }
        }
        if (valid == 0) return;
        auto margin = [&](double lo, double hi) {
            const double range = hi - lo;
            return options.reference_margin * (range > 0.0 ? range : std::max(std::abs(hi), 1.0));
        };
        study.reference = ReferencePoint{hi1 + margin(lo1, hi1), hi2 + margin(lo2, hi2)};
    }
    for (auto& t : study.trials) {
        if (t.penalized) t.objectives = *study.reference;
    }
}

const KernelSpec* last_fit(const Study& study, const std::string& label)
{
    for (auto it = study.gp_history.rbegin(); it != study.gp_history.rend(); ++it) {
        if (it->objective == label) return &it->kernel;
    }
    return nullptr;
}

GpModel fit_for(Study& study, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, KernelFamily family,
                const std::string& label, std::uint64_t seed, const StudyOptions& options)
{
    FitOptions fit;
    fit.restarts = options.gp_restarts;
    fit.max_iterations = options.gp_max_iterations;
    fit.seed = seed;
    if (const KernelSpec* prev = last_fit(study, label)) fit.warm_start = *prev;
    return fit_gp(x, y, family, fit);
}

Eigen::MatrixXd encoded_trials(const Study& study, const SearchSpace& space)
{
    const auto d = static_cast<Eigen::Index>(space.dimension());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(study.trials.size()), d);
    for (std::size_t i = 0; i < study.trials.size(); ++i) {
        const auto v = encode(study.trials[i].point, space);
        for (Eigen::Index k = 0; k < d; ++k) x(static_cast<Eigen::Index>(i), k) = v[static_cast<std::size_t>(k)];
    }
    return x;
}

/// Loss targets with penalized trials clipped to the worst valid loss.
std::optional<Eigen::VectorXd> loss_targets(const Study& study)
{
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& t : study.trials) {
        if (!t.penalized) worst = std::max(worst, t.loss);
    }
    if (!std::isfinite(worst)) return std::nullopt;
    Eigen::VectorXd y(static_cast<Eigen::Index>(study.trials.size()));
    for (std::size_t i = 0; i < study.trials.size(); ++i) {
        const auto& t = study.trials[i];
        y[static_cast<Eigen::Index>(i)] = t.penalized ? worst : t.loss;
    }
    return y;
}

void fit_final_models(Study& study, const SearchSpace& space, const StudyOptions& options)
{
    if (study.trials.empty()) return;
    const Eigen::MatrixXd x = encoded_trials(study, space);
    Rng rng = Rng(options.seed).split("final-fit");
    try {
        if (options.objective.mode == ObjectiveMode::Scalarized) {
            if (auto y = loss_targets(study)) {
                study.final_models["loss"] = fit_for(study, x, *y, options.kernel, "loss", rng.next_u64(), options);
            }
        } else if (study.reference) {
            const auto n = static_cast<Eigen::Index>(study.trials.size());
            Eigen::VectorXd e(n), t(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                e[i] = study.trials[static_cast<std::size_t>(i)].objectives.first;
                t[i] = study.trials[static_cast<std::size_t>(i)].objectives.second;
            }
            study.final_models["energy"] = fit_for(study, x, e, options.kernel, "energy", rng.next_u64(), options);
            study.final_models["time"] = fit_for(study, x, t, options.kernel, "time", rng.next_u64(), options);
        }
    } catch (const NumericalError& e) {
        study.log.push_back(std::string("INFO:Optimizer:final GP fit failed: ") + e.what());
    }
}

}  // namespace

void record_trial(Study& study, const SearchSpace& space, const StudyOptions& options, const DesignPoint& point,
                  TrialSource source, const Evaluator& evaluator)
{
    Trial t;
    t.index = study.trials.size();
    t.point = point;
    t.source = source;
    try {
        if (auto v = validate(point, space); !v.empty()) throw ValidationError(std::move(v));
        const Evaluation e = evaluator(point);
        if (!(e.energy > 0.0) || !(e.latency > 0.0) || !std::isfinite(e.energy) || !std::isfinite(e.latency)) {
            throw DomainError("evaluation returned non-positive energy or latency");
        }
        t.energy = e.energy;
        t.latency = e.latency;
        t.loss = scalarized_cost(e.energy, e.latency, options.objective.beta, options.objective.gamma);
        t.objectives = {std::log(e.energy), std::log(e.latency)};
    } catch (const std::exception& ex) {
        t.penalized = true;
        t.loss = options.objective.penalty;
        t.note = ex.what();
        if (study.reference) t.objectives = *study.reference;
        study.log.push_back("INFO:Optimizer:Trial " + std::to_string(t.index) + " penalized: " + ex.what());
    }
    study.trials.push_back(std::move(t));
    const Trial& added = study.trials.back();

    if (!study.incumbent || added.loss < study.trials[*study.incumbent].loss) {
        study.incumbent = added.index;
    }
    study.incumbent_trace.push_back(study.trials[*study.incumbent].loss);

    if (options.objective.mode == ObjectiveMode::MultiObjective) maybe_set_reference(study, options);
    refresh_front_and_hv(study);
}

DesignPoint propose_next(Study& study, const SearchSpace& space, KernelFamily family, const ObjectiveSpec& objective,
                         Rng& rng, const StudyOptions& options)
{
    if (study.trials.empty()) throw DomainError("propose_next: need at least one completed trial");
    const std::size_t d = space.dimension();
    const std::size_t next_index = study.trials.size();
    const std::uint64_t fit_seed_a = rng.next_u64();
    const std::uint64_t fit_seed_b = rng.next_u64();

    // Candidate vectors: Sobol block, uniform draws, perturbations of the incumbent(s).
    std::size_t bo_so_far = 0;
    for (const auto& t : study.trials) bo_so_far += t.source == TrialSource::BO;
    const auto& c = options.candidates;
    std::vector<std::vector<double>> raw;
    raw.reserve(c.sobol + c.uniform + c.perturbations);
    if (c.sobol > 0) {
        const SobolSequence sobol(static_cast<int>(d));
        for (std::size_t i = 0; i < c.sobol; ++i) raw.push_back(sobol.point(bo_so_far * c.sobol + i + 1));
    }
    for (std::size_t i = 0; i < c.uniform; ++i) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.uniform();
        raw.push_back(std::move(v));
    }
    std::vector<std::vector<double>> anchors;
    if (objective.mode == ObjectiveMode::Scalarized) {
        if (study.incumbent && !study.trials[*study.incumbent].penalized) {
            anchors.push_back(encode(study.trials[*study.incumbent].point, space));
        }
    } else {
        for (const auto& m : study.front.members) anchors.push_back(encode(study.trials[m.index].point, space));
    }
    for (std::size_t i = 0; i < c.perturbations && !anchors.empty(); ++i) {
        std::vector<double> v = anchors[i % anchors.size()];
        for (auto& x : v) x = std::clamp(x + c.perturbation_sigma * rng.normal(), 0.0, 1.0);
        raw.push_back(std::move(v));
    }

    auto fallback = [&](const std::string& why) {
        study.log.push_back("INFO:Optimizer:Trial " + std::to_string(next_index) + ": " + why +
                            "; falling back to a random sample.");
        return random_sample(space, rng);
    };

    // Score candidates at their lattice projection, where the GP saw the data.
    std::vector<DesignPoint> decoded;
    decoded.reserve(raw.size());
    Eigen::MatrixXd cand(static_cast<Eigen::Index>(raw.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < raw.size(); ++i) {
        decoded.push_back(decode(raw[i], space));
        const auto v = encode(decoded.back(), space);
        for (std::size_t k = 0; k < d; ++k) cand(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[k];
    }

    const Eigen::MatrixXd x = encoded_trials(study, space);
    std::vector<double> scores(raw.size());
    try {
        if (objective.mode == ObjectiveMode::Scalarized) {
            const auto y = loss_targets(study);
            if (!y) return fallback("no valid trials to model");
            const GpModel model = fit_for(study, x, *y, family, "loss", fit_seed_a, options);
            study.gp_history.push_back({next_index, "loss", model.kernel, model.lml, model.degenerate, 0.0, {}});
            const double best = study.best_loss();
            const auto post = predict(model, cand);
            for (std::size_t i = 0; i < post.size(); ++i) {
                scores[i] = log_expected_improvement(post[i].mean, post[i].variance, best);
            }
        } else {
            if (!study.reference) return fallback("no reference point yet");
            const auto n = static_cast<Eigen::Index>(study.trials.size());
            Eigen::VectorXd e(n), t(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                e[i] = study.trials[static_cast<std::size_t>(i)].objectives.first;
                t[i] = study.trials[static_cast<std::size_t>(i)].objectives.second;
            }
            const GpModel me = fit_for(study, x, e, family, "energy", fit_seed_a, options);
            const GpModel mt = fit_for(study, x, t, family, "time", fit_seed_b, options);
            study.gp_history.push_back({next_index, "energy", me.kernel, me.lml, me.degenerate, 0.0, {}});
            study.gp_history.push_back({next_index, "time", mt.kernel, mt.lml, mt.degenerate, 0.0, {}});
            const ParetoFront front = clip_to_reference(study.front, *study.reference);
            const auto pe = predict(me, cand);
            const auto pt = predict(mt, cand);
            for (std::size_t i = 0; i < pe.size(); ++i) scores[i] = ehvi(pe[i], pt[i], front, *study.reference);
        }
    } catch (const std::exception& ex) {
        return fallback(std::string("GP fit failed (") + ex.what() + ")");
    }
    const std::size_t best = argmax_first(scores);
    const std::size_t n_sobol = c.sobol;
    const std::size_t n_uniform = c.uniform;
    const char* origin = best < n_sobol ? "sobol" : best < n_sobol + n_uniform ? "uniform" : "perturbation";
    const std::size_t fits = objective.mode == ObjectiveMode::Scalarized ? 1 : 2;
    for (std::size_t i = study.gp_history.size() - fits; i < study.gp_history.size(); ++i) {
        study.gp_history[i].acquisition = scores[best];
        study.gp_history[i].candidate = origin;
    }
    return decoded[best];
}

namespace {

Study new_study(const SearchSpace& space, const StudyOptions& options, std::string method)
{
    auto v = options.violations();
    auto dv = space.definition_violations();
    v.insert(v.end(), dv.begin(), dv.end());
    if (!v.empty()) throw ValidationError(std::move(v));
    Study s;
    s.method = std::move(method);
    s.objective = options.objective;
    s.kernel = options.kernel;
    s.seed = options.seed;
    return s;
}

}  // namespace

Study run_study(const SearchSpace& space, const StudyOptions& options, const Evaluator& evaluator)
{
    Study study = new_study(space, options, "bo");
    Rng propose_rng = Rng(options.seed).split("propose");
    for (const auto& p : sobol_sample(options.n_init, space, options.seed)) {
        record_trial(study, space, options, p, TrialSource::Sobol, evaluator);
    }
    while (study.trials.size() < options.budget) {
        const DesignPoint p = propose_next(study, space, options.kernel, options.objective, propose_rng, options);
        record_trial(study, space, options, p, TrialSource::BO, evaluator);
    }
    if (options.final_fit && options.budget > options.n_init) fit_final_models(study, space, options);
    return study;
}

Study random_search(const SearchSpace& space, const StudyOptions& options, const Evaluator& evaluator)
{
    StudyOptions opts = options;
    opts.n_init = std::min(options.n_init, options.budget);
    if (opts.budget < 1) throw ValidationError({"budget must be >= 1"});
    if (opts.n_init < 1) opts.n_init = 1;
    Study study = new_study(space, opts, "random");
    Rng rng = Rng(options.seed).split("random-search");
    while (study.trials.size() < opts.budget) {
        record_trial(study, space, opts, random_sample(space, rng), TrialSource::Random, evaluator);
    }
    return study;
}

nlohmann::ordered_json point_to_json(const DesignPoint& point)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, value] : point.values) {
        std::visit([&](const auto& v) { j[name] = v; }, value);
    }
    return j;
}

namespace {

nlohmann::ordered_json kernel_json(const KernelSpec& k, const std::vector<std::string>& names)
{
    nlohmann::ordered_json ls = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < k.length_scales.size() && i < names.size(); ++i) ls[names[i]] = k.length_scales[i];
    return {{"family", to_string(k.family)},
            {"length_scales", ls},
            {"signal_variance", k.signal_variance},
            {"noise_variance", k.noise_variance}};
}

nlohmann::ordered_json num_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json study_to_json(const Study& study, const SearchSpace& space)
{
    const auto names = space.encoded_names();
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["method"] = study.method;
    j["kernel"] = to_string(study.kernel);
    j["seed"] = study.seed;
    j["objective"] = {{"mode", study.objective.mode == ObjectiveMode::Scalarized ? "scalarized" : "multi_objective"},
                      {"beta", study.objective.beta},
                      {"gamma", study.objective.gamma},
                      {"penalty", study.objective.penalty}};
    j["config"] = study.config.is_null() ? nlohmann::ordered_json::object() : study.config;
    j["encoded_dimensions"] = names;

    auto& trials = j["trials"] = nlohmann::ordered_json::array();
    for (const auto& t : study.trials) {
        nlohmann::ordered_json row;
        row["index"] = t.index;
        row["source"] = to_string(t.source);
        row["point"] = point_to_json(t.point);
        row["energy_j"] = t.penalized ? nlohmann::ordered_json(nullptr) : num_or_null(t.energy);
        row["latency_s"] = t.penalized ? nlohmann::ordered_json(nullptr) : num_or_null(t.latency);
        row["loss"] = num_or_null(t.loss);
        row["objectives"] = {num_or_null(t.objectives.first), num_or_null(t.objectives.second)};
        row["penalized"] = t.penalized;
        if (!t.note.empty()) row["note"] = t.note;
        trials.push_back(std::move(row));
    }

    if (study.incumbent) {
        const auto& t = study.trials[*study.incumbent];
        j["incumbent"] = {{"trial", t.index}, {"loss", num_or_null(t.loss)}, {"point", point_to_json(t.point)}};
    } else {
        j["incumbent"] = nullptr;
    }
    j["incumbent_trace"] = study.incumbent_trace;
    if (study.reference) {
        j["reference_point"] = {study.reference->first, study.reference->second};
    } else {
        j["reference_point"] = nullptr;
    }
    auto& front = j["pareto_front"] = nlohmann::ordered_json::array();
    for (const auto& m : study.front.members) {
        const auto& t = study.trials[m.index];
        front.push_back({{"trial", m.index},
                         {"ln_energy", m.value.first},
                         {"ln_latency", m.value.second},
                         {"energy_j", t.energy},
                         {"latency_s", t.latency}});
    }
    j["hv_trace"] = study.hv_trace;

    auto& refits = j["gp_refits"] = nlohmann::ordered_json::array();
    for (const auto& g : study.gp_history) {
        auto row = kernel_json(g.kernel, names);
        nlohmann::ordered_json out;
        out["trial"] = g.trial;
        out["objective"] = g.objective;
        for (auto it = row.begin(); it != row.end(); ++it) out[it.key()] = it.value();
        out["lml"] = num_or_null(g.lml);
        out["degenerate"] = g.degenerate;
        out["acquisition"] = num_or_null(g.acquisition);
        out["candidate"] = g.candidate;
        refits.push_back(std::move(out));
    }
    auto& finals = j["final_models"] = nlohmann::ordered_json::object();
    for (const auto& [label, model] : study.final_models) {
        auto row = kernel_json(model.kernel, names);
        row["lml"] = num_or_null(model.lml);
        row["degenerate"] = model.degenerate;
        finals[label] = std::move(row);
    }
    j["log"] = study.log;
    return j;
}

void write_study_json(const Study& study, const SearchSpace& space, std::ostream& out)
{
    out << study_to_json(study, space).dump(2) << '\n';
}

void write_trials_csv(const Study& study, const SearchSpace& space, std::ostream& out)
{
    out << "index,source";
    for (const auto& p : space.params) out << ',' << p.name;
    out << ",energy_j,latency_s,loss,ln_energy,ln_latency,penalized\n";
    std::ostringstream row;
    row << std::setprecision(17);
    for (const auto& t : study.trials) {
        row.str("");
        row << t.index << ',' << to_string(t.source);
        for (const auto& p : space.params) {
            row << ',';
            auto it = t.point.values.find(p.name);
            if (it == t.point.values.end()) continue;
            std::visit([&](const auto& v) { row << v; }, it->second);
        }
        row << ',' << t.energy << ',' << t.latency << ',' << t.loss << ',' << t.objectives.first << ','
            << t.objectives.second << ',' << (t.penalized ? 1 : 0) << '\n';
        out << row.str();
    }
}

}  // namespace hmsched
