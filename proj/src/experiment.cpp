#include "hmsched/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "hmsched/errors.hpp"

namespace hmsched {

std::string to_string(Scenario s)
{
    switch (s) {
    case Scenario::Single: return "single";
    case Scenario::KernelComparison: return "kernel_comparison";
    case Scenario::PreferenceSweep: return "preference_sweep";
    case Scenario::LambdaSweep: return "lambda_sweep";
    case Scenario::Moo: return "moo";
    }
    return "unknown";
}

Scenario parse_scenario(const std::string& name)
{
    for (auto s : {Scenario::Single, Scenario::KernelComparison, Scenario::PreferenceSweep, Scenario::LambdaSweep,
                   Scenario::Moo}) {
        if (to_string(s) == name) return s;
    }
    throw ConfigError("unknown scenario '" + name +
                      "' (expected single, kernel_comparison, preference_sweep, lambda_sweep or moo)");
}

std::vector<std::string> ExperimentConfig::violations() const
{
    std::vector<std::string> out;
    auto append = [&](const std::string& prefix, const std::vector<std::string>& v) {
        for (const auto& s : v) out.push_back(prefix + s);
    };
    if (schema_version != 1) out.push_back("schema_version " + std::to_string(schema_version) + " is not supported");
    append("workload: ", workload.violations());
    append("constants: ", constants.violations());
    append("space: ", space.definition_violations());
    append("objective: ", objective.violations());
    if (seeds.empty()) out.emplace_back("seeds must not be empty");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        out.emplace_back("seeds must be distinct");
    }
    if (n_init < 1) out.emplace_back("n_init must be >= 1");
    if (budget < n_init) {
        out.push_back("budget (" + std::to_string(budget) + ") must be >= n_init (" + std::to_string(n_init) + ")");
    }
    if (scenario == Scenario::KernelComparison && kernels.empty()) out.emplace_back("kernels must not be empty");
    if (scenario == Scenario::PreferenceSweep) {
        if (weights.empty()) out.emplace_back("weights must not be empty");
        for (const auto& [b, g] : weights) {
            if (!(b >= 0.0) || !(g >= 0.0) || (b == 0.0 && g == 0.0)) {
                out.emplace_back("weights need beta, gamma >= 0 and not both 0");
            }
        }
    }
    if (scenario == Scenario::LambdaSweep) {
        if (lambdas.empty()) out.emplace_back("lambdas must not be empty");
        for (double l : lambdas) {
            if (!(l > 0.0)) out.emplace_back("lambdas must be positive");
        }
    }
    if (candidates.sobol + candidates.uniform + candidates.perturbations == 0) {
        out.emplace_back("optimizer: candidate set is empty");
    }
    if (!(candidates.perturbation_sigma >= 0.0)) out.emplace_back("optimizer: perturbation_sigma must be >= 0");
    if (gp_restarts < 1) out.emplace_back("optimizer: gp_restarts must be >= 1");
    if (gp_max_iterations < 1) out.emplace_back("optimizer: gp_max_iterations must be >= 1");
    if (!(reference_margin >= 0.0)) out.emplace_back("optimizer: reference_margin must be >= 0");
    return out;
}

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    std::string at(const YAML::Node& n) const
    {
        const auto m = n.Mark();
        return m.line >= 0 ? source_ + ":" + std::to_string(m.line + 1) : source_;
    }

    /// Records every key of `map` not in `allowed`.
    void keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& ctx)
    {
        if (!map.IsMap()) {
            throw ConfigError(at(map) + ": '" + ctx + "' must be a mapping");
        }
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
                problems.push_back(at(kv.first) + ": unknown key '" + key + "'" +
                                   (ctx.empty() ? std::string() : " in " + ctx));
            }
        }
    }

    template <class T>
    T get(const YAML::Node& n, const std::string& what, const char* type)
    {
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(at(n) + ": '" + what + "' must be " + type);
        }
    }

    double real(const YAML::Node& n, const std::string& what)
    {
        const double v = get<double>(n, what, "a number");
        if (!std::isfinite(v)) throw ConfigError(at(n) + ": '" + what + "' must be finite");
        return v;
    }

    std::int64_t integer(const YAML::Node& n, const std::string& what)
    {
        return get<std::int64_t>(n, what, "an integer");
    }

    std::size_t count(const YAML::Node& n, const std::string& what)
    {
        const auto v = integer(n, what);
        if (v < 0) throw ConfigError(at(n) + ": '" + what + "' must be >= 0");
        return static_cast<std::size_t>(v);
    }

    std::string text(const YAML::Node& n, const std::string& what) { return get<std::string>(n, what, "a string"); }

    bool flag(const YAML::Node& n, const std::string& what) { return get<bool>(n, what, "true or false"); }

    YAML::Node seq(const YAML::Node& n, const std::string& what)
    {
        if (!n.IsSequence()) throw ConfigError(at(n) + ": '" + what + "' must be a list");
        return n;
    }

    std::vector<std::string> problems;

private:
    std::string source_;
};

void read_workload(Reader& r, const YAML::Node& n, ExperimentConfig& c)
{
    r.keys(n, {"arrival_rate_per_ms", "n_tasks", "horizon_ms", "priority_levels", "instructions", "seed"}, "workload");
    if (n["arrival_rate_per_ms"]) c.workload.arrival_rate = r.real(n["arrival_rate_per_ms"], "arrival_rate_per_ms") * 1e3;
    if (n["n_tasks"]) c.workload.max_tasks = r.integer(n["n_tasks"], "n_tasks");
    if (n["horizon_ms"]) c.workload.horizon = r.real(n["horizon_ms"], "horizon_ms") * 1e-3;
    if (n["priority_levels"]) c.workload.priority_levels = static_cast<int>(r.integer(n["priority_levels"], "priority_levels"));
    if (n["instructions"]) {
        const auto s = r.seq(n["instructions"], "instructions");
        if (s.size() != 2) throw ConfigError(r.at(s) + ": 'instructions' must be [lo, hi]");
        c.workload.instructions_lo = static_cast<std::int64_t>(std::llround(r.real(s[0], "instructions")));
        c.workload.instructions_hi = static_cast<std::int64_t>(std::llround(r.real(s[1], "instructions")));
    }
    if (n["seed"]) {
        c.workload.seed = static_cast<std::uint64_t>(r.count(n["seed"], "seed"));
        c.workload_seed_fixed = true;
    }
}

void read_constants(Reader& r, const YAML::Node& n, ExperimentConfig& c)
{
    r.keys(n, {"k_v_ghz_per_v", "b_f_ghz", "capacitance_f", "leakage_current_a", "activity", "ipc"}, "constants");
    auto& k = c.constants;
    if (n["k_v_ghz_per_v"]) k.k_v = r.real(n["k_v_ghz_per_v"], "k_v_ghz_per_v") * 1e9;
    if (n["b_f_ghz"]) k.b_f = r.real(n["b_f_ghz"], "b_f_ghz") * 1e9;
    if (n["capacitance_f"]) k.capacitance = r.real(n["capacitance_f"], "capacitance_f");
    if (n["leakage_current_a"]) k.leakage_current = r.real(n["leakage_current_a"], "leakage_current_a");
    if (n["activity"]) k.activity = r.real(n["activity"], "activity");
    if (n["ipc"]) k.ipc = r.real(n["ipc"], "ipc");
}

void read_objective(Reader& r, const YAML::Node& n, ExperimentConfig& c)
{
    r.keys(n, {"mode", "beta", "gamma", "penalty"}, "objective");
    if (n["mode"]) {
        const auto m = r.text(n["mode"], "mode");
        if (m == "scalarized") {
            c.objective.mode = ObjectiveMode::Scalarized;
        } else if (m == "multi_objective") {
            c.objective.mode = ObjectiveMode::MultiObjective;
        } else {
            r.problems.push_back(r.at(n["mode"]) + ": objective mode must be scalarized or multi_objective");
        }
    }
    if (n["beta"]) c.objective.beta = r.real(n["beta"], "beta");
    if (n["gamma"]) c.objective.gamma = r.real(n["gamma"], "gamma");
    if (n["penalty"]) c.objective.penalty = r.real(n["penalty"], "penalty");
}

void read_optimizer(Reader& r, const YAML::Node& n, ExperimentConfig& c)
{
    r.keys(n,
           {"candidates_sobol", "candidates_uniform", "perturbations", "perturbation_sigma", "gp_restarts",
            "gp_max_iterations", "reference_margin"},
           "optimizer");
    if (n["candidates_sobol"]) c.candidates.sobol = r.count(n["candidates_sobol"], "candidates_sobol");
    if (n["candidates_uniform"]) c.candidates.uniform = r.count(n["candidates_uniform"], "candidates_uniform");
    if (n["perturbations"]) c.candidates.perturbations = r.count(n["perturbations"], "perturbations");
    if (n["perturbation_sigma"]) c.candidates.perturbation_sigma = r.real(n["perturbation_sigma"], "perturbation_sigma");
    if (n["gp_restarts"]) c.gp_restarts = static_cast<int>(r.integer(n["gp_restarts"], "gp_restarts"));
    if (n["gp_max_iterations"]) {
        c.gp_max_iterations = static_cast<int>(r.integer(n["gp_max_iterations"], "gp_max_iterations"));
    }
    if (n["reference_margin"]) c.reference_margin = r.real(n["reference_margin"], "reference_margin");
}

SearchSpace read_space(Reader& r, const YAML::Node& n)
{
    SearchSpace space;
    for (const auto& item : r.seq(n, "space")) {
        r.keys(item, {"name", "type", "range", "options", "conditional"}, "space entry");
        if (!item["name"] || !item["type"]) {
            throw ConfigError(r.at(item) + ": space entries need 'name' and 'type'");
        }
        const auto name = r.text(item["name"], "name");
        const auto type = r.text(item["type"], "type");
        ParamDef p;
        if (type == "continuous" || type == "integer") {
            if (!item["range"] || !item["range"].IsSequence() || item["range"].size() != 2) {
                throw ConfigError(r.at(item) + ": '" + name + "' needs range: [lo, hi]");
            }
            if (type == "continuous") {
                p = ParamDef::continuous(name, r.real(item["range"][0], "range"), r.real(item["range"][1], "range"));
            } else {
                p = ParamDef::integer(name, r.integer(item["range"][0], "range"), r.integer(item["range"][1], "range"));
            }
        } else if (type == "categorical") {
            if (!item["options"]) throw ConfigError(r.at(item) + ": '" + name + "' needs options");
            std::vector<std::string> options;
            for (const auto& o : r.seq(item["options"], "options")) options.push_back(r.text(o, "options"));
            p = ParamDef::categorical(name, std::move(options));
        } else {
            throw ConfigError(r.at(item["type"]) + ": type must be continuous, integer or categorical");
        }
        if (const auto cond = item["conditional"]) {
            r.keys(cond, {"param", "values"}, "conditional");
            if (!cond["param"] || !cond["values"]) {
                throw ConfigError(r.at(cond) + ": conditional needs 'param' and 'values'");
            }
            Conditional cnd;
            cnd.param = r.text(cond["param"], "param");
            for (const auto& v : r.seq(cond["values"], "values")) cnd.values.push_back(r.text(v, "values"));
            p.conditional_on = std::move(cnd);
        }
        space.params.push_back(std::move(p));
    }
    for (const auto& p : space.params) {
        if (p.kind == ParamKind::Integer && p.name.rfind("count_", 0) == 0) space.at_least_one.push_back(p.name);
    }
    return space;
}

std::vector<KernelFamily> read_kernels(Reader& r, const YAML::Node& n)
{
    std::vector<KernelFamily> out;
    for (const auto& k : r.seq(n, "kernels")) {
        try {
            out.push_back(parse_kernel_family(r.text(k, "kernels")));
        } catch (const ConfigError& e) {
            r.problems.push_back(r.at(k) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                          ": " + e.msg);
    }
    ExperimentConfig c;
    if (root.IsNull()) return c;
    Reader r(source);
    r.keys(root,
           {"schema_version", "name", "scenario", "seeds", "replicates", "budget", "n_init", "kernel", "kernels",
            "objective", "weights", "lambdas_per_ms", "workload", "constants", "space", "optimizer",
            "random_baseline", "plots", "output_dir"},
           "");
    if (root["schema_version"]) c.schema_version = static_cast<int>(r.integer(root["schema_version"], "schema_version"));
    if (root["name"]) c.name = r.text(root["name"], "name");
    if (root["scenario"]) {
        try {
            c.scenario = parse_scenario(r.text(root["scenario"], "scenario"));
        } catch (const ConfigError& e) {
            r.problems.push_back(r.at(root["scenario"]) + ": " + e.what());
        }
    }
    if (root["seeds"] && root["replicates"]) {
        r.problems.push_back(r.at(root["replicates"]) + ": give either seeds or replicates, not both");
    }
    if (root["seeds"]) {
        c.seeds.clear();
        for (const auto& s : r.seq(root["seeds"], "seeds")) c.seeds.push_back(r.count(s, "seeds"));
    } else if (root["replicates"]) {
        c.seeds.clear();
        const auto n = r.count(root["replicates"], "replicates");
        for (std::size_t i = 0; i < n; ++i) c.seeds.push_back(i);
    }
    if (root["budget"]) c.budget = r.count(root["budget"], "budget");
    if (root["n_init"]) c.n_init = r.count(root["n_init"], "n_init");
    if (root["kernel"]) {
        try {
            c.kernel = parse_kernel_family(r.text(root["kernel"], "kernel"));
        } catch (const ConfigError& e) {
            r.problems.push_back(r.at(root["kernel"]) + ": " + e.what());
        }
    }
    if (root["kernels"]) c.kernels = read_kernels(r, root["kernels"]);
    if (root["objective"]) read_objective(r, root["objective"], c);
    if (c.scenario == Scenario::Moo) c.objective.mode = ObjectiveMode::MultiObjective;
    if (root["weights"]) {
        c.weights.clear();
        for (const auto& w : r.seq(root["weights"], "weights")) {
            if (!w.IsSequence() || w.size() != 2) throw ConfigError(r.at(w) + ": each weight must be [beta, gamma]");
            c.weights.emplace_back(r.real(w[0], "weights"), r.real(w[1], "weights"));
        }
    }
    if (root["lambdas_per_ms"]) {
        c.lambdas.clear();
        for (const auto& l : r.seq(root["lambdas_per_ms"], "lambdas_per_ms")) {
            c.lambdas.push_back(r.real(l, "lambdas_per_ms") * 1e3);
        }
    }
    if (root["workload"]) read_workload(r, root["workload"], c);
    if (root["constants"]) read_constants(r, root["constants"], c);
    if (root["space"]) c.space = read_space(r, root["space"]);
    if (root["optimizer"]) read_optimizer(r, root["optimizer"], c);
    if (root["random_baseline"]) c.random_baseline = r.flag(root["random_baseline"], "random_baseline");
    if (root["plots"]) c.plots = r.flag(root["plots"], "plots");
    if (root["output_dir"]) c.output_dir = r.text(root["output_dir"], "output_dir");

    auto problems = std::move(r.problems);
    for (auto& v : c.violations()) problems.push_back(source + ": " + v);
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& c)
{
    using J = nlohmann::ordered_json;
    J j;
    j["schema_version"] = c.schema_version;
    j["name"] = c.name;
    j["scenario"] = to_string(c.scenario);
    j["seeds"] = c.seeds;
    j["budget"] = c.budget;
    j["n_init"] = c.n_init;
    j["kernel"] = to_string(c.kernel);
    J kernels = J::array();
    for (auto k : c.kernels) kernels.push_back(to_string(k));
    j["kernels"] = kernels;
    j["objective"] = {{"mode", c.objective.mode == ObjectiveMode::Scalarized ? "scalarized" : "multi_objective"},
                      {"beta", c.objective.beta},
                      {"gamma", c.objective.gamma},
                      {"penalty", c.objective.penalty}};
    J weights = J::array();
    for (const auto& [b, g] : c.weights) weights.push_back({b, g});
    j["weights"] = weights;
    J lambdas = J::array();
    for (double l : c.lambdas) lambdas.push_back(l * 1e-3);
    j["lambdas_per_ms"] = lambdas;
    J workload = {{"arrival_rate_per_ms", c.workload.arrival_rate * 1e-3},
                  {"n_tasks", c.workload.max_tasks},
                  {"horizon_ms", c.workload.horizon * 1e3},
                  {"priority_levels", c.workload.priority_levels},
                  {"instructions", {c.workload.instructions_lo, c.workload.instructions_hi}}};
    if (c.workload_seed_fixed) workload["seed"] = c.workload.seed;
    j["workload"] = workload;
    j["constants"] = {{"k_v_ghz_per_v", c.constants.k_v * 1e-9},
                      {"b_f_ghz", c.constants.b_f * 1e-9},
                      {"capacitance_f", c.constants.capacitance},
                      {"leakage_current_a", c.constants.leakage_current},
                      {"activity", c.constants.activity},
                      {"ipc", c.constants.ipc}};
    J space = J::array();
    for (const auto& p : c.space.params) {
        J e;
        e["name"] = p.name;
        switch (p.kind) {
        case ParamKind::Continuous:
            e["type"] = "continuous";
            e["range"] = {p.lo, p.hi};
            break;
        case ParamKind::Integer:
            e["type"] = "integer";
            e["range"] = {static_cast<std::int64_t>(p.lo), static_cast<std::int64_t>(p.hi)};
            break;
        case ParamKind::Categorical:
            e["type"] = "categorical";
            e["options"] = p.options;
            break;
        }
        if (p.conditional_on) e["conditional"] = {{"param", p.conditional_on->param}, {"values", p.conditional_on->values}};
        space.push_back(std::move(e));
    }
    j["space"] = space;
    j["optimizer"] = {{"candidates_sobol", c.candidates.sobol},
                      {"candidates_uniform", c.candidates.uniform},
                      {"perturbations", c.candidates.perturbations},
                      {"perturbation_sigma", c.candidates.perturbation_sigma},
                      {"gp_restarts", c.gp_restarts},
                      {"gp_max_iterations", c.gp_max_iterations},
                      {"reference_margin", c.reference_margin}};
    j["random_baseline"] = c.random_baseline;
    j["plots"] = c.plots;
    j["output_dir"] = c.output_dir.generic_string();
    return j;
}

SystemConfig system_config_from_point(const DesignPoint& point, const PowerConstants& constants)
{
    static const std::array<std::string, 3> names{"little", "medium", "big"};
    std::array<int, 3> counts{0, 0, 0};
    std::array<double, 3> freqs{1e9, 1e9, 1e9};
    for (std::size_t k = 0; k < 3; ++k) {
        const std::string count = "count_" + names[k];
        if (!point.has(count)) continue;
        counts[k] = static_cast<int>(point.integer(count));
        const std::string freq = "freq_" + names[k] + "_ghz";
        if (point.has(freq)) {
            freqs[k] = point.real(freq) * 1e9;
        } else if (counts[k] > 0) {
            throw ConfigError("design point has " + count + " but no " + freq);
        }
    }
    SchedulerPolicy policy = SchedulerPolicy::fcfs();
    if (point.has("scheduler")) {
        const auto kind = parse_scheduler(point.category("scheduler"));
        if (kind != SchedulerKind::FCFS) {
            if (!point.has("quantum_ms")) throw ConfigError("preemptive scheduler without quantum_ms");
            const double q = point.real("quantum_ms") * 1e-3;
            policy = kind == SchedulerKind::RoundRobin ? SchedulerPolicy::round_robin(q) : SchedulerPolicy::priority(q);
        }
    }
    return SystemConfig::from_classes(counts, freqs, policy, constants);
}

Evaluator make_evaluator(TaskSet tasks, PowerConstants constants)
{
    return [tasks = std::move(tasks), constants](const DesignPoint& point) {
        const SystemConfig config = system_config_from_point(point, constants);
        const SimOutput out = run_simulation(config, tasks, false);
        return Evaluation{out.result.total_energy, out.result.aggregated_latency};
    };
}

}  // namespace hmsched
