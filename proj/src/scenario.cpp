#include "hmsched/scenario.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "hmsched/analysis.hpp"
#include "hmsched/errors.hpp"
#include "hmsched/plot.hpp"

namespace hmsched {

bool RunManifest::all_ok() const
{
    return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.ok; });
}

namespace {

std::string compact(double v)
{
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string method_dir(const RunSpec& s)
{
    return s.method == "bo" ? "bo_" + to_string(s.kernel) : s.method;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::vector<RunSpec> plan_runs(const ExperimentConfig& config)
{
    struct Variant {
        std::string name;
        std::vector<KernelFamily> kernels;
        ObjectiveSpec objective;
        WorkloadSpec workload;
    };
    std::vector<Variant> variants;
    switch (config.scenario) {
    case Scenario::Single:
    case Scenario::Moo:
        variants.push_back({config.scenario == Scenario::Moo ? "moo" : "default", {config.kernel}, config.objective,
                            config.workload});
        break;
    case Scenario::KernelComparison:
        variants.push_back({"kernel_comparison", config.kernels, config.objective, config.workload});
        break;
    case Scenario::PreferenceSweep:
        for (const auto& [b, g] : config.weights) {
            ObjectiveSpec o = config.objective;
            o.beta = b;
            o.gamma = g;
            variants.push_back({"beta_" + compact(b) + "_gamma_" + compact(g), {config.kernel}, o, config.workload});
        }
        break;
    case Scenario::LambdaSweep:
        for (double l : config.lambdas) {
            WorkloadSpec w = config.workload;
            w.arrival_rate = l;
            variants.push_back({"lambda_" + compact(l * 1e-3), {config.kernel}, config.objective, w});
        }
        break;
    }

    std::vector<RunSpec> out;
    for (const auto& v : variants) {
        auto add = [&](const std::string& method, KernelFamily k) {
            for (auto seed : config.seeds) {
                RunSpec s;
                s.variant = v.name;
                s.method = method;
                s.kernel = k;
                s.seed = seed;
                s.objective = v.objective;
                s.workload = v.workload;
                s.id = v.name + "/" + method_dir(s) + "/seed_" + std::to_string(seed);
                out.push_back(std::move(s));
            }
        };
        for (auto k : v.kernels) add("bo", k);
        if (config.random_baseline) add("random", config.kernel);
    }
    return out;
}

namespace {

nlohmann::ordered_json run_snapshot(const ExperimentConfig& config, const RunSpec& spec, std::uint64_t workload_seed)
{
    auto j = config_to_json(config);
    j.erase("output_dir");
    j["run"] = {{"id", spec.id},
                {"variant", spec.variant},
                {"method", spec.method},
                {"kernel", to_string(spec.kernel)},
                {"seed", spec.seed},
                {"workload_seed", workload_seed},
                {"beta", spec.objective.beta},
                {"gamma", spec.objective.gamma},
                {"arrival_rate_per_ms", spec.workload.arrival_rate * 1e-3}};
    return j;
}

/// Two most important numeric parameters, for the contour plot.
std::optional<std::pair<std::string, std::string>> contour_axes(const ImportanceReport& report, const SearchSpace& space)
{
    std::vector<std::string> picked;
    for (const auto& name : report.ranking()) {
        const ParamDef* p = space.find(name);
        if (p && p->kind != ParamKind::Categorical && !p->conditional_on) picked.push_back(name);
        if (picked.size() == 2) return std::make_pair(picked[0], picked[1]);
    }
    return std::nullopt;
}

}  // namespace

RunRecord execute_run(const ExperimentConfig& config, const RunSpec& spec, const std::filesystem::path& root)
{
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.spec = spec;
    try {
        const std::filesystem::path dir = root / spec.id;
        std::filesystem::create_directories(dir);
        const std::uint64_t wseed = config.workload_seed_fixed ? config.workload.seed : spec.seed;
        WorkloadSpec w = spec.workload;
        w.seed = wseed;
        const Evaluator evaluator = make_evaluator(generate_tasks(w, wseed), config.constants);

        StudyOptions opts;
        opts.objective = spec.objective;
        opts.kernel = spec.kernel;
        opts.budget = config.budget;
        opts.n_init = config.n_init;
        opts.seed = spec.seed;
        opts.candidates = config.candidates;
        opts.gp_restarts = config.gp_restarts;
        opts.gp_max_iterations = config.gp_max_iterations;
        opts.reference_margin = config.reference_margin;
        Study study = spec.method == "bo" ? run_study(config.space, opts, evaluator)
                                          : random_search(config.space, opts, evaluator);
        study.config = run_snapshot(config, spec, wseed);

        std::vector<ImportanceReport> reports;
        nlohmann::ordered_json importance = nlohmann::ordered_json::object();
        if (spec.method == "bo") {
            try {
                if (spec.objective.mode == ObjectiveMode::MultiObjective) {
                    auto [e, t] = moo_importance(study, config.space, spec.id);
                    reports = {e, t};
                } else {
                    const auto it = study.final_models.find("loss");
                    if (it == study.final_models.end()) throw DomainError("no GP was fitted (budget equals n_init)");
                    reports.push_back(sensitivity_importance(it->second, config.space, "loss", spec.id));
                }
                auto arr = nlohmann::ordered_json::array();
                for (const auto& r : reports) arr.push_back(importance_to_json(r));
                importance["reports"] = arr;
            } catch (const DomainError& e) {
                importance["error"] = e.what();
            }
        }

        auto add = [&](const std::filesystem::path& p) {
            rec.outputs.push_back(std::filesystem::relative(p, root).generic_string());
        };
        auto study_json = study_to_json(study, config.space);
        if (spec.method == "bo") study_json["importance"] = importance;
        write_text(dir / "study.json", study_json.dump(2) + "\n");
        add(dir / "study.json");
        {
            std::ostringstream csv;
            write_trials_csv(study, config.space, csv);
            write_text(dir / "trials.csv", csv.str());
            add(dir / "trials.csv");
        }
        if (spec.method == "bo") {
            write_text(dir / "importance.json", importance.dump(2) + "\n");
            add(dir / "importance.json");
        }
        if (config.plots) {
            auto plot = [&](const PlotSeries& s, const std::string& name) {
                if (!s.violations().empty()) return;
                const auto files = emit_plot(s, dir / (name + ".svg"));
                add(files.svg);
                add(files.csv);
            };
            plot(history_series(study), "history");
            if (spec.objective.mode == ObjectiveMode::MultiObjective) plot(pareto_series(study), "pareto");
            if (!reports.empty()) plot(importance_series(reports), "importance");
            if (reports.size() == 1 && study.incumbent && !study.trials[*study.incumbent].penalized) {
                if (auto axes = contour_axes(reports.front(), config.space)) {
                    plot(contour_series(study.final_models.at("loss"), config.space,
                                        study.trials[*study.incumbent].point, axes->first, axes->second),
                         "contour");
                }
            }
        }

        rec.incumbent_trial = study.incumbent;
        if (study.incumbent) {
            const auto& t = study.trials[*study.incumbent];
            rec.incumbent = t.point;
            rec.best_loss = t.loss;
            rec.energy = t.energy;
            rec.latency = t.latency;
        }
        rec.front_size = study.front.size();
        if (!study.hv_trace.empty()) rec.final_hv = study.hv_trace.back();
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

namespace {

nlohmann::ordered_json record_json(const RunRecord& r)
{
    nlohmann::ordered_json j;
    j["id"] = r.spec.id;
    j["variant"] = r.spec.variant;
    j["method"] = r.spec.method;
    j["kernel"] = to_string(r.spec.kernel);
    j["seed"] = r.spec.seed;
    j["beta"] = r.spec.objective.beta;
    j["gamma"] = r.spec.objective.gamma;
    j["arrival_rate_per_ms"] = r.spec.workload.arrival_rate * 1e-3;
    j["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) j["error"] = r.error;
    j["seconds"] = r.seconds;
    j["outputs"] = r.outputs;
    if (r.incumbent_trial) {
        j["incumbent"] = {{"trial", *r.incumbent_trial},
                          {"loss", r.best_loss},
                          {"energy_j", r.energy},
                          {"latency_s", r.latency},
                          {"point", point_to_json(r.incumbent)}};
    } else {
        j["incumbent"] = nullptr;
    }
    j["front_size"] = r.front_size;
    if (r.final_hv) j["final_hv"] = *r.final_hv;
    return j;
}

/// Mean importance per kernel family over the successful runs of a kernel comparison.
std::vector<ImportanceReport> kernel_importance(const RunManifest& m, const ExperimentConfig& config)
{
    std::map<std::string, std::vector<double>> sums;
    std::map<std::string, int> counts;
    std::vector<std::string> order;
    for (const auto& r : m.runs) {
        if (!r.ok || r.spec.method != "bo") continue;
        std::ifstream in(m.output_dir / r.spec.id / "importance.json");
        if (!in) continue;
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.contains("reports") || j["reports"].empty()) continue;
        const std::string k = to_string(r.spec.kernel);
        auto& s = sums[k];
        if (s.empty()) {
            s.assign(config.space.params.size(), 0.0);
            order.push_back(k);
        }
        for (std::size_t i = 0; i < config.space.params.size(); ++i) {
            s[i] += j["reports"][0]["weights"].value(config.space.params[i].name, 0.0);
        }
        ++counts[k];
    }
    std::vector<ImportanceReport> out;
    for (const auto& k : order) {
        ImportanceReport rep;
        rep.objective = k;
        rep.kernel = parse_kernel_family(k);
        rep.study_id = "mean over " + std::to_string(counts[k]) + " seeds";
        for (std::size_t i = 0; i < config.space.params.size(); ++i) {
            rep.weights.emplace_back(config.space.params[i].name, sums[k][i] / counts[k]);
        }
        out.push_back(std::move(rep));
    }
    return out;
}

}  // namespace

nlohmann::ordered_json manifest_to_json(const RunManifest& m)
{
    nlohmann::ordered_json j;
    j["tool"] = "hmsched";
    j["version"] = m.tool_version;
    j["config"] = m.config;
    j["seconds"] = m.seconds;
    j["status"] = m.all_ok() ? "ok" : "failed";
    j["outputs"] = m.outputs;
    auto runs = nlohmann::ordered_json::array();
    for (const auto& r : m.runs) runs.push_back(record_json(r));
    j["runs"] = runs;
    return j;
}

RunManifest run_scenario(const ExperimentConfig& config, const RunOptions& options)
{
    if (auto v = config.violations(); !v.empty()) throw ValidationError(std::move(v));
    const auto start = std::chrono::steady_clock::now();
    RunManifest m;
    m.config = config_to_json(config);
    m.output_dir = config.output_dir;
    std::filesystem::create_directories(m.output_dir);

    const auto plan = plan_runs(config);
    m.runs.resize(plan.size());
    std::ostream& log = options.log ? *options.log : std::cerr;
    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < plan.size(); i = next++) {
            if (!options.quiet) {
                std::lock_guard lock(log_mutex);
                log << "INFO:Runner:Starting " << plan[i].id << " (" << i + 1 << "/" << plan.size() << ")\n";
            }
            m.runs[i] = execute_run(config, plan[i], m.output_dir);
            if (!options.quiet) {
                std::lock_guard lock(log_mutex);
                const auto& r = m.runs[i];
                if (r.ok) {
                    log << "INFO:Runner:Finished " << r.spec.id << " in " << compact(std::round(r.seconds * 100) / 100)
                        << " s, best loss " << compact(r.best_loss) << "\n";
                } else {
                    log << "INFO:Runner:Run " << r.spec.id << " failed: " << r.error << "\n";
                }
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(plan.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    if (config.plots && config.scenario == Scenario::KernelComparison) {
        const auto reps = kernel_importance(m, config);
        if (!reps.empty()) {
            const auto files = emit_plot(importance_series(reps), m.output_dir / "importance_by_kernel.svg");
            m.outputs.push_back(files.svg.filename().generic_string());
            m.outputs.push_back(files.csv.filename().generic_string());
        }
    }
    {
        std::ostringstream csv;
        write_summary_csv(m, csv);
        write_text(m.output_dir / "summary.csv", csv.str());
        write_text(m.output_dir / "summary.txt", print_summary(m));
        m.outputs.emplace_back("summary.csv");
        m.outputs.emplace_back("summary.txt");
    }
    m.outputs.emplace_back("manifest.json");
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(m.output_dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
    return m;
}

void write_summary_csv(const RunManifest& m, std::ostream& out)
{
    std::vector<std::string> params;
    for (const auto& r : m.runs) {
        for (const auto& [name, value] : r.incumbent.values) {
            if (std::find(params.begin(), params.end(), name) == params.end()) params.push_back(name);
        }
    }
    std::sort(params.begin(), params.end());
    out << "id,variant,method,kernel,seed,beta,gamma,arrival_rate_per_ms,status,incumbent_trial,best_loss,energy_j,"
           "latency_s,front_size,final_hv";
    for (const auto& p : params) out << ',' << p;
    out << '\n';
    for (const auto& r : m.runs) {
        out << r.spec.id << ',' << r.spec.variant << ',' << r.spec.method << ',' << to_string(r.spec.kernel) << ','
            << r.spec.seed << ',' << compact(r.spec.objective.beta) << ',' << compact(r.spec.objective.gamma) << ','
            << compact(r.spec.workload.arrival_rate * 1e-3) << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.incumbent_trial) {
            out << *r.incumbent_trial << ',' << compact(r.best_loss) << ',' << compact(r.energy) << ','
                << compact(r.latency);
        } else {
            out << ",,,";
        }
        out << ',' << r.front_size << ',' << (r.final_hv ? compact(*r.final_hv) : std::string());
        for (const auto& p : params) {
            out << ',';
            if (auto it = r.incumbent.values.find(p); it != r.incumbent.values.end()) out << to_string(it->second);
        }
        out << '\n';
    }
}

namespace {

std::string cell(const char* spec, double v)
{
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), spec, v);
    return buf.data();
}

std::string core_cell(const DesignPoint& p, const std::string& cls)
{
    const std::string count = "count_" + cls;
    const std::string freq = "freq_" + cls + "_ghz";
    if (!p.has(count) || p.integer(count) == 0) return "-";
    std::string s = std::to_string(p.integer(count)) + " x ";
    s += p.has(freq) ? cell("%.2f GHz", p.real(freq)) : std::string("?");
    return s;
}

std::string scheduler_cell(const DesignPoint& p)
{
    if (!p.has("scheduler")) return "-";
    std::string s = p.category("scheduler");
    if (p.has("quantum_ms")) s += cell(" (%.2f ms)", p.real("quantum_ms"));
    return s;
}

std::string pad(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string print_summary(const RunManifest& m)
{
    const std::array<std::size_t, 8> w{18, 16, 16, 16, 20, 11, 11, 36};
    std::ostringstream out;
    auto row = [&](const std::array<std::string, 8>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) line += i + 1 < cells.size() ? pad(cells[i], w[i]) : cells[i];
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << '\n';
    };
    const std::array<std::string, 8> header{"Method", "Little", "Medium", "Big", "Scheduler", "Best", "Median", "Run"};

    std::vector<std::string> variants;
    for (const auto& r : m.runs) {
        if (std::find(variants.begin(), variants.end(), r.spec.variant) == variants.end()) {
            variants.push_back(r.spec.variant);
        }
    }
    if (variants.empty()) {
        row(header);
        return out.str();
    }
    for (std::size_t v = 0; v < variants.size(); ++v) {
        if (v) out << '\n';
        out << "[" << variants[v] << "]\n";
        row(header);
        std::vector<std::string> methods;
        for (const auto& r : m.runs) {
            if (r.spec.variant != variants[v]) continue;
            const std::string label = r.spec.method == "bo" ? "BO " + to_string(r.spec.kernel) : "Random";
            if (std::find(methods.begin(), methods.end(), label) == methods.end()) methods.push_back(label);
        }
        for (const auto& label : methods) {
            const RunRecord* best = nullptr;
            std::vector<double> losses;
            std::size_t failed = 0;
            for (const auto& r : m.runs) {
                const std::string l = r.spec.method == "bo" ? "BO " + to_string(r.spec.kernel) : "Random";
                if (r.spec.variant != variants[v] || l != label) continue;
                if (!r.ok || !r.incumbent_trial) {
                    ++failed;
                    continue;
                }
                losses.push_back(r.best_loss);
                if (!best || r.best_loss < best->best_loss) best = &r;
            }
            if (!best) {
                row({label, "-", "-", "-", "-", "-", "-", "(all runs failed)"});
                continue;
            }
            std::sort(losses.begin(), losses.end());
            const std::size_t n = losses.size();
            const double median = n % 2 ? losses[n / 2] : 0.5 * (losses[n / 2 - 1] + losses[n / 2]);
            std::string run = best->spec.id;
            if (failed) run += " (" + std::to_string(failed) + " failed)";
            row({label, core_cell(best->incumbent, "little"), core_cell(best->incumbent, "medium"),
                 core_cell(best->incumbent, "big"), scheduler_cell(best->incumbent), cell("%.4f", best->best_loss),
                 cell("%.4f", median), run});
        }
    }
    return out.str();
}

}  // namespace hmsched
