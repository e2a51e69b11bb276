#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hmsched/acquisition.hpp"
#include "hmsched/analysis.hpp"
#include "hmsched/errors.hpp"
#include "hmsched/experiment.hpp"
#include "hmsched/gp.hpp"
#include "hmsched/pareto.hpp"
#include "hmsched/scenario.hpp"
#include "hmsched/simcore.hpp"
#include "hmsched/sobol.hpp"
#include "hmsched/workload.hpp"

namespace py = pybind11;
using namespace hmsched;

namespace {

py::object to_python(const nlohmann::ordered_json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

DesignPoint point_from_dict(const py::dict& d)
{
    DesignPoint p;
    for (auto [k, v] : d) {
        const auto name = py::cast<std::string>(k);
        // bool is an int subclass in Python; reject it rather than guess.
        if (py::isinstance<py::bool_>(v)) throw py::type_error("parameter '" + name + "' cannot be a bool");
        if (py::isinstance<py::int_>(v)) {
            p.values[name] = py::cast<std::int64_t>(v);
        } else if (py::isinstance<py::float_>(v)) {
            p.values[name] = py::cast<double>(v);
        } else if (py::isinstance<py::str>(v)) {
            p.values[name] = py::cast<std::string>(v);
        } else {
            throw py::type_error("parameter '" + name + "' must be int, float or str");
        }
    }
    return p;
}

py::dict point_to_dict(const DesignPoint& p)
{
    py::dict d;
    for (const auto& [name, v] : p.values) {
        std::visit([&](const auto& x) { d[py::str(name)] = x; }, v);
    }
    return d;
}

WorkloadSpec workload_spec(double rate_per_ms, std::int64_t n_tasks, double horizon_ms, int priority_levels,
                           std::uint64_t seed)
{
    WorkloadSpec w;
    w.arrival_rate = rate_per_ms * 1e3;
    w.max_tasks = n_tasks;
    w.horizon = horizon_ms * 1e-3;
    w.priority_levels = priority_levels;
    w.seed = seed;
    return w;
}

}  // namespace

PYBIND11_MODULE(hmsched, m)
{
    m.doc() = "Heterogeneous multi-core scheduling simulator with Bayesian optimization.";
    m.attr("__version__") = kVersion;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def(
        "generate_tasks",
        [](double rate_per_ms, std::int64_t n_tasks, double horizon_ms, int priority_levels, std::uint64_t seed) {
            const auto set = generate_tasks(workload_spec(rate_per_ms, n_tasks, horizon_ms, priority_levels, seed), seed);
            py::list out;
            for (const auto& t : set.tasks) {
                py::dict d;
                d["id"] = t.id;
                d["arrival_time"] = t.arrival_time;
                d["instruction_count"] = t.instruction_count;
                d["priority"] = t.priority;
                out.append(d);
            }
            return out;
        },
        py::arg("arrival_rate_per_ms") = 1.0, py::arg("n_tasks") = 500, py::arg("horizon_ms") = 1000.0,
        py::arg("priority_levels") = 3, py::arg("seed") = 0, "Synthetic task set; times in seconds.");

    m.def(
        "evaluate",
        [](const py::dict& point, double rate_per_ms, std::int64_t n_tasks, std::uint64_t seed) {
            const auto w = workload_spec(rate_per_ms, n_tasks, 1000.0, 3, seed);
            const auto sys = system_config_from_point(point_from_dict(point), PowerConstants{});
            const auto out = run_simulation(sys, generate_tasks(w, seed));
            py::dict d;
            d["energy_j"] = out.result.total_energy;
            d["latency_s"] = out.result.aggregated_latency;
            d["makespan_s"] = out.result.makespan;
            d["loss"] = scalarized_cost(out.result.total_energy, out.result.aggregated_latency, 1.0, 1.0);
            return d;
        },
        py::arg("point"), py::arg("arrival_rate_per_ms") = 1.0, py::arg("n_tasks") = 500, py::arg("seed") = 0,
        "Simulates one design point (dict of parameter values) with default power constants.");

    m.def(
        "default_space",
        [] {
            py::list out;
            for (const auto& p : default_space().params) {
                py::dict d;
                d["name"] = p.name;
                d["type"] = p.kind == ParamKind::Continuous ? "continuous"
                            : p.kind == ParamKind::Integer  ? "integer"
                                                            : "categorical";
                if (p.kind == ParamKind::Categorical) {
                    d["options"] = p.options;
                } else {
                    d["range"] = py::make_tuple(p.lo, p.hi);
                }
                out.append(d);
            }
            return out;
        },
        "Parameters of the default hardware and scheduler search space.");
    m.def(
        "encode", [](const py::dict& point) { return encode(point_from_dict(point), default_space()); },
        py::arg("point"), "Unit-cube encoding in the default space.");
    m.def(
        "decode", [](const std::vector<double>& v) { return point_to_dict(decode(v, default_space())); },
        py::arg("vector"), "Nearest valid design point of an encoded vector.");
    m.def(
        "validate", [](const py::dict& point) { return validate(point_from_dict(point), default_space()); },
        py::arg("point"), "Every way the point breaks the default space; empty when valid.");

    m.def(
        "sobol",
        [](std::size_t n, int dim) {
            const auto pts = SobolSequence(dim).points(1, n);
            Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dim);
            for (std::size_t i = 0; i < n; ++i) {
                for (int k = 0; k < dim; ++k) out(static_cast<Eigen::Index>(i), k) = pts[i][static_cast<std::size_t>(k)];
            }
            return out;
        },
        py::arg("n"), py::arg("dim"), "First n Sobol points, starting at index 1.");

    py::class_<GpModel>(m, "GpModel")
        .def_property_readonly("kernel", [](const GpModel& g) { return to_string(g.kernel.family); })
        .def_property_readonly("length_scales", [](const GpModel& g) { return g.kernel.length_scales; })
        .def_property_readonly("signal_variance", [](const GpModel& g) { return g.kernel.signal_variance; })
        .def_property_readonly("noise_variance", [](const GpModel& g) { return g.kernel.noise_variance; })
        .def_readonly("lml", &GpModel::lml)
        .def_readonly("degenerate", &GpModel::degenerate)
        .def(
            "predict",
            [](const GpModel& g, const Eigen::MatrixXd& x) {
                const auto post = predict(g, x);
                Eigen::VectorXd mean(x.rows()), var(x.rows());
                for (Eigen::Index i = 0; i < x.rows(); ++i) {
                    mean[i] = post[static_cast<std::size_t>(i)].mean;
                    var[i] = post[static_cast<std::size_t>(i)].variance;
                }
                return py::make_tuple(mean, var);
            },
            py::arg("x"), "Posterior mean and variance at the rows of x.");

    m.def(
        "fit_gp",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::string& kernel, std::uint64_t seed) {
            FitOptions o;
            o.seed = seed;
            return fit_gp(x, y, parse_kernel_family(kernel), o);
        },
        py::arg("x"), py::arg("y"), py::arg("kernel") = "matern52", py::arg("seed") = 0,
        "Fits an ARD GP by maximizing the log marginal likelihood.");

    m.def("log_expected_improvement", &log_expected_improvement, py::arg("mean"), py::arg("variance"),
          py::arg("best"));

    m.def(
        "pareto_front",
        [](const std::vector<std::pair<double, double>>& pts) {
            std::vector<ObjectivePair> p;
            for (const auto& [a, b] : pts) p.push_back({a, b});
            std::vector<std::size_t> idx;
            for (const auto& mem : pareto_front(p).members) idx.push_back(mem.index);
            return idx;
        },
        py::arg("points"), "Indices of the non-dominated points, sorted by the first objective.");
    m.def(
        "hypervolume",
        [](const std::vector<std::pair<double, double>>& pts, std::pair<double, double> ref) {
            std::vector<ObjectivePair> p;
            for (const auto& [a, b] : pts) p.push_back({a, b});
            const ReferencePoint r{ref.first, ref.second};
            return hypervolume_2d(clip_to_reference(pareto_front(p), r), r);
        },
        py::arg("points"), py::arg("reference"), "Area dominated by the points inside the reference box.");

    m.def(
        "load_config", [](const std::string& path) { return to_python(config_to_json(load_config(path))); },
        py::arg("path"), "Resolved experiment config in file units.");
    m.def(
        "run",
        [](const std::string& path, std::optional<std::string> out_dir, std::optional<std::uint64_t> seed_override,
           unsigned jobs, bool quiet) {
            auto config = load_config(path);
            if (seed_override) config.seeds = {*seed_override};
            if (out_dir) config.output_dir = *out_dir;
            RunOptions o;
            o.jobs = jobs;
            o.quiet = quiet;
            RunManifest manifest;
            {
                py::gil_scoped_release release;
                manifest = run_scenario(config, o);
            }
            return to_python(manifest_to_json(manifest));
        },
        py::arg("config"), py::arg("out_dir") = py::none(), py::arg("seed_override") = py::none(),
        py::arg("jobs") = 1, py::arg("quiet") = true, "Runs a scenario config and returns its manifest.");
}
