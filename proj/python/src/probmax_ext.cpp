#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "probmax/errors.hpp"
#include "probmax/geometry.hpp"
#include "probmax/harness.hpp"
#include "probmax/integrand.hpp"
#include "probmax/oracle.hpp"
#include "probmax/smoothing.hpp"
#include "probmax/solvers.hpp"

namespace py = pybind11;
using namespace probmax;

namespace {

py::dict oracle_dict(const OracleSample& s) {
  py::dict d;
  d["value"] = s.value_mean;
  d["grad"] = s.grad_mean;
  d["se"] = s.value_se;
  d["batch_size"] = s.batch_size;
  d["clamped"] = s.clamped;
  d["grad_noise_variance"] = s.grad_noise_variance;
  return d;
}

py::object to_python(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

nlohmann::json from_python(const py::object& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

}  // namespace

PYBIND11_MODULE(_ext, m) {
  m.doc() = "Probability maximization over symmetric convex bodies by smoothed stochastic approximation.";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<RuntimeError>(m, "ProbmaxRuntimeError", PyExc_RuntimeError);

  py::class_<RandomStream>(m, "RandomStream")
      .def(py::init<std::uint64_t>(), py::arg("seed") = 0)
      .def("derive", &RandomStream::derive, py::arg("index"))
      .def("split", &RandomStream::split)
      .def("uniform", &RandomStream::uniform)
      .def("normal", &RandomStream::normal)
      .def_property_readonly("position", &RandomStream::position);

  py::class_<ConvexBody>(m, "ConvexBody")
      .def_static("ball", &ConvexBody::ball, py::arg("dimension"), py::arg("radius") = 1.0)
      .def_static("box", &ConvexBody::box, py::arg("half_widths"))
      .def_static("ellipsoid", &ConvexBody::ellipsoid, py::arg("shape"))
      .def_static("sym_polytope", &ConvexBody::sym_polytope, py::arg("rows"), py::arg("volume") = py::none())
      .def_property_readonly("dimension", &ConvexBody::dimension)
      .def_property_readonly("kind", &ConvexBody::kind)
      .def("gauge", [](const ConvexBody& b, const Vector& p) { return minkowski_gauge(b, p); }, py::arg("point"))
      .def("contains", [](const ConvexBody& b, const Vector& p) { return contains(b, p); }, py::arg("point"))
      .def("volume", [](const ConvexBody& b) {
        const VolumeEstimate v = volume(b);
        return py::make_tuple(v.value, v.standard_error);
      })
      .def("sample", &sample_uniform, py::arg("stream"));

  py::class_<FeasibleSet>(m, "FeasibleSet")
      .def_static("polytope", &FeasibleSet::polytope, py::arg("A"), py::arg("b"))
      .def_static("ball", &FeasibleSet::ball, py::arg("center"), py::arg("radius"))
      .def_property_readonly("dimension", &FeasibleSet::dimension)
      .def_property_readonly("interior_point", &FeasibleSet::interior_point)
      .def("project", [](const FeasibleSet& s, const Vector& p) { return project(s, p); }, py::arg("point"))
      .def("sample", &sample_feasible, py::arg("stream"));

  py::class_<ProblemSpec>(m, "ProblemSpec")
      .def_static("create", &ProblemSpec::create, py::arg("body"), py::arg("feasible"), py::arg("m") = 2.0,
                  py::arg("s") = 0.1, py::arg("eps") = 0.1)
      .def_property_readonly("dimension", &ProblemSpec::dimension)
      .def_property_readonly("body", &ProblemSpec::body)
      .def_property_readonly("feasible", &ProblemSpec::feasible)
      .def_property_readonly("m", &ProblemSpec::degree)
      .def_property_readonly("s", [](const ProblemSpec& p) { return p.smoothing().value(); })
      .def_property_readonly("eps", &ProblemSpec::eps)
      .def_property_readonly("normalization", &ProblemSpec::normalization)
      .def_property_readonly("hash", [](const ProblemSpec& p) { return spec_hash(p); })
      .def("to_dict", [](const ProblemSpec& p) { return to_python(problem_to_json(p)); });

  m.def("example1", &example1, py::arg("m") = 2.0, py::arg("s") = 0.1, py::arg("eps") = 0.1);
  m.def("example2", &example2, py::arg("n"), py::arg("m") = 2.0, py::arg("s") = 0.1, py::arg("eps") = 0.1);
  m.def("problem_from_dict", [](const py::object& d) { return problem_from_json(from_python(d)); }, py::arg("doc"));

  m.def("smooth_max", [](double a, double b, double s) { return smooth_max(a, b, SmoothingParam(s)); },
        py::arg("u1"), py::arg("u2"), py::arg("s"));
  m.def("smooth_max_grad", [](double a, double b, double s) {
    const SmoothMaxGradient g = smooth_max_grad(a, b, SmoothingParam(s));
    return py::make_tuple(g.d1, g.d2);
  }, py::arg("u1"), py::arg("u2"), py::arg("s"));
  m.def("smooth_abs", [](double u, double s) { return smooth_abs(u, SmoothingParam(s)); }, py::arg("u"),
        py::arg("s"));
  m.def("smooth_abs_grad", [](double u, double s) { return smooth_abs_grad(u, SmoothingParam(s)); },
        py::arg("u"), py::arg("s"));

  m.def("integrand", [](const ProblemSpec& p, const Vector& x, const Vector& xi) { return integrand_value(x, xi, p); },
        py::arg("spec"), py::arg("x"), py::arg("xi"));
  m.def("integrand_smooth",
        [](const ProblemSpec& p, const Vector& x, const Vector& xi) { return integrand_smooth(x, xi, p); },
        py::arg("spec"), py::arg("x"), py::arg("xi"));
  m.def("integrand_smooth_grad",
        [](const ProblemSpec& p, const Vector& x, const Vector& xi) { return integrand_smooth_grad(x, xi, p); },
        py::arg("spec"), py::arg("x"), py::arg("xi"));

  m.def("estimate_f", [](const ProblemSpec& p, const Vector& x, std::uint64_t n, RandomStream& stream, bool smoothed) {
    py::gil_scoped_release release;
    const OracleSample s = estimate_f(x, n, stream, p, smoothed ? IntegrandKind::kSmoothed : IntegrandKind::kExact);
    py::gil_scoped_acquire acquire;
    return oracle_dict(s);
  }, py::arg("spec"), py::arg("x"), py::arg("n"), py::arg("stream"), py::arg("smoothed") = true);
  m.def("batch_gradient", [](const ProblemSpec& p, const Vector& x, std::uint64_t n, RandomStream& stream) {
    OracleSample s;
    {
      py::gil_scoped_release release;
      s = batch_gradient(x, n, stream, p);
    }
    return oracle_dict(s);
  }, py::arg("spec"), py::arg("x"), py::arg("n"), py::arg("stream"));
  m.def("hit_or_miss", [](const ProblemSpec& p, const Vector& x, std::uint64_t n, RandomStream& stream) {
    HitOrMissEstimate h;
    {
      py::gil_scoped_release release;
      h = hit_or_miss_probability(x, n, stream, p);
    }
    return py::make_tuple(h.estimate, h.standard_error);
  }, py::arg("spec"), py::arg("x"), py::arg("n"), py::arg("stream"));

  py::class_<SolverSchedule>(m, "SolverSchedule")
      .def_static("msa", &SolverSchedule::msa, py::arg("gamma0"), py::arg("beta"), py::arg("budget"))
      .def_static("ac_vssa", &SolverSchedule::ac_vssa, py::arg("eta"), py::arg("beta"), py::arg("a"),
                  py::arg("budget"), py::arg("lipschitz") = py::none())
      .def_property_readonly("scheme", [](const SolverSchedule& s) { return to_string(s.scheme); })
      .def_readonly("gamma0", &SolverSchedule::gamma0)
      .def_readonly("beta", &SolverSchedule::beta)
      .def_readonly("eta", &SolverSchedule::eta)
      .def_readonly("a", &SolverSchedule::a)
      .def_readonly("budget", &SolverSchedule::budget)
      .def("validate", &SolverSchedule::validate, py::arg("eps"));

  m.def("budget_iterations", &budget_iterations, py::arg("a"), py::arg("budget"));
  m.def("batch_size", &batch_size, py::arg("k"), py::arg("a"));
  m.def("next_lambda", &next_lambda, py::arg("lam"));

  m.def("run_solver", [](const ProblemSpec& p, const SolverSchedule& schedule, std::uint64_t seed,
                         std::optional<Vector> start) {
    IterateTrace trace;
    {
      py::gil_scoped_release release;
      RandomStream stream(seed);
      trace = run_solver(p, schedule, stream, start.value_or(p.feasible().interior_point()));
    }
    py::dict d;
    d["scheme"] = to_string(trace.scheme);
    d["output"] = Vector(trace.output());
    d["final_iterate"] = trace.final_iterate;
    d["iterations"] = trace.iterations();
    d["projections"] = trace.projections;
    d["samples"] = trace.samples;
    return d;
  }, py::arg("spec"), py::arg("schedule"), py::arg("seed"), py::arg("start") = py::none());

  m.def("estimate_gradient_lipschitz", [](const ProblemSpec& p, std::uint64_t pairs, std::uint64_t batch,
                                          RandomStream& stream) {
    py::gil_scoped_release release;
    return estimate_gradient_lipschitz(p, pairs, batch, stream);
  }, py::arg("spec"), py::arg("pairs"), py::arg("batch"), py::arg("stream"));

  m.def("run_experiment", [](const py::object& config) {
    const ExperimentConfig cfg = parse_config(from_python(config));
    nlohmann::json doc;
    {
      py::gil_scoped_release release;
      doc = report_to_json(run_experiment(cfg));
    }
    return to_python(doc);
  }, py::arg("config"), "Runs a full experiment described by a config dict and returns the report document.");

  m.def("bench", [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> out) {
    const ExperimentConfig cfg = load_config(config_path);
    py::gil_scoped_release release;
    const RunReport report = run_experiment(cfg);
    const std::filesystem::path dir = out.value_or(cfg.output_dir);
    emit_report(report, dir);
    return dir;
  }, py::arg("config_path"), py::arg("out") = py::none());
}
