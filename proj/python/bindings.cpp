#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "era/config.hpp"
#include "era/errors.hpp"
#include "era/estimator.hpp"
#include "era/lagrange.hpp"
#include "era/metrics.hpp"
#include "era/schedule.hpp"
#include "era/solver.hpp"
#include "era/sweep.hpp"

namespace py = pybind11;
using namespace era;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Error-robust Adams sampling for diffusion ODEs on analytic toy models.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  // schedule
  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def(py::init<>())
      .def_static("continuous_vp", &NoiseSchedule::continuous_vp, py::arg("beta_min") = 0.1,
                  py::arg("beta_max") = 20.0)
      .def_static("discrete_linear", &NoiseSchedule::discrete_linear, py::arg("beta_start") = 1e-4,
                  py::arg("beta_end") = 0.02, py::arg("num_train_steps") = 1000)
      .def_property_readonly("t_max", &NoiseSchedule::t_max)
      .def("alpha_bar", &NoiseSchedule::alpha_bar, py::arg("t"))
      .def("log_snr", &NoiseSchedule::log_snr, py::arg("t"));

  py::enum_<GridScheme>(m, "GridScheme")
      .value("uniform", GridScheme::uniform)
      .value("log_snr", GridScheme::log_snr);

  py::class_<TimeGrid>(m, "TimeGrid")
      .def_readonly("times", &TimeGrid::times)
      .def_readonly("scheme", &TimeGrid::scheme)
      .def("steps", &TimeGrid::steps);
  m.def("make_time_grid", &make_time_grid, py::arg("schedule"), py::arg("n_steps"),
        py::arg("scheme") = GridScheme::uniform, py::arg("t_start") = 1.0, py::arg("t_end") = 1e-4);

  // estimators
  py::class_<GaussianMixtureLaw>(m, "GaussianMixtureLaw")
      .def(py::init([](std::vector<double> w, std::vector<StateVector> mu, std::vector<double> s) {
             GaussianMixtureLaw law{std::move(w), std::move(mu), std::move(s)};
             law.validate();
             return law;
           }),
           py::arg("weights"), py::arg("means"), py::arg("stds"))
      .def_readonly("weights", &GaussianMixtureLaw::weights)
      .def_readonly("means", &GaussianMixtureLaw::means)
      .def_readonly("stds", &GaussianMixtureLaw::stds)
      .def("draw", py::overload_cast<std::size_t, std::uint64_t>(&GaussianMixtureLaw::draw, py::const_),
           py::arg("n"), py::arg("seed"));
  m.def("default_mixture_law", &default_mixture_law);

  py::class_<NoiseEstimator, std::shared_ptr<NoiseEstimator>>(m, "NoiseEstimator")
      .def("estimate", &NoiseEstimator::estimate, py::arg("x"), py::arg("t"))
      .def("with_seed",
           [](const NoiseEstimator& e, std::uint64_t seed) {
             return std::const_pointer_cast<NoiseEstimator>(e.with_seed(seed));
           })
      .def_property_readonly("dim", &NoiseEstimator::dim)
      .def("__repr__", &NoiseEstimator::describe);

  py::class_<GaussianOracle, NoiseEstimator, std::shared_ptr<GaussianOracle>>(m, "GaussianOracle")
      .def(py::init<NoiseSchedule, StateVector, double>(), py::arg("schedule"), py::arg("mean"),
           py::arg("std"))
      .def("exact_flow", &GaussianOracle::exact_flow, py::arg("x"), py::arg("t_from"), py::arg("t_to"))
      .def("posterior_residual_variance", &GaussianOracle::posterior_residual_variance);

  py::class_<MixtureOracle, NoiseEstimator, std::shared_ptr<MixtureOracle>>(m, "MixtureOracle")
      .def(py::init<NoiseSchedule, GaussianMixtureLaw>(), py::arg("schedule"), py::arg("law"))
      .def("responsibilities", &MixtureOracle::responsibilities);

  py::class_<PerturbationProfile>(m, "PerturbationProfile")
      .def(py::init([](double c, double p, std::uint64_t seed, double t_start) {
             return PerturbationProfile{c, p, seed, t_start};
           }),
           py::arg("amplitude"), py::arg("exponent") = 1.0, py::arg("seed") = 0, py::arg("t_start") = 1.0)
      .def("magnitude", &PerturbationProfile::magnitude);

  py::class_<PerturbedEstimator, NoiseEstimator, std::shared_ptr<PerturbedEstimator>>(m, "PerturbedEstimator")
      .def(py::init([](std::shared_ptr<NoiseEstimator> inner, PerturbationProfile profile) {
             return std::make_shared<PerturbedEstimator>(std::move(inner), profile);
           }),
           py::arg("inner"), py::arg("profile"));

  py::class_<FunctionEstimator, NoiseEstimator, std::shared_ptr<FunctionEstimator>>(m, "FunctionEstimator")
      .def(py::init<Eigen::Index, FunctionEstimator::Function, std::string>(), py::arg("dim"),
           py::arg("fn"), py::arg("name") = "function");

  py::class_<CountingEstimator, NoiseEstimator, std::shared_ptr<CountingEstimator>>(m, "CountingEstimator")
      .def(py::init([](std::shared_ptr<NoiseEstimator> inner) {
             return std::make_shared<CountingEstimator>(std::move(inner));
           }))
      .def_property_readonly("count", &CountingEstimator::count)
      .def("reset", &CountingEstimator::reset);

  m.def("forward_diffuse", &forward_diffuse, py::arg("schedule"), py::arg("x0"), py::arg("t"),
        py::arg("noise"));

  // lagrange
  m.def("error_measure", &error_measure);
  m.def("init_indices", &init_indices, py::arg("i"), py::arg("k"));
  m.def("translate_indices",
        [](const std::vector<double>& tau_hat, int i, double delta_eps, double lambda) {
          return translate_indices(tau_hat, i, delta_eps, lambda);
        },
        py::arg("tau_hat"), py::arg("i"), py::arg("delta_eps"), py::arg("lambda_"));
  m.def("select_indices",
        [](const std::vector<double>& times, int k, double lambda, double delta_eps) {
          LagrangeBuffer buffer;
          for (double t : times) buffer.append(t, StateVector::Zero(1));
          SelectionParams params;
          params.k = k;
          params.lambda = lambda;
          params.delta_eps = delta_eps;
          return select_bases(buffer, params).indices;
        },
        py::arg("times"), py::arg("k"), py::arg("lambda_"), py::arg("delta_eps"),
        "Indices chosen from a buffer observed at `times` (strictly decreasing).");
  m.def("interpolate",
        [](const std::vector<double>& times, const std::vector<StateVector>& values, double t) {
          if (times.size() != values.size()) throw ContractError("times and values differ in length");
          std::vector<BufferEntry> bases;
          for (std::size_t j = 0; j < times.size(); ++j) bases.push_back({times[j], values[j]});
          return interpolate(bases, t);
        },
        py::arg("times"), py::arg("values"), py::arg("t"));

  // solver
  py::enum_<Method>(m, "Method")
      .value("ddim", Method::ddim)
      .value("explicit_adams", Method::explicit_adams)
      .value("fixed_pc", Method::fixed_pc)
      .value("era", Method::era);
  py::enum_<Selection>(m, "Selection")
      .value("error_robust", Selection::error_robust)
      .value("fixed_last_k", Selection::fixed_last_k);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init([](Method method, TimeGrid grid, NoiseSchedule schedule, int k, double lambda,
                       Selection selection, bool record_trajectory) {
             SolverConfig c;
             c.method = method;
             c.grid = std::move(grid);
             c.schedule = schedule;
             c.k = k;
             c.lambda = lambda;
             c.selection = selection;
             c.record_trajectory = record_trajectory;
             c.validate();
             return c;
           }),
           py::arg("method"), py::arg("grid"), py::arg("schedule") = NoiseSchedule(), py::arg("k") = 4,
           py::arg("lambda_") = 5.0, py::arg("selection") = Selection::error_robust,
           py::arg("record_trajectory") = false)
      .def_readwrite("method", &SolverConfig::method)
      .def_readwrite("k", &SolverConfig::k)
      .def_readwrite("lambda_", &SolverConfig::lambda)
      .def_readwrite("record_trajectory", &SolverConfig::record_trajectory);

  py::class_<StepRecord>(m, "StepRecord")
      .def_readonly("step", &StepRecord::step)
      .def_readonly("t_from", &StepRecord::t_from)
      .def_readonly("t_to", &StepRecord::t_to)
      .def_readonly("delta_eps_used", &StepRecord::delta_eps_used)
      .def_readonly("delta_eps_after", &StepRecord::delta_eps_after)
      .def_readonly("selected", &StepRecord::selected)
      .def_readonly("pc_gap", &StepRecord::pc_gap);
  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("steps", &Trajectory::steps);
  py::class_<SampleResult>(m, "SampleResult")
      .def_readonly("final", &SampleResult::final)
      .def_readonly("trajectory", &SampleResult::trajectory)
      .def_readonly("nfe", &SampleResult::nfe);

  m.def("ddim_step", &ddim_step);
  m.def("explicit_adams_eps", &explicit_adams_eps);
  m.def("implicit_adams_eps", &implicit_adams_eps);
  m.def("sample", &sample, py::arg("estimator"), py::arg("config"), py::arg("x_init"));

  // metrics
  m.def("terminal_error", &terminal_error);
  m.def("convergence_order", [](const std::vector<std::pair<int, double>>& errors) {
    return convergence_order(errors);
  });
  m.def("energy_distance", [](const StateBatch& a, const StateBatch& b) { return energy_distance(a, b); });
  m.def("sliced_wasserstein",
        [](const StateBatch& a, const StateBatch& b, int n, std::uint64_t seed) {
          return sliced_wasserstein(a, b, n, seed);
        },
        py::arg("a"), py::arg("b"), py::arg("n_projections") = 64, py::arg("seed") = 0);
  m.def("remap_robustness",
        [](const StateBatch& x0, const NoiseEstimator& e, const NoiseSchedule& s,
           const std::vector<double>& probes, std::uint64_t seed) {
          return remap_robustness(x0, e, s, probes, seed);
        },
        py::arg("x0_gen"), py::arg("estimator"), py::arg("schedule"), py::arg("probe_times"),
        py::arg("seed") = 0);
  m.def("default_probe_times", &default_probe_times, py::arg("t_start"), py::arg("t_end"),
        py::arg("count") = 10);

  // harness
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readwrite("nfe_list", &ExperimentConfig::nfe_list)
      .def_readwrite("k_list", &ExperimentConfig::k_list)
      .def_readwrite("lambda_", &ExperimentConfig::lambda)
      .def_readwrite("n_chains", &ExperimentConfig::n_chains)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def_readwrite("out_dir", &ExperimentConfig::out_dir);
  m.def("parse_config", [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
  });
  m.def("load_config", &load_config);

  py::class_<ResultRow>(m, "ResultRow")
      .def_readonly("method", &ResultRow::method)
      .def_readonly("k", &ResultRow::k)
      .def_readonly("lambda_", &ResultRow::lambda)
      .def_readonly("scheme", &ResultRow::scheme)
      .def_readonly("nfe", &ResultRow::nfe)
      .def_readonly("seed", &ResultRow::seed)
      .def_readonly("metric", &ResultRow::metric)
      .def_readonly("value", &ResultRow::value)
      .def("__eq__", [](const ResultRow& a, const ResultRow& b) { return a == b; });
  py::class_<SweepResult>(m, "SweepResult")
      .def_readonly("rows", &SweepResult::rows)
      .def_readonly("skipped", &SweepResult::skipped);
  m.def("run_sweep",
        [](const ExperimentConfig& c, bool per_probe_remap, bool convergence_rows) {
          py::gil_scoped_release release;
          return run_sweep(c, SweepOptions{per_probe_remap, convergence_rows});
        },
        py::arg("config"), py::arg("per_probe_remap") = false, py::arg("convergence_rows") = false);
  m.def("to_csv", [](const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    write_csv(out, rows);
    return out.str();
  });
  m.def("parse_csv", [](const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in);
  });
  m.def("emit_csv", &emit_csv, py::arg("rows"), py::arg("path"));
  m.def("render_plot", &render_plot, py::arg("rows"), py::arg("metric"));
  m.def("emit_plot", &emit_plot, py::arg("rows"), py::arg("metric"), py::arg("path"));
}
