#include "era/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "era/errors.hpp"

namespace era {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(sep, start);
    auto piece = trim(s.substr(start, end == std::string_view::npos ? s.npos : end - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not a number: '" + text + "'");
  return value;
}

long long to_integer(const std::string& key, const std::string& text) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not an integer: '" + text + "'");
  return value;
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& piece : split(text, ',')) out.push_back(to_double(key, piece));
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& piece : split(text, ',')) out.push_back(static_cast<int>(to_integer(key, piece)));
  return out;
}

StateVector to_vector(const std::string& key, const std::string& text) {
  const auto values = to_doubles(key, text);
  if (values.empty()) throw ConfigError(key + ": empty vector");
  return Eigen::Map<const StateVector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(key + ": not a boolean: '" + text + "'");
}

// Section accessor that remembers which keys were consumed.
class Section {
 public:
  Section(const pt::ptree& root, std::string name) : name_(std::move(name)) {
    if (auto child = root.get_child_optional(name_)) tree_ = *child;
  }

  std::optional<std::string> get(const std::string& key) {
    used_.insert(key);
    if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '\0'))) return trim(*v);
    return std::nullopt;
  }

  std::string qualified(const std::string& key) const { return name_ + "." + key; }

  void reject_unknown() const {
    for (const auto& [key, _] : tree_) {
      if (!used_.count(key)) throw ConfigError("unknown key '" + qualified(key) + "'");
    }
  }

 private:
  std::string name_;
  pt::ptree tree_;
  std::set<std::string> used_;
};

}  // namespace

GaussianMixtureLaw default_mixture_law() {
  GaussianMixtureLaw law;
  law.weights = {0.5, 0.5};
  law.means = {(StateVector(2) << 2.0, 0.0).finished(), (StateVector(2) << -2.0, 0.0).finished()};
  law.stds = {0.5, 0.5};
  return law;
}

std::vector<MethodSpec> parse_method_list(const std::string& text,
                                          const std::vector<double>& constant_exponents) {
  std::vector<MethodSpec> out;
  for (const auto& name : split(text, ',')) {
    if (name == "era_fixed") {
      out.push_back({Method::era, Selection::fixed_last_k, std::nullopt, name});
    } else if (name == "era_const") {
      if (constant_exponents.empty()) {
        throw ConfigError("method era_const needs solver.constant_exponents");
      }
      for (double p : constant_exponents) {
        std::ostringstream label;
        label << "era_const=" << p;
        out.push_back({Method::era, Selection::error_robust, p, label.str()});
      }
    } else {
      out.push_back({parse_method(name), Selection::error_robust, std::nullopt, name});
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  estimator.law.validate();
  if (methods.empty()) throw ConfigError("no methods configured");
  if (nfe_list.empty()) throw ConfigError("nfe_list is empty");
  for (int n : nfe_list) {
    if (n < 1) throw ConfigError("nfe_list entries must be >= 1");
  }
  if (k_list.empty()) throw ConfigError("k_list is empty");
  for (int k : k_list) {
    if (k < 3) throw ConfigError("k must be >= 3");
  }
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(t_start > t_end && t_end > 0.0)) throw ConfigError("need t_start > t_end > 0");
  if (t_start > schedule.t_max()) throw ConfigError("t_start beyond the schedule domain");
  if (n_chains < 1) throw ConfigError("n_chains must be >= 1");
  if (probe_count < 1) throw ConfigError("probe_count must be >= 1");
  if (!(estimator.perturbation_amplitude >= 0.0)) throw ConfigError("amplitude must be >= 0");
  if (!(estimator.perturbation_exponent > 0.0)) throw ConfigError("exponent must be > 0");
}

EstimatorPtr ExperimentConfig::make_estimator() const {
  EstimatorPtr base;
  if (estimator.kind == EstimatorKind::gaussian) {
    base = std::make_shared<GaussianOracle>(schedule, estimator.law.means.front(),
                                            estimator.law.stds.front());
  } else {
    base = std::make_shared<MixtureOracle>(schedule, estimator.law);
  }
  if (estimator.perturbation_amplitude == 0.0) return base;
  PerturbationProfile profile;
  profile.amplitude = estimator.perturbation_amplitude;
  profile.exponent = estimator.perturbation_exponent;
  profile.seed = seed;
  profile.t_start = t_start;
  return std::make_shared<PerturbedEstimator>(base, profile);
}

std::shared_ptr<const GaussianOracle> ExperimentConfig::reference_oracle() const {
  if (estimator.kind != EstimatorKind::gaussian) return nullptr;
  return std::make_shared<GaussianOracle>(schedule, estimator.law.means.front(),
                                          estimator.law.stds.front());
}

SolverConfig ExperimentConfig::solver_config(const MethodSpec& method, int k, int nfe) const {
  SolverConfig config;
  config.method = method.method;
  config.selection = method.selection;
  config.constant_exponent = method.constant_exponent;
  config.max_exponent = max_exponent;
  config.k = k;
  config.lambda = lambda;
  config.schedule = schedule;
  config.grid = make_time_grid(schedule, nfe, scheme, t_start, t_end);
  return config;
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  static const std::set<std::string> kSections = {"schedule",   "grid",   "estimator", "perturbation",
                                                  "solver",     "sweep",  "output"};
  for (const auto& [name, _] : root) {
    if (!kSections.count(name)) throw ConfigError("unknown section [" + name + "]");
  }

  ExperimentConfig cfg;

  Section schedule(root, "schedule");
  const std::string kind = schedule.get("kind").value_or("continuous_vp");
  if (kind == "continuous_vp") {
    cfg.schedule = NoiseSchedule::continuous_vp(
        to_double("schedule.beta_start", schedule.get("beta_start").value_or("0.1")),
        to_double("schedule.beta_end", schedule.get("beta_end").value_or("20")));
    schedule.get("num_train_steps");
  } else if (kind == "discrete_linear_beta") {
    cfg.schedule = NoiseSchedule::discrete_linear(
        to_double("schedule.beta_start", schedule.get("beta_start").value_or("1e-4")),
        to_double("schedule.beta_end", schedule.get("beta_end").value_or("0.02")),
        static_cast<int>(to_integer("schedule.num_train_steps",
                                    schedule.get("num_train_steps").value_or("1000"))));
  } else {
    throw ConfigError("unknown schedule kind '" + kind + "'");
  }
  schedule.reject_unknown();

  // Profile presets first so explicit keys win.
  Section solver(root, "solver");
  const std::string profile = solver.get("profile").value_or("high_res");
  if (profile == "high_res") {
    cfg.lambda = 5.0;
    cfg.scheme = GridScheme::uniform;
  } else if (profile == "cifar10") {
    cfg.lambda = 15.0;
    cfg.scheme = GridScheme::log_snr;
    cfg.t_end = 1e-3;
  } else {
    throw ConfigError("unknown profile '" + profile + "'");
  }
  cfg.t_start = cfg.schedule.t_max();

  Section grid(root, "grid");
  if (auto v = grid.get("scheme")) cfg.scheme = parse_grid_scheme(*v);
  if (auto v = grid.get("t_start")) cfg.t_start = to_double("grid.t_start", *v);
  if (auto v = grid.get("t_end")) cfg.t_end = to_double("grid.t_end", *v);
  grid.reject_unknown();

  Section est(root, "estimator");
  const std::string est_kind = est.get("kind").value_or("mixture");
  if (est_kind == "gaussian") {
    cfg.estimator.kind = EstimatorKind::gaussian;
    const auto dim = to_integer("estimator.dim", est.get("dim").value_or("2"));
    if (dim < 1) throw ConfigError("estimator.dim must be >= 1");
    StateVector mean = StateVector::Zero(dim);
    if (auto v = est.get("mean")) mean = to_vector("estimator.mean", *v);
    const double std = to_double("estimator.std", est.get("std").value_or("1"));
    cfg.estimator.law = {{1.0}, {mean}, {std}};
  } else if (est_kind == "mixture") {
    cfg.estimator.kind = EstimatorKind::mixture;
    cfg.estimator.law = default_mixture_law();
    if (auto v = est.get("means")) {
      cfg.estimator.law.means.clear();
      for (const auto& m : split(*v, ';')) cfg.estimator.law.means.push_back(to_vector("estimator.means", m));
      const double w = 1.0 / static_cast<double>(cfg.estimator.law.means.size());
      cfg.estimator.law.weights.assign(cfg.estimator.law.means.size(), w);
      cfg.estimator.law.stds.assign(cfg.estimator.law.means.size(), 0.5);
    }
    if (auto v = est.get("weights")) cfg.estimator.law.weights = to_doubles("estimator.weights", *v);
    if (auto v = est.get("stds")) cfg.estimator.law.stds = to_doubles("estimator.stds", *v);
  } else {
    throw ConfigError("unknown estimator kind '" + est_kind + "'");
  }
  est.reject_unknown();

  Section pert(root, "perturbation");
  if (auto v = pert.get("amplitude")) cfg.estimator.perturbation_amplitude = to_double("perturbation.amplitude", *v);
  if (auto v = pert.get("exponent")) cfg.estimator.perturbation_exponent = to_double("perturbation.exponent", *v);
  pert.reject_unknown();

  std::vector<double> constant_exponents;
  if (auto v = solver.get("constant_exponents")) constant_exponents = to_doubles("solver.constant_exponents", *v);
  cfg.methods = parse_method_list(solver.get("methods").value_or("ddim, era"), constant_exponents);
  if (auto v = solver.get("k")) cfg.k_list = {static_cast<int>(to_integer("solver.k", *v))};
  if (auto v = solver.get("k_list")) cfg.k_list = to_ints("solver.k_list", *v);
  if (auto v = solver.get("lambda")) cfg.lambda = to_double("solver.lambda", *v);
  if (auto v = solver.get("max_exponent")) cfg.max_exponent = to_double("solver.max_exponent", *v);
  solver.reject_unknown();

  Section sweep(root, "sweep");
  if (auto v = sweep.get("nfe_list")) cfg.nfe_list = to_ints("sweep.nfe_list", *v);
  if (auto v = sweep.get("n_chains")) cfg.n_chains = static_cast<int>(to_integer("sweep.n_chains", *v));
  if (auto v = sweep.get("seed")) cfg.seed = static_cast<std::uint64_t>(to_integer("sweep.seed", *v));
  if (auto v = sweep.get("probe_count")) cfg.probe_count = static_cast<int>(to_integer("sweep.probe_count", *v));
  if (auto v = sweep.get("sliced_wasserstein")) cfg.sliced_wasserstein = to_bool("sweep.sliced_wasserstein", *v);
  if (auto v = sweep.get("threads")) cfg.threads = static_cast<int>(to_integer("sweep.threads", *v));
  sweep.reject_unknown();

  Section output(root, "output");
  if (auto v = output.get("dir")) cfg.out_dir = *v;
  output.reject_unknown();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace era
