#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "era/estimator.hpp"
#include "era/schedule.hpp"
#include "era/solver.hpp"

namespace era {

enum class EstimatorKind { gaussian, mixture };

/// Toy mixture used by default: means (+-2, 0), std 0.5, equal weights.
[[nodiscard]] GaussianMixtureLaw default_mixture_law();

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::mixture;
  GaussianMixtureLaw law;  // one component for the gaussian kind
  double perturbation_amplitude = 0.0;
  double perturbation_exponent = 1.0;
};

/// One sampler variant of a sweep. `label` is what appears in the method
/// column: ddim, explicit_adams, fixed_pc, era, era_fixed, or
/// era_const=<p> for the constant-exponent ablation.
struct MethodSpec {
  Method method = Method::era;
  Selection selection = Selection::error_robust;
  std::optional<double> constant_exponent;
  std::string label;

  [[nodiscard]] bool uses_k() const noexcept { return method == Method::era; }
};

[[nodiscard]] std::vector<MethodSpec> parse_method_list(const std::string& text,
                                                        const std::vector<double>& constant_exponents);

/// Everything a sweep needs. Defaults: continuous VP schedule, uniform grid
/// from t_max to 1e-4, the 2-D two-component toy mixture, k = 4, lambda = 5.
struct ExperimentConfig {
  NoiseSchedule schedule;
  EstimatorSpec estimator{EstimatorKind::mixture, default_mixture_law()};
  std::vector<MethodSpec> methods = parse_method_list("ddim, era", {});
  std::vector<int> nfe_list{10, 20};
  std::vector<int> k_list{4};
  double lambda = 5.0;
  std::optional<double> max_exponent;
  GridScheme scheme = GridScheme::uniform;
  double t_start = 1.0;
  double t_end = 1e-4;
  int n_chains = 256;
  std::uint64_t seed = 0;
  int probe_count = 10;
  bool sliced_wasserstein = false;
  int threads = 0;  // 0: hardware concurrency
  std::string out_dir = "out";

  void validate() const;
  [[nodiscard]] EstimatorPtr make_estimator() const;
  /// The unperturbed Gaussian oracle when the data law is a single Gaussian.
  [[nodiscard]] std::shared_ptr<const GaussianOracle> reference_oracle() const;
  [[nodiscard]] SolverConfig solver_config(const MethodSpec& method, int k, int nfe) const;
};

/// Reads an INI-style file with [schedule], [grid], [estimator],
/// [perturbation], [solver], [sweep] and [output] sections. Unknown keys are
/// rejected with ConfigError. `[solver] profile` selects preset defaults
/// (high_res: k=4, lambda=5, uniform grid; cifar10: k=4, lambda=15,
/// log_snr grid, t_end=1e-3) that explicit keys override.
[[nodiscard]] ExperimentConfig load_config(const std::string& path);
[[nodiscard]] ExperimentConfig parse_config(std::istream& in);

}  // namespace era
