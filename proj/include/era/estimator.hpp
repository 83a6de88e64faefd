#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "era/random.hpp"
#include "era/schedule.hpp"
#include "era/state.hpp"

namespace era {

/// Isotropic Gaussian mixture in R^d: the clean-data law behind the analytic
/// oracles. A single component with weight 1 is a plain Gaussian.
struct GaussianMixtureLaw {
  std::vector<double> weights;
  std::vector<StateVector> means;
  std::vector<double> stds;

  /// Throws ContractError unless weights form a simplex (to 1e-12), stds are
  /// positive and every mean has the same dimension.
  void validate() const;
  [[nodiscard]] Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  [[nodiscard]] StateVector draw(Rng& rng) const;
  [[nodiscard]] StateBatch draw(std::size_t n, std::uint64_t seed) const;
};

/// The eps_theta(x, t) contract: predicts the noise that produced x at time t.
///
/// Implementations are immutable after construction, so one instance may be
/// evaluated concurrently from many sampling chains.
class NoiseEstimator : public std::enable_shared_from_this<NoiseEstimator> {
 public:
  virtual ~NoiseEstimator() = default;

  [[nodiscard]] virtual Eigen::Index dim() const = 0;

  /// Checks the dimension of x (ContractError) and evaluates.
  [[nodiscard]] StateVector estimate(const StateVector& x, double t) const;

  /// Copy bound to a different perturbation seed. Estimators without
  /// randomness return themselves.
  [[nodiscard]] virtual std::shared_ptr<const NoiseEstimator> with_seed(std::uint64_t seed) const;

  /// Clean-data law if analytically known (used for ground-truth draws).
  [[nodiscard]] virtual const GaussianMixtureLaw* data_law() const noexcept { return nullptr; }

  [[nodiscard]] virtual std::string describe() const = 0;

 protected:
  [[nodiscard]] virtual StateVector evaluate(const StateVector& x, double t) const = 0;
};

using EstimatorPtr = std::shared_ptr<const NoiseEstimator>;

/// Exact E[eps | x_t] for x_0 ~ N(mean, std^2 I):
///   eps*(x, t) = sqrt(1 - abar) (x - sqrt(abar) mean) / (abar std^2 + 1 - abar).
class GaussianOracle final : public NoiseEstimator {
 public:
  GaussianOracle(NoiseSchedule schedule, StateVector mean, double std);

  [[nodiscard]] Eigen::Index dim() const override { return law_.dim(); }
  [[nodiscard]] const GaussianMixtureLaw* data_law() const noexcept override { return &law_; }
  [[nodiscard]] std::string describe() const override;

  [[nodiscard]] const StateVector& mean() const { return law_.means.front(); }
  [[nodiscard]] double std() const { return law_.stds.front(); }
  [[nodiscard]] const NoiseSchedule& schedule() const { return schedule_; }

  /// Exact probability-flow map from t_from to t_to. The flow preserves the
  /// standardized coordinate (x - sqrt(abar) mean) / sqrt(abar std^2 + 1 - abar),
  /// so for mean 0, std 1 it is the identity.
  [[nodiscard]] StateVector exact_flow(const StateVector& x, double t_from, double t_to) const;

  /// Per-coordinate variance of eps given x_t: abar std^2 / (abar std^2 + 1 - abar).
  [[nodiscard]] double posterior_residual_variance(double t) const;

 protected:
  [[nodiscard]] StateVector evaluate(const StateVector& x, double t) const override;

 private:
  NoiseSchedule schedule_;
  GaussianMixtureLaw law_;
};

/// Exact E[eps | x_t] for a Gaussian-mixture data law: the responsibility
/// weighted combination of per-component Gaussian oracles. Responsibilities
/// come from the component marginals N(sqrt(abar) mu_j, (abar s_j^2 + 1 - abar) I)
/// evaluated in log space with a max shift.
class MixtureOracle final : public NoiseEstimator {
 public:
  MixtureOracle(NoiseSchedule schedule, GaussianMixtureLaw law);

  [[nodiscard]] Eigen::Index dim() const override { return law_.dim(); }
  [[nodiscard]] const GaussianMixtureLaw* data_law() const noexcept override { return &law_; }
  [[nodiscard]] std::string describe() const override;

  /// Posterior component probabilities at (x, t); sums to 1.
  [[nodiscard]] std::vector<double> responsibilities(const StateVector& x, double t) const;

 protected:
  [[nodiscard]] StateVector evaluate(const StateVector& x, double t) const override;

 private:
  NoiseSchedule schedule_;
  GaussianMixtureLaw law_;
};

/// Injected estimation error growing toward small t.
struct PerturbationProfile {
  double amplitude = 0.0;  // c >= 0
  double exponent = 1.0;   // p > 0
  std::uint64_t seed = 0;
  double t_start = 1.0;    // magnitude is 0 here and grows as t decreases

  /// c ((t_start - t) / t_start)^p, zero for t >= t_start.
  [[nodiscard]] double magnitude(double t) const;
};

/// inner(x, t) + magnitude(t) * u(seed, t), with u a pseudo-random unit vector
/// that depends only on the seed and t (quantized to 1e-9), never on x. Two
/// samplers run at the same seed therefore see the identical error field.
class PerturbedEstimator final : public NoiseEstimator {
 public:
  PerturbedEstimator(EstimatorPtr inner, PerturbationProfile profile);

  [[nodiscard]] Eigen::Index dim() const override { return inner_->dim(); }
  [[nodiscard]] EstimatorPtr with_seed(std::uint64_t seed) const override;
  [[nodiscard]] const GaussianMixtureLaw* data_law() const noexcept override {
    return inner_->data_law();
  }
  [[nodiscard]] std::string describe() const override;

  [[nodiscard]] const PerturbationProfile& profile() const { return profile_; }
  [[nodiscard]] const EstimatorPtr& inner() const { return inner_; }
  [[nodiscard]] StateVector direction(double t) const;

 protected:
  [[nodiscard]] StateVector evaluate(const StateVector& x, double t) const override;

 private:
  EstimatorPtr inner_;
  PerturbationProfile profile_;
};

/// eps == value everywhere.
class ConstantEstimator final : public NoiseEstimator {
 public:
  explicit ConstantEstimator(StateVector value) : value_(std::move(value)) {}

  [[nodiscard]] Eigen::Index dim() const override { return value_.size(); }
  [[nodiscard]] std::string describe() const override { return "constant"; }

 protected:
  [[nodiscard]] StateVector evaluate(const StateVector&, double) const override { return value_; }

 private:
  StateVector value_;
};

/// Adapts a callable; used by the Python bindings and tests.
class FunctionEstimator final : public NoiseEstimator {
 public:
  using Function = std::function<StateVector(const StateVector&, double)>;

  FunctionEstimator(Eigen::Index dim, Function fn, std::string name = "function")
      : dim_(dim), fn_(std::move(fn)), name_(std::move(name)) {}

  [[nodiscard]] Eigen::Index dim() const override { return dim_; }
  [[nodiscard]] std::string describe() const override { return name_; }

 protected:
  [[nodiscard]] StateVector evaluate(const StateVector& x, double t) const override;

 private:
  Eigen::Index dim_;
  Function fn_;
  std::string name_;
};

/// Counts evaluations of the wrapped estimator. Reseeded copies share the
/// counter, so a whole sweep can be tallied through one handle.
class CountingEstimator final : public NoiseEstimator {
 public:
  explicit CountingEstimator(EstimatorPtr inner)
      : inner_(std::move(inner)), count_(std::make_shared<std::atomic<long>>(0)) {}

  [[nodiscard]] Eigen::Index dim() const override { return inner_->dim(); }
  [[nodiscard]] EstimatorPtr with_seed(std::uint64_t seed) const override;
  [[nodiscard]] const GaussianMixtureLaw* data_law() const noexcept override {
    return inner_->data_law();
  }
  [[nodiscard]] std::string describe() const override { return "counting(" + inner_->describe() + ")"; }

  [[nodiscard]] long count() const { return count_->load(); }
  void reset() const { count_->store(0); }

 protected:
  [[nodiscard]] StateVector evaluate(const StateVector& x, double t) const override;

 private:
  CountingEstimator(EstimatorPtr inner, std::shared_ptr<std::atomic<long>> count)
      : inner_(std::move(inner)), count_(std::move(count)) {}

  EstimatorPtr inner_;
  std::shared_ptr<std::atomic<long>> count_;
};

/// sqrt(abar(t)) x0 + sqrt(1 - abar(t)) noise.
[[nodiscard]] StateVector forward_diffuse(const NoiseSchedule& schedule, const StateVector& x0,
                                          double t, const StateVector& noise);

}  // namespace era
