#include "era/estimator.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>

#include "era/errors.hpp"

namespace era {

void GaussianMixtureLaw::validate() const {
  if (weights.empty() || weights.size() != means.size() || weights.size() != stds.size()) {
    throw ContractError("mixture needs matching, non-empty weights/means/stds");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ContractError("mixture weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ContractError("mixture weights must sum to 1");
  for (double s : stds) {
    if (!(s > 0.0)) throw ContractError("mixture stds must be positive");
  }
  const auto d = means.front().size();
  if (d < 1) throw ContractError("mixture dimension must be positive");
  for (const auto& m : means) {
    if (m.size() != d) throw ContractError("mixture means differ in dimension");
    if (!m.allFinite()) throw ContractError("mixture means must be finite");
  }
}

StateVector GaussianMixtureLaw::draw(Rng& rng) const {
  std::size_t component = weights.size() - 1;
  double u = rng.uniform();
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (u < weights[j]) {
      component = j;
      break;
    }
    u -= weights[j];
  }
  return means[component] + stds[component] * rng.normal_vector(dim());
}

StateBatch GaussianMixtureLaw::draw(std::size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  StateBatch out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(rng));
  return out;
}

StateVector NoiseEstimator::estimate(const StateVector& x, double t) const {
  if (x.size() != dim()) {
    std::ostringstream msg;
    msg << describe() << ": state has dimension " << x.size() << ", expected " << dim();
    throw ContractError(msg.str());
  }
  return evaluate(x, t);
}

EstimatorPtr NoiseEstimator::with_seed(std::uint64_t) const { return shared_from_this(); }

GaussianOracle::GaussianOracle(NoiseSchedule schedule, StateVector mean, double std)
    : schedule_(std::move(schedule)), law_{{1.0}, {std::move(mean)}, {std}} {
  law_.validate();
}

StateVector GaussianOracle::evaluate(const StateVector& x, double t) const {
  const double abar = schedule_.alpha_bar(t);
  const double var = abar * std() * std() + 1.0 - abar;
  return (std::sqrt(1.0 - abar) / var) * (x - std::sqrt(abar) * mean());
}

StateVector GaussianOracle::exact_flow(const StateVector& x, double t_from, double t_to) const {
  const double a_from = schedule_.alpha_bar(t_from);
  const double a_to = schedule_.alpha_bar(t_to);
  const double s2 = std() * std();
  const double scale = std::sqrt((a_to * s2 + 1.0 - a_to) / (a_from * s2 + 1.0 - a_from));
  return std::sqrt(a_to) * mean() + scale * (x - std::sqrt(a_from) * mean());
}

double GaussianOracle::posterior_residual_variance(double t) const {
  const double abar = schedule_.alpha_bar(t);
  const double s2 = std() * std();
  return abar * s2 / (abar * s2 + 1.0 - abar);
}

std::string GaussianOracle::describe() const {
  std::ostringstream out;
  out << "gaussian_oracle(d=" << dim() << ", std=" << std() << ")";
  return out.str();
}

MixtureOracle::MixtureOracle(NoiseSchedule schedule, GaussianMixtureLaw law)
    : schedule_(std::move(schedule)), law_(std::move(law)) {
  law_.validate();
}

std::vector<double> MixtureOracle::responsibilities(const StateVector& x, double t) const {
  const double abar = schedule_.alpha_bar(t);
  const double root_abar = std::sqrt(abar);
  const auto d = static_cast<double>(dim());
  const std::size_t n = law_.weights.size();
  std::vector<double> log_p(n, -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < n; ++j) {
    if (law_.weights[j] == 0.0) continue;
    const double s2 = law_.stds[j] * law_.stds[j];
    const double var = abar * s2 + 1.0 - abar;
    log_p[j] = std::log(law_.weights[j]) - 0.5 * d * std::log(var) -
               0.5 * (x - root_abar * law_.means[j]).squaredNorm() / var;
  }
  const double shift = *std::max_element(log_p.begin(), log_p.end());
  double total = 0.0;
  for (double& lp : log_p) {
    lp = std::exp(lp - shift);
    total += lp;
  }
  for (double& lp : log_p) lp /= total;
  return log_p;
}

StateVector MixtureOracle::evaluate(const StateVector& x, double t) const {
  const double abar = schedule_.alpha_bar(t);
  const double root_abar = std::sqrt(abar);
  const double root_noise = std::sqrt(1.0 - abar);
  const auto resp = responsibilities(x, t);
  StateVector out = StateVector::Zero(x.size());
  for (std::size_t j = 0; j < resp.size(); ++j) {
    if (resp[j] == 0.0) continue;
    const double s2 = law_.stds[j] * law_.stds[j];
    const double var = abar * s2 + 1.0 - abar;
    out += (resp[j] * root_noise / var) * (x - root_abar * law_.means[j]);
  }
  return out;
}

std::string MixtureOracle::describe() const {
  std::ostringstream out;
  out << "mixture_oracle(d=" << dim() << ", components=" << law_.weights.size() << ")";
  return out.str();
}

double PerturbationProfile::magnitude(double t) const {
  if (amplitude == 0.0 || t >= t_start) return 0.0;
  return amplitude * std::pow((t_start - t) / t_start, exponent);
}

PerturbedEstimator::PerturbedEstimator(EstimatorPtr inner, PerturbationProfile profile)
    : inner_(std::move(inner)), profile_(profile) {
  if (!inner_) throw ContractError("perturbed estimator needs an inner estimator");
  if (!(profile_.amplitude >= 0.0)) throw ContractError("perturbation amplitude must be >= 0");
  if (!(profile_.exponent > 0.0)) throw ContractError("perturbation exponent must be > 0");
  if (!(profile_.t_start > 0.0)) throw ContractError("perturbation t_start must be > 0");
}

StateVector PerturbedEstimator::direction(double t) const {
  const auto quantized = static_cast<std::uint64_t>(std::llround(t * 1e9));
  Rng rng(derive_seed(profile_.seed, quantized));
  StateVector u = rng.normal_vector(dim());
  const double norm = u.norm();
  // A zero draw has probability 0; fall back to e_0 to keep the contract.
  if (norm == 0.0) {
    u.setZero();
    u[0] = 1.0;
    return u;
  }
  return u / norm;
}

StateVector PerturbedEstimator::evaluate(const StateVector& x, double t) const {
  StateVector out = inner_->estimate(x, t);
  const double magnitude = profile_.magnitude(t);
  if (magnitude != 0.0) out += magnitude * direction(t);
  return out;
}

EstimatorPtr PerturbedEstimator::with_seed(std::uint64_t seed) const {
  PerturbationProfile profile = profile_;
  profile.seed = seed;
  return std::make_shared<PerturbedEstimator>(inner_->with_seed(seed), profile);
}

std::string PerturbedEstimator::describe() const {
  std::ostringstream out;
  out << "perturbed(" << inner_->describe() << ", c=" << profile_.amplitude
      << ", p=" << profile_.exponent << ")";
  return out.str();
}

StateVector FunctionEstimator::evaluate(const StateVector& x, double t) const {
  StateVector out = fn_(x, t);
  if (out.size() != dim_) throw ContractError(name_ + ": callable returned wrong dimension");
  return out;
}

EstimatorPtr CountingEstimator::with_seed(std::uint64_t seed) const {
  return std::shared_ptr<CountingEstimator>(new CountingEstimator(inner_->with_seed(seed), count_));
}

StateVector CountingEstimator::evaluate(const StateVector& x, double t) const {
  count_->fetch_add(1, std::memory_order_relaxed);
  return inner_->estimate(x, t);
}

StateVector forward_diffuse(const NoiseSchedule& schedule, const StateVector& x0, double t,
                            const StateVector& noise) {
  if (x0.size() != noise.size()) throw ContractError("forward_diffuse: dimension mismatch");
  const double abar = schedule.alpha_bar(t);
  return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * noise;
}

}  // namespace era
