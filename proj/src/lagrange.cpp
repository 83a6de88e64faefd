#include "era/lagrange.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "era/errors.hpp"

namespace era {

void LagrangeBuffer::append(double t, StateVector eps) {
  if (!entries_.empty()) {
    if (!(t < entries_.back().t)) {
      std::ostringstream msg;
      msg << "buffer times must strictly decrease: " << t << " after " << entries_.back().t;
      throw PreconditionError(msg.str());
    }
    if (eps.size() != entries_.back().eps.size()) {
      throw ContractError("buffer entries must share one dimension");
    }
  }
  entries_.push_back({t, std::move(eps)});
}

const BufferEntry& LagrangeBuffer::from_newest(std::size_t back) const {
  if (back >= entries_.size()) throw PreconditionError("buffer holds too few entries");
  return entries_[entries_.size() - 1 - back];
}

double SelectionParams::exponent() const {
  double p = constant_exponent ? *constant_exponent : delta_eps / lambda;
  if (max_exponent) p = std::min(p, *max_exponent);
  return p;
}

double error_measure(const StateVector& observed, const StateVector& predicted) {
  if (observed.size() != predicted.size()) throw ContractError("error_measure: dimension mismatch");
  return (observed - predicted).norm();
}

std::vector<double> init_indices(int i, int k) {
  if (k < 3) throw PreconditionError("selection order k must be >= 3");
  if (i < k - 1) {
    throw PreconditionError("init_indices needs i >= k - 1 (i=" + std::to_string(i) +
                            ", k=" + std::to_string(k) + ")");
  }
  std::vector<double> tau(static_cast<std::size_t>(k));
  for (int m = 1; m <= k; ++m) {
    // (i * m) / k is exact whenever the true value is an integer.
    tau[m - 1] = static_cast<double>(i) * m / k;
  }
  return tau;
}

std::vector<int> translate_indices(std::span<const double> tau_hat, int i, double exponent) {
  if (i <= 0) throw PreconditionError("translate_indices needs i > 0");
  if (!(exponent >= 0.0) || !std::isfinite(exponent)) {
    throw PreconditionError("translate_indices needs a finite, non-negative exponent");
  }
  // Guards floor() against landing one below an integral value via rounding.
  constexpr double kFloorGuard = 1e-9;
  std::vector<int> tau;
  tau.reserve(tau_hat.size());
  for (double th : tau_hat) {
    if (!(th > 0.0 && th <= i)) throw PreconditionError("initial indices must lie in (0, i]");
    const double ratio = th / i;
    const double value = ratio == 1.0 ? static_cast<double>(i) : std::pow(ratio, exponent) * i;
    tau.push_back(std::min(i, static_cast<int>(std::floor(value + kFloorGuard))));
  }
  return tau;
}

std::vector<int> translate_indices(std::span<const double> tau_hat, int i, double delta_eps,
                                   double lambda) {
  if (!(lambda > 0.0)) throw PreconditionError("lambda must be positive");
  return translate_indices(tau_hat, i, delta_eps / lambda);
}

std::vector<int> resolve_collisions(std::vector<int> indices, int i) {
  const int k = static_cast<int>(indices.size());
  if (k > i + 1) throw PreconditionError("cannot place k distinct indices in [0, i]");
  for (int m = 0; m < k; ++m) {
    indices[m] = std::clamp(indices[m], 0, i - (k - 1 - m));
  }
  for (int m = 1; m < k; ++m) {
    indices[m] = std::max(indices[m], indices[m - 1] + 1);
  }
  return indices;
}

namespace {

SelectedBases gather(const LagrangeBuffer& buffer, std::vector<int> indices) {
  SelectedBases out;
  out.entries.reserve(indices.size());
  for (int n : indices) out.entries.push_back(buffer[static_cast<std::size_t>(n)]);
  out.indices = std::move(indices);
  return out;
}

}  // namespace

SelectedBases select_bases(const LagrangeBuffer& buffer, const SelectionParams& params) {
  if (!(params.lambda > 0.0)) throw PreconditionError("lambda must be positive");
  if (params.k < 3) throw PreconditionError("selection order k must be >= 3");
  if (buffer.size() < static_cast<std::size_t>(params.k)) {
    throw PreconditionError("buffer holds " + std::to_string(buffer.size()) +
                            " entries, selection needs k=" + std::to_string(params.k));
  }
  const int i = static_cast<int>(buffer.size()) - 1;
  const auto tau_hat = init_indices(i, params.k);
  auto tau = translate_indices(tau_hat, i, params.exponent());
  return gather(buffer, resolve_collisions(std::move(tau), i));
}

SelectedBases select_last(const LagrangeBuffer& buffer, int k) {
  if (k < 1 || buffer.size() < static_cast<std::size_t>(k)) {
    throw PreconditionError("buffer holds too few entries for fixed selection");
  }
  const int i = static_cast<int>(buffer.size()) - 1;
  std::vector<int> indices(static_cast<std::size_t>(k));
  for (int m = 0; m < k; ++m) indices[m] = i - (k - 1 - m);
  return gather(buffer, std::move(indices));
}

std::vector<double> lagrange_weights(std::span<const double> nodes, double t_query) {
  const std::size_t k = nodes.size();
  if (k == 0) throw DegenerateInterpolationError("interpolation needs at least one node");
  std::vector<double> weights(k, 1.0);
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t l = 0; l < k; ++l) {
      if (l == m) continue;
      const double gap = nodes[m] - nodes[l];
      if (gap == 0.0) {
        std::ostringstream msg;
        msg << "duplicate interpolation node t=" << nodes[m];
        throw DegenerateInterpolationError(msg.str());
      }
      weights[m] *= (t_query - nodes[l]) / gap;
    }
  }
  return weights;
}

StateVector interpolate(std::span<const BufferEntry> bases, double t_query) {
  std::vector<double> nodes;
  nodes.reserve(bases.size());
  for (const auto& b : bases) nodes.push_back(b.t);
  const auto weights = lagrange_weights(nodes, t_query);
  StateVector out = StateVector::Zero(bases.front().eps.size());
  for (std::size_t m = 0; m < bases.size(); ++m) out += weights[m] * bases[m].eps;
  return out;
}

StateVector interpolate(const SelectedBases& bases, double t_query) {
  return interpolate(std::span<const BufferEntry>(bases.entries), t_query);
}

}  // namespace era
