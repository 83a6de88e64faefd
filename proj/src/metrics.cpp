#include "era/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "era/errors.hpp"
#include "era/random.hpp"

namespace era {

double terminal_error(const StateVector& final, const StateVector& reference) {
  if (final.size() != reference.size()) throw ContractError("terminal_error: dimension mismatch");
  constexpr double kTiny = 1e-300;
  return (final - reference).norm() / std::max(reference.norm(), kTiny);
}

double convergence_order(std::span<const std::pair<int, double>> errors) {
  if (errors.size() < 3) throw DomainError("convergence_order needs at least 3 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [n, err] : errors) {
    if (n <= 0 || !(err > 0.0) || !std::isfinite(err)) {
      throw DomainError("convergence_order needs positive N and positive finite errors");
    }
    sx += -std::log(static_cast<double>(n));
    sy += std::log(err);
  }
  const double count = static_cast<double>(errors.size());
  const double mx = sx / count;
  const double my = sy / count;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, err] : errors) {
    const double dx = -std::log(static_cast<double>(n)) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(err) - my);
  }
  if (sxx == 0.0) throw DomainError("convergence_order needs distinct N");
  return sxy / sxx;
}

namespace {

void check_sets(std::span<const StateVector> a, std::span<const StateVector> b) {
  if (a.empty() || b.empty()) throw ContractError("distance needs non-empty sets");
  const auto d = a.front().size();
  for (const auto& v : a) {
    if (v.size() != d) throw ContractError("distance: dimension mismatch");
  }
  for (const auto& v : b) {
    if (v.size() != d) throw ContractError("distance: dimension mismatch");
  }
}

// Mean pairwise distance; each row sum is formed in index order, then the
// row sums are added pairwise.
double mean_pairwise(std::span<const StateVector> a, std::span<const StateVector> b) {
  std::vector<double> rows(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double s = 0.0;
    for (const auto& y : b) s += (a[i] - y).norm();
    rows[i] = s;
  }
  for (std::size_t width = 1; width < rows.size(); width *= 2) {
    for (std::size_t i = 0; i + width < rows.size(); i += 2 * width) rows[i] += rows[i + width];
  }
  return rows.front() / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace

double energy_distance(std::span<const StateVector> a, std::span<const StateVector> b) {
  check_sets(a, b);
  const double value = 2.0 * mean_pairwise(a, b) - mean_pairwise(a, a) - mean_pairwise(b, b);
  // The V-statistic is non-negative; clip rounding noise around 0.
  return std::max(0.0, value);
}

double sliced_wasserstein(std::span<const StateVector> a, std::span<const StateVector> b,
                          int n_projections, std::uint64_t seed) {
  check_sets(a, b);
  if (a.size() != b.size()) throw ContractError("sliced_wasserstein needs equal set sizes");
  if (n_projections < 1) throw ContractError("sliced_wasserstein needs n_projections >= 1");
  Rng rng(seed);
  const auto d = a.front().size();
  std::vector<double> pa(a.size()), pb(b.size());
  double total = 0.0;
  for (int p = 0; p < n_projections; ++p) {
    StateVector dir = rng.normal_vector(d);
    dir.normalize();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] = a[i].dot(dir);
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = b[i].dot(dir);
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    double w = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) w += std::abs(pa[i] - pb[i]);
    total += w / static_cast<double>(pa.size());
  }
  return total / n_projections;
}

std::vector<double> remap_robustness(std::span<const StateVector> x0_gen,
                                     const NoiseEstimator& estimator,
                                     const NoiseSchedule& schedule,
                                     std::span<const double> probe_times, std::uint64_t seed) {
  if (x0_gen.empty()) throw ContractError("remap_robustness needs at least one sample");
  std::vector<double> out;
  out.reserve(probe_times.size());
  for (std::size_t j = 0; j < probe_times.size(); ++j) {
    const double t = probe_times[j];
    double total = 0.0;
    for (std::size_t n = 0; n < x0_gen.size(); ++n) {
      Rng rng(derive_seed(derive_seed(seed, j), n));
      const StateVector noise = rng.normal_vector(x0_gen[n].size());
      const StateVector xt = forward_diffuse(schedule, x0_gen[n], t, noise);
      total += (noise - estimator.estimate(xt, t)).norm();
    }
    out.push_back(total / static_cast<double>(x0_gen.size()));
  }
  return out;
}

std::vector<double> default_probe_times(double t_start, double t_end, int count) {
  if (count < 1) throw ContractError("probe count must be >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int j = 1; j <= count; ++j) {
    out.push_back(t_end + (t_start - t_end) * static_cast<double>(j) / (count + 1));
  }
  return out;
}

}  // namespace era
