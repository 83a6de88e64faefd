#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "era/estimator.hpp"
#include "era/schedule.hpp"
#include "era/state.hpp"

namespace era {

struct MetricReport {
  std::string name;
  double value = 0.0;
  long n_samples = 1;
  std::uint64_t seed = 0;
};

/// ||final - reference|| / max(||reference||, tiny).
[[nodiscard]] double terminal_error(const StateVector& final, const StateVector& reference);

/// Least-squares slope of log(error) against log(1/N). Needs >= 3 points
/// with positive N and positive errors (DomainError otherwise).
[[nodiscard]] double convergence_order(std::span<const std::pair<int, double>> errors);

/// 2 E||A - B|| - E||A - A'|| - E||B - B'|| over all pairs (the V-statistic,
/// so identical multisets give exactly 0). Row sums are accumulated in a
/// fixed order, so the result does not depend on threading.
[[nodiscard]] double energy_distance(std::span<const StateVector> a, std::span<const StateVector> b);

/// Mean over random unit directions of the 1-D Wasserstein-1 distance between
/// the projected sets (equal sizes only). A cross-check for energy_distance.
[[nodiscard]] double sliced_wasserstein(std::span<const StateVector> a,
                                        std::span<const StateVector> b, int n_projections,
                                        std::uint64_t seed);

/// Re-diffuses generated samples with seeded noise and measures how far the
/// estimator's prediction lands from that noise:
///   out[j] = mean_n || eps_{n,j} - eps_theta(forward_diffuse(x_n, t_j, eps_{n,j}), t_j) ||.
/// eps_{n,j} depends only on (seed, j, n), so two batches of equal size
/// scored with the same seed see identical noise.
[[nodiscard]] std::vector<double> remap_robustness(std::span<const StateVector> x0_gen,
                                                   const NoiseEstimator& estimator,
                                                   const NoiseSchedule& schedule,
                                                   std::span<const double> probe_times,
                                                   std::uint64_t seed);

/// `count` times evenly spread strictly inside (t_end, t_start).
[[nodiscard]] std::vector<double> default_probe_times(double t_start, double t_end, int count = 10);

}  // namespace era
