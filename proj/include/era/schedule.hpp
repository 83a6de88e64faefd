#pragma once

#include <string_view>
#include <vector>

namespace era {

enum class ScheduleKind { discrete_linear_beta, continuous_vp };

/// Cumulative signal-retention curve alpha_bar(t) of a variance-preserving
/// diffusion. x_t = sqrt(alpha_bar) x_0 + sqrt(1 - alpha_bar) eps.
///
/// The discrete kind follows the DDPM convention: beta linearly spaced over
/// `num_train_steps` steps, alpha_bar(n) = prod_{s<=n} (1 - beta_s), and
/// log alpha_bar linearly interpolated between integer steps. Its time
/// domain is [0, num_train_steps].
///
/// The continuous kind is the VP-SDE with linear beta(t) from `beta_start`
/// to `beta_end` over t in [0, 1]:
///   log alpha_bar(t) = -(beta_end - beta_start) t^2 / 2 - beta_start t.
class NoiseSchedule {
 public:
  /// Continuous VP schedule with beta from 0.1 to 20.
  NoiseSchedule() = default;
  static NoiseSchedule discrete_linear(double beta_start = 1e-4, double beta_end = 0.02,
                                       int num_train_steps = 1000);
  static NoiseSchedule continuous_vp(double beta_min = 0.1, double beta_max = 20.0);

  [[nodiscard]] ScheduleKind kind() const noexcept { return kind_; }
  [[nodiscard]] double beta_start() const noexcept { return beta_start_; }
  [[nodiscard]] double beta_end() const noexcept { return beta_end_; }
  [[nodiscard]] int num_train_steps() const noexcept { return num_train_steps_; }

  /// Upper end of the time domain (num_train_steps, or 1 for continuous).
  [[nodiscard]] double t_max() const noexcept;

  /// Throws DomainError outside [0, t_max()].
  [[nodiscard]] double alpha_bar(double t) const;
  [[nodiscard]] double log_alpha_bar(double t) const;

  /// Half log signal-to-noise ratio, 0.5 log(abar / (1 - abar)).
  /// Throws DomainError where alpha_bar is 0 or 1 (e.g. t = 0).
  [[nodiscard]] double log_snr(double t) const;

 private:
  void check_domain(double t) const;

  ScheduleKind kind_ = ScheduleKind::continuous_vp;
  double beta_start_ = 0.1;
  double beta_end_ = 20.0;
  int num_train_steps_ = 0;
  std::vector<double> log_alpha_bar_table_;  // discrete: entries 0..T
};

[[nodiscard]] double log_snr_from_alpha_bar(double alpha_bar);

enum class GridScheme { uniform, log_snr };

[[nodiscard]] std::string_view to_string(GridScheme scheme) noexcept;
[[nodiscard]] GridScheme parse_grid_scheme(std::string_view name);

/// Strictly decreasing sampling times t_0 > t_1 > ... > t_N.
struct TimeGrid {
  std::vector<double> times;
  GridScheme scheme = GridScheme::uniform;

  [[nodiscard]] int steps() const noexcept { return static_cast<int>(times.size()) - 1; }
  [[nodiscard]] double operator[](std::size_t i) const { return times[i]; }
};

/// Builds an n_steps grid from t_start down to t_end (both hit exactly).
/// The log_snr scheme spaces times uniformly in log_snr and inverts by
/// bisection; failure to bracket a target throws NumericError.
[[nodiscard]] TimeGrid make_time_grid(const NoiseSchedule& schedule, int n_steps, GridScheme scheme,
                                      double t_start, double t_end);

}  // namespace era
