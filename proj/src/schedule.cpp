#include "era/schedule.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "era/errors.hpp"

namespace era {

NoiseSchedule NoiseSchedule::discrete_linear(double beta_start, double beta_end,
                                             int num_train_steps) {
  if (num_train_steps < 1) throw ConfigError("discrete schedule needs num_train_steps >= 1");
  if (!(beta_start > 0.0 && beta_end >= beta_start && beta_end < 1.0)) {
    throw ConfigError("discrete schedule needs 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.kind_ = ScheduleKind::discrete_linear_beta;
  s.beta_start_ = beta_start;
  s.beta_end_ = beta_end;
  s.num_train_steps_ = num_train_steps;
  s.log_alpha_bar_table_.resize(static_cast<std::size_t>(num_train_steps) + 1);
  s.log_alpha_bar_table_[0] = 0.0;
  for (int n = 1; n <= num_train_steps; ++n) {
    const double frac = num_train_steps == 1 ? 0.0 : static_cast<double>(n - 1) / (num_train_steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    s.log_alpha_bar_table_[n] = s.log_alpha_bar_table_[n - 1] + std::log1p(-beta);
  }
  return s;
}

NoiseSchedule NoiseSchedule::continuous_vp(double beta_min, double beta_max) {
  if (!(beta_min > 0.0 && beta_max >= beta_min)) {
    throw ConfigError("continuous VP schedule needs 0 < beta_min <= beta_max");
  }
  NoiseSchedule s;
  s.kind_ = ScheduleKind::continuous_vp;
  s.beta_start_ = beta_min;
  s.beta_end_ = beta_max;
  return s;
}

double NoiseSchedule::t_max() const noexcept {
  return kind_ == ScheduleKind::discrete_linear_beta ? static_cast<double>(num_train_steps_) : 1.0;
}

void NoiseSchedule::check_domain(double t) const {
  if (!(t >= 0.0 && t <= t_max())) {
    std::ostringstream msg;
    msg << "time " << t << " outside schedule domain [0, " << t_max() << "]";
    throw DomainError(msg.str());
  }
}

double NoiseSchedule::log_alpha_bar(double t) const {
  check_domain(t);
  if (kind_ == ScheduleKind::continuous_vp) {
    return -0.5 * (beta_end_ - beta_start_) * t * t - beta_start_ * t;
  }
  const auto n = static_cast<std::size_t>(std::floor(t));
  if (n >= static_cast<std::size_t>(num_train_steps_)) return log_alpha_bar_table_.back();
  const double frac = t - static_cast<double>(n);
  return (1.0 - frac) * log_alpha_bar_table_[n] + frac * log_alpha_bar_table_[n + 1];
}

double NoiseSchedule::alpha_bar(double t) const { return std::exp(log_alpha_bar(t)); }

double log_snr_from_alpha_bar(double alpha_bar) {
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
    throw DomainError("log_snr is singular at alpha_bar = " + std::to_string(alpha_bar));
  }
  return 0.5 * (std::log(alpha_bar) - std::log1p(-alpha_bar));
}

double NoiseSchedule::log_snr(double t) const {
  const double la = log_alpha_bar(t);
  if (la == 0.0) throw DomainError("log_snr is singular at t = " + std::to_string(t));
  // 1 - abar via expm1 keeps precision as t -> 0.
  return 0.5 * (la - std::log(-std::expm1(la)));
}

std::string_view to_string(GridScheme scheme) noexcept {
  return scheme == GridScheme::uniform ? "uniform" : "log_snr";
}

GridScheme parse_grid_scheme(std::string_view name) {
  if (name == "uniform") return GridScheme::uniform;
  if (name == "log_snr" || name == "logsnr" || name == "logSNR") return GridScheme::log_snr;
  throw ConfigError("unknown grid scheme '" + std::string(name) + "'");
}

namespace {

// Finds t in [lo, hi] with log_snr(t) = target; log_snr decreases in t.
double invert_log_snr(const NoiseSchedule& schedule, double target, double lo, double hi) {
  constexpr int kMaxIterations = 400;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;  // interval is one ulp wide
    if (schedule.log_snr(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (hi - lo <= 1e-10) return 0.5 * (lo + hi);
  std::ostringstream msg;
  msg << "log_snr inversion did not converge for target " << target;
  throw NumericError(msg.str());
}

}  // namespace

TimeGrid make_time_grid(const NoiseSchedule& schedule, int n_steps, GridScheme scheme,
                        double t_start, double t_end) {
  if (n_steps < 1) throw ConfigError("time grid needs n_steps >= 1");
  if (!(t_start > t_end && t_end > 0.0)) {
    throw ConfigError("time grid needs t_start > t_end > 0");
  }
  if (t_start > schedule.t_max()) {
    throw DomainError("t_start " + std::to_string(t_start) + " beyond schedule domain");
  }

  TimeGrid grid;
  grid.scheme = scheme;
  grid.times.resize(static_cast<std::size_t>(n_steps) + 1);
  grid.times.front() = t_start;
  grid.times.back() = t_end;

  if (scheme == GridScheme::uniform) {
    for (int i = 1; i < n_steps; ++i) {
      grid.times[i] = t_start + (t_end - t_start) * static_cast<double>(i) / n_steps;
    }
  } else {
    const double lambda_start = schedule.log_snr(t_start);
    const double lambda_end = schedule.log_snr(t_end);
    for (int i = 1; i < n_steps; ++i) {
      const double target =
          lambda_start + (lambda_end - lambda_start) * static_cast<double>(i) / n_steps;
      grid.times[i] = invert_log_snr(schedule, target, t_end, t_start);
    }
  }

  for (std::size_t i = 0; i + 1 < grid.times.size(); ++i) {
    if (!(grid.times[i] > grid.times[i + 1])) {
      throw NumericError("time grid is not strictly decreasing; schedule too flat for n_steps");
    }
  }
  return grid;
}

}  // namespace era
