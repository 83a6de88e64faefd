#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "era/estimator.hpp"
#include "era/lagrange.hpp"
#include "era/schedule.hpp"
#include "era/state.hpp"

namespace era {

/// Sampler family.
///  - ddim: first-order step with the fresh estimate at every time.
///  - explicit_adams: 4-step Adams-Bashforth combination (3 DDIM warmup steps).
///  - fixed_pc: traditional predictor-corrector; Adams-Bashforth predicts
///    x_{i+1}, the estimator is evaluated there, Adams-Moulton corrects.
///  - era: Lagrange-interpolation predictor over selected buffer entries
///    followed by the Adams-Moulton corrector (k-1 DDIM warmup steps).
enum class Method { ddim, explicit_adams, fixed_pc, era };

/// How era picks its k interpolation nodes.
enum class Selection { error_robust, fixed_last_k };

[[nodiscard]] std::string_view to_string(Method method) noexcept;
[[nodiscard]] Method parse_method(std::string_view name);
[[nodiscard]] std::string_view to_string(Selection selection) noexcept;

struct SolverConfig {
  Method method = Method::era;
  Selection selection = Selection::error_robust;
  int k = 4;
  double lambda = 5.0;
  std::optional<double> constant_exponent;
  std::optional<double> max_exponent;
  TimeGrid grid;
  NoiseSchedule schedule;
  bool record_trajectory = false;

  /// Throws ConfigError when the grid is too short for the method
  /// (era needs N >= k, explicit_adams and fixed_pc need N >= 4) or a knob
  /// is out of range.
  void validate() const;
};

/// Which update produced a step.
enum class StepRule { ddim, explicit_adams, predictor_corrector, era };

struct StepRecord {
  int step = 0;
  double t_from = 0.0;
  double t_to = 0.0;
  StepRule rule = StepRule::ddim;
  double delta_eps_used = 0.0;   // error measure driving the selection
  double delta_eps_after = 0.0;  // after observing eps at t_to
  std::vector<int> selected;     // buffer indices used as Lagrange nodes
  double pc_gap = 0.0;           // ||corrected eps - predicted eps||_2
};

struct Trajectory {
  std::vector<double> times;
  StateBatch states;
  std::vector<StepRecord> steps;
};

/// Everything one chain carries from step to step.
struct SamplerState {
  int i = 0;
  StateVector x;
  LagrangeBuffer buffer;
  double delta_eps = 0.0;
  long nfe = 0;
};

struct SampleResult {
  StateVector final;
  Trajectory trajectory;
  long nfe = 0;
};

/// Deterministic DDIM update from t_from to t_to with noise estimate eps:
///   x' = sqrt(a'/a) x + (sqrt(1 - a') - sqrt(a' (1 - a) / a)) eps.
[[nodiscard]] StateVector ddim_step(const NoiseSchedule& schedule, const StateVector& x,
                                   double t_from, double t_to, const StateVector& eps);

/// (55 e3 - 59 e2 + 37 e1 - 9 e0) / 24; e3 is the newest.
[[nodiscard]] StateVector explicit_adams_eps(const StateVector& e3, const StateVector& e2,
                                            const StateVector& e1, const StateVector& e0);

/// (9 e_next + 19 e0 - 5 e1 + e2) / 24; e_next is the prediction at t_{i+1},
/// e0 the newest observation.
[[nodiscard]] StateVector implicit_adams_eps(const StateVector& e_next, const StateVector& e0,
                                            const StateVector& e1, const StateVector& e2);

/// State at t_0: x_init plus its estimate in the buffer, delta_eps = lambda.
[[nodiscard]] SamplerState start_state(const NoiseEstimator& estimator, const SolverConfig& config,
                                       StateVector x_init);

/// One predictor-corrector step of era from t_i to t_{i+1}. Requires the
/// warmup to be done (i >= k - 1) and buffer length i + 1. On every step but
/// the last the estimator is evaluated at the new point, the result appended
/// to the buffer and delta_eps set to its distance from the prediction.
[[nodiscard]] SamplerState era_step(SamplerState state, const NoiseEstimator& estimator,
                                    const SolverConfig& config, StepRecord* record = nullptr);

/// One step of whatever rule config.method prescribes at state.i.
[[nodiscard]] SamplerState advance(SamplerState state, const NoiseEstimator& estimator,
                                   const SolverConfig& config, StepRecord* record = nullptr);

/// Runs the full grid. An N-step run costs exactly N estimator evaluations.
[[nodiscard]] SampleResult sample(const NoiseEstimator& estimator, const SolverConfig& config,
                                  const StateVector& x_init);

}  // namespace era
