#include "era/solver.hpp"

#include <cmath>
#include <string>

#include "era/errors.hpp"

namespace era {

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::ddim: return "ddim";
    case Method::explicit_adams: return "explicit_adams";
    case Method::fixed_pc: return "fixed_pc";
    case Method::era: return "era";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "ddim") return Method::ddim;
  if (name == "explicit_adams") return Method::explicit_adams;
  if (name == "fixed_pc") return Method::fixed_pc;
  if (name == "era") return Method::era;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Selection selection) noexcept {
  return selection == Selection::error_robust ? "ers" : "fixed";
}

namespace {

constexpr int kAdamsHistory = 4;

int warmup_steps(const SolverConfig& config) {
  switch (config.method) {
    case Method::ddim: return config.grid.steps();
    case Method::explicit_adams:
    case Method::fixed_pc: return kAdamsHistory - 1;
    case Method::era: return config.k - 1;
  }
  return config.grid.steps();
}

bool is_final_step(const SamplerState& state, const SolverConfig& config) {
  return state.i + 1 == config.grid.steps();
}

// Evaluates at the new time unless this was the last step.
void observe(SamplerState& state, const NoiseEstimator& estimator, double t_next, bool final) {
  if (final) return;
  state.buffer.append(t_next, estimator.estimate(state.x, t_next));
  ++state.nfe;
}

}  // namespace

void SolverConfig::validate() const {
  const int n = grid.steps();
  if (n < 1) throw ConfigError("solver needs a grid with at least one step");
  if (k < 3) throw ConfigError("order k must be >= 3");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (constant_exponent && !(*constant_exponent >= 0.0)) {
    throw ConfigError("constant exponent must be non-negative");
  }
  if (max_exponent && !(*max_exponent >= 0.0)) throw ConfigError("exponent cap must be non-negative");
  switch (method) {
    case Method::ddim: break;
    case Method::explicit_adams:
    case Method::fixed_pc:
      if (n < kAdamsHistory) {
        throw ConfigError(std::string(to_string(method)) + " needs at least " +
                          std::to_string(kAdamsHistory) + " steps, got " + std::to_string(n));
      }
      break;
    case Method::era:
      if (n < k) {
        throw ConfigError("era with k=" + std::to_string(k) + " needs at least " +
                          std::to_string(k) + " steps, got " + std::to_string(n));
      }
      break;
  }
}

StateVector ddim_step(const NoiseSchedule& schedule, const StateVector& x, double t_from,
                      double t_to, const StateVector& eps) {
  if (x.size() != eps.size()) throw ContractError("ddim_step: dimension mismatch");
  if (t_to > t_from) throw PreconditionError("ddim_step must move backward in time");
  const double a_from = schedule.alpha_bar(t_from);
  const double a_to = schedule.alpha_bar(t_to);
  if (a_from == 0.0) throw NumericError("ddim_step: alpha_bar(t_from) is 0");
  const double x_coef = std::sqrt(a_to / a_from);
  const double eps_coef = std::sqrt(1.0 - a_to) - std::sqrt(a_to * (1.0 - a_from) / a_from);
  return x_coef * x + eps_coef * eps;
}

StateVector explicit_adams_eps(const StateVector& e3, const StateVector& e2, const StateVector& e1,
                               const StateVector& e0) {
  return (55.0 * e3 - 59.0 * e2 + 37.0 * e1 - 9.0 * e0) / 24.0;
}

StateVector implicit_adams_eps(const StateVector& e_next, const StateVector& e0,
                               const StateVector& e1, const StateVector& e2) {
  return (9.0 * e_next + 19.0 * e0 - 5.0 * e1 + e2) / 24.0;
}

SamplerState start_state(const NoiseEstimator& estimator, const SolverConfig& config,
                         StateVector x_init) {
  if (!x_init.allFinite()) throw ContractError("initial state must be finite");
  SamplerState state;
  state.i = 0;
  state.delta_eps = config.lambda;
  const double t0 = config.grid[0];
  state.buffer.append(t0, estimator.estimate(x_init, t0));
  state.nfe = 1;
  state.x = std::move(x_init);
  return state;
}

SamplerState era_step(SamplerState state, const NoiseEstimator& estimator,
                      const SolverConfig& config, StepRecord* record) {
  const int i = state.i;
  if (i < config.k - 1) throw PreconditionError("era_step before warmup completed");
  if (state.buffer.size() != static_cast<std::size_t>(i) + 1) {
    throw PreconditionError("era_step needs buffer length i + 1");
  }
  const double t_from = config.grid[i];
  const double t_to = config.grid[i + 1];
  const bool final = is_final_step(state, config);

  SelectedBases bases;
  if (config.selection == Selection::error_robust) {
    SelectionParams params;
    params.k = config.k;
    params.lambda = config.lambda;
    params.delta_eps = state.delta_eps;
    params.constant_exponent = config.constant_exponent;
    params.max_exponent = config.max_exponent;
    bases = select_bases(state.buffer, params);
  } else {
    bases = select_last(state.buffer, config.k);
  }
  const StateVector predicted = interpolate(bases, t_to);
  const StateVector corrected =
      implicit_adams_eps(predicted, state.buffer.from_newest(0).eps,
                         state.buffer.from_newest(1).eps, state.buffer.from_newest(2).eps);
  state.x = ddim_step(config.schedule, state.x, t_from, t_to, corrected);

  const double delta_used = state.delta_eps;
  observe(state, estimator, t_to, final);
  if (!final) state.delta_eps = error_measure(state.buffer.newest().eps, predicted);

  if (record) {
    record->rule = StepRule::era;
    record->delta_eps_used = delta_used;
    record->delta_eps_after = state.delta_eps;
    record->selected = std::move(bases.indices);
    record->pc_gap = error_measure(corrected, predicted);
  }
  state.i = i + 1;
  return state;
}

SamplerState advance(SamplerState state, const NoiseEstimator& estimator,
                     const SolverConfig& config, StepRecord* record) {
  const int i = state.i;
  if (i >= config.grid.steps()) throw PreconditionError("sampler already reached t_N");
  const double t_from = config.grid[i];
  const double t_to = config.grid[i + 1];
  if (record) {
    *record = StepRecord{};
    record->step = i;
    record->t_from = t_from;
    record->t_to = t_to;
    record->delta_eps_used = state.delta_eps;
  }

  if (i >= warmup_steps(config) && config.method == Method::era) {
    return era_step(std::move(state), estimator, config, record);
  }

  const bool final = is_final_step(state, config);
  if (i < warmup_steps(config)) {
    state.x = ddim_step(config.schedule, state.x, t_from, t_to, state.buffer.newest().eps);
    observe(state, estimator, t_to, final);
  } else {
    const auto& buf = state.buffer;
    const StateVector adams = explicit_adams_eps(buf.from_newest(0).eps, buf.from_newest(1).eps,
                                                 buf.from_newest(2).eps, buf.from_newest(3).eps);
    if (config.method == Method::explicit_adams || final) {
      // fixed_pc would need an evaluation at t_N to correct the last step.
      state.x = ddim_step(config.schedule, state.x, t_from, t_to, adams);
      observe(state, estimator, t_to, final);
      if (record) record->rule = StepRule::explicit_adams;
    } else {
      const StateVector x_pred = ddim_step(config.schedule, state.x, t_from, t_to, adams);
      StateVector predicted = estimator.estimate(x_pred, t_to);
      ++state.nfe;
      const StateVector corrected = implicit_adams_eps(predicted, buf.from_newest(0).eps,
                                                       buf.from_newest(1).eps, buf.from_newest(2).eps);
      state.x = ddim_step(config.schedule, state.x, t_from, t_to, corrected);
      if (record) {
        record->rule = StepRule::predictor_corrector;
        record->pc_gap = error_measure(corrected, predicted);
      }
      state.buffer.append(t_to, std::move(predicted));
    }
  }
  if (record) record->delta_eps_after = state.delta_eps;
  state.i = i + 1;
  return state;
}

SampleResult sample(const NoiseEstimator& estimator, const SolverConfig& config,
                    const StateVector& x_init) {
  config.validate();
  if (x_init.size() != estimator.dim()) throw ContractError("x_init dimension mismatch");

  SampleResult result;
  SamplerState state = start_state(estimator, config, x_init);
  if (config.record_trajectory) {
    result.trajectory.times.push_back(config.grid[0]);
    result.trajectory.states.push_back(state.x);
  }
  const int n = config.grid.steps();
  while (state.i < n) {
    StepRecord record;
    state = advance(std::move(state), estimator, config,
                    config.record_trajectory ? &record : nullptr);
    if (config.record_trajectory) {
      result.trajectory.times.push_back(config.grid[state.i]);
      result.trajectory.states.push_back(state.x);
      result.trajectory.steps.push_back(std::move(record));
    }
  }
  result.final = std::move(state.x);
  result.nfe = state.nfe;
  return result;
}

}  // namespace era
