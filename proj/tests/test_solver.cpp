#include <doctest.h>

#include <cmath>
#include <cstring>
#include <map>
#include <vector>

#include "era/errors.hpp"
#include "era/estimator.hpp"
#include "era/solver.hpp"
#include "oracles.hpp"

using namespace era;
using era::testing::fit_polynomial;
using era::testing::poly_eval;
using era::testing::poly_integral;

namespace {

StateVector vec2(double a, double b) { return (StateVector(2) << a, b).finished(); }

SolverConfig make_config(Method method, int n, int k = 4, double lambda = 5.0) {
  SolverConfig config;
  config.method = method;
  config.k = k;
  config.lambda = lambda;
  config.schedule = NoiseSchedule::continuous_vp();
  config.grid = make_time_grid(config.schedule, n, GridScheme::uniform, 1.0, 1e-4);
  return config;
}

double relative(const StateVector& a, const StateVector& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace

TEST_CASE("ddim_step") {
  const auto s = NoiseSchedule::continuous_vp();
  const StateVector x = vec2(0.4, -1.3), eps = vec2(2.0, 0.5);

  SUBCASE("equal alpha_bar leaves x unchanged") {
    CHECK((ddim_step(s, x, 0.3, 0.3, eps) - x).norm() == 0.0);
  }
  SUBCASE("zero eps is a pure rescale") {
    const double scale = std::sqrt(s.alpha_bar(0.2) / s.alpha_bar(0.6));
    CHECK(relative(ddim_step(s, x, 0.6, 0.2, StateVector::Zero(2)), scale * x) < 1e-15);
  }
  SUBCASE("matches x0-prediction form") {
    // x0_hat = (x - sqrt(1-a) eps) / sqrt(a);  x' = sqrt(a') x0_hat + sqrt(1-a') eps.
    const double a = s.alpha_bar(0.7), a2 = s.alpha_bar(0.35);
    const StateVector x0_hat = (x - std::sqrt(1 - a) * eps) / std::sqrt(a);
    const StateVector expected = std::sqrt(a2) * x0_hat + std::sqrt(1 - a2) * eps;
    CHECK(relative(ddim_step(s, x, 0.7, 0.35, eps), expected) < 1e-14);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS((void)ddim_step(s, x, 0.2, 0.6, eps), PreconditionError);
    CHECK_THROWS_AS((void)ddim_step(s, x, 0.6, 0.2, StateVector::Zero(3)), ContractError);
  }
}

TEST_CASE("adams combinations") {
  const StateVector c = vec2(1.75, -3.0), z = StateVector::Zero(2);
  CHECK(relative(explicit_adams_eps(c, c, c, c), c) < 1e-15);
  CHECK(relative(implicit_adams_eps(c, c, c, c), c) < 1e-15);
  CHECK(explicit_adams_eps(vec2(24, 0), z, z, z) == vec2(55, 0));
  CHECK(implicit_adams_eps(vec2(24, 0), z, z, z) == vec2(9, 0));
  CHECK(explicit_adams_eps(z, vec2(24, 0), z, z) == vec2(-59, 0));
  CHECK(implicit_adams_eps(z, z, z, vec2(24, 0)) == vec2(1, 0));
}

TEST_CASE("adams weights integrate a cubic exactly over the next unit step") {
  // Newest observation at node 0, history at -1, -2, -3, next node at 1.
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> c(4);
    for (double& v : c) v = 4.0 * rng.uniform() - 2.0;
    auto p = [&](double s) { return StateVector::Constant(1, poly_eval(c, s)); };
    const double integral = poly_integral(c, 0.0, 1.0);
    const double ab = explicit_adams_eps(p(0), p(-1), p(-2), p(-3))[0];
    const double am = implicit_adams_eps(p(1), p(0), p(-1), p(-2))[0];
    CHECK(std::abs(ab - integral) < 1e-10 * std::max(1.0, std::abs(integral)));
    CHECK(std::abs(am - integral) < 1e-10 * std::max(1.0, std::abs(integral)));
  }
}

TEST_CASE("era_step with a constant estimator is a ddim step") {
  const StateVector c = vec2(0.3, -0.2);
  ConstantEstimator estimator(c);
  const auto config = make_config(Method::era, 10);
  SamplerState state = start_state(estimator, config, vec2(1.0, 2.0));
  for (int i = 0; i < 3; ++i) state = advance(std::move(state), estimator, config);
  const StateVector x_before = state.x;
  StepRecord record;
  state = era_step(std::move(state), estimator, config, &record);
  const StateVector expected = ddim_step(config.schedule, x_before, config.grid[3], config.grid[4], c);
  CHECK(relative(state.x, expected) < 1e-12);
  CHECK(state.delta_eps < 1e-13);
  CHECK(record.delta_eps_used == 5.0);
  CHECK(record.selected == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("era_step by hand on the unit gaussian") {
  const auto config = make_config(Method::era, 10, 4, 0.5);
  GaussianOracle oracle(config.schedule, StateVector::Zero(2), 1.0);
  const auto& s = config.schedule;
  const auto& t = config.grid.times;

  // Warmed-up state built by hand: three DDIM steps from x_init.
  std::vector<StateVector> xs{vec2(0.8, -0.6)};
  std::vector<StateVector> es{std::sqrt(1 - s.alpha_bar(t[0])) * xs[0]};
  for (int i = 0; i < 3; ++i) {
    const double a = s.alpha_bar(t[i]), a2 = s.alpha_bar(t[i + 1]);
    xs.push_back(std::sqrt(a2 / a) * xs[i] +
                 (std::sqrt(1 - a2) - std::sqrt(a2 * (1 - a) / a)) * es[i]);
    es.push_back(std::sqrt(1 - a2) * xs.back());
  }

  SamplerState state = start_state(oracle, config, xs[0]);
  for (int i = 0; i < 3; ++i) state = advance(std::move(state), oracle, config);
  REQUIRE(state.i == 3);
  CHECK(relative(state.x, xs[3]) < 1e-14);
  CHECK(state.delta_eps == 0.5);

  // Step 4: delta_eps == lambda, so the nodes are buffer entries 0..3; the
  // predictor is the cubic through them, evaluated at t_4.
  double predicted[2], corrected[2];
  for (int d = 0; d < 2; ++d) {
    const auto cubic = fit_polynomial({t[0], t[1], t[2], t[3]},
                                      {es[0][d], es[1][d], es[2][d], es[3][d]});
    predicted[d] = poly_eval(cubic, t[4]);
    corrected[d] = (9 * predicted[d] + 19 * es[3][d] - 5 * es[2][d] + es[1][d]) / 24;
  }
  const double a = s.alpha_bar(t[3]), a2 = s.alpha_bar(t[4]);
  StateVector x4(2), eps_pred(2);
  for (int d = 0; d < 2; ++d) {
    x4[d] = std::sqrt(a2 / a) * xs[3][d] + (std::sqrt(1 - a2) - std::sqrt(a2 * (1 - a) / a)) * corrected[d];
    eps_pred[d] = predicted[d];
  }
  const double delta = (std::sqrt(1 - a2) * x4 - eps_pred).norm();

  StepRecord record;
  state = era_step(std::move(state), oracle, config, &record);
  CHECK(relative(state.x, x4) < 1e-11);
  CHECK(state.buffer.size() == 5);
  CHECK(state.nfe == 5);
  CHECK(state.delta_eps == doctest::Approx(delta).epsilon(1e-6));
  CHECK(record.selected == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("era_step preconditions") {
  ConstantEstimator estimator(vec2(0, 0));
  const auto config = make_config(Method::era, 10);
  SamplerState state = start_state(estimator, config, vec2(1, 1));
  CHECK_THROWS_AS((void)era_step(state, estimator, config), PreconditionError);
}

TEST_CASE("single step degenerates to ddim") {
  GaussianOracle oracle(NoiseSchedule::continuous_vp(), vec2(1.0, 0.0), 0.5);
  auto config = make_config(Method::ddim, 1);
  const StateVector x = vec2(0.2, 0.9);
  const auto result = sample(oracle, config, x);
  const StateVector expected = ddim_step(config.schedule, x, 1.0, 1e-4, oracle.estimate(x, 1.0));
  CHECK((result.final - expected).norm() == 0.0);
  CHECK(result.nfe == 1);
}

TEST_CASE("NFE accounting and buffer discipline") {
  auto mixture = std::make_shared<MixtureOracle>(
      NoiseSchedule::continuous_vp(),
      GaussianMixtureLaw{{0.5, 0.5}, {vec2(2, 0), vec2(-2, 0)}, {0.5, 0.5}});
  CountingEstimator counting(mixture);
  for (Method m : {Method::ddim, Method::explicit_adams, Method::fixed_pc, Method::era}) {
    for (int n : {4, 5, 10, 17}) {
      for (int k : {3, 4}) {
        const auto config = make_config(m, n, k);
        counting.reset();
        const auto result = sample(counting, config, vec2(0.5, 0.5));
        CHECK(result.nfe == n);
        CHECK(counting.count() == n);

        SamplerState state = start_state(counting, config, vec2(0.5, 0.5));
        while (state.i < n) state = advance(std::move(state), counting, config);
        CHECK(state.buffer.size() == static_cast<std::size_t>(n));
      }
    }
  }
}

TEST_CASE("constant estimator: all methods agree") {
  ConstantEstimator estimator(vec2(0.7, -0.4));
  for (int n : {4, 9, 25}) {
    auto config = make_config(Method::ddim, n);
    config.record_trajectory = true;
    const auto reference = sample(estimator, config, vec2(1.0, -1.0));
    for (Method m : {Method::explicit_adams, Method::fixed_pc, Method::era}) {
      config.method = m;
      const auto other = sample(estimator, config, vec2(1.0, -1.0));
      REQUIRE(other.trajectory.states.size() == reference.trajectory.states.size());
      for (std::size_t j = 0; j < other.trajectory.states.size(); ++j) {
        CHECK(relative(other.trajectory.states[j], reference.trajectory.states[j]) < 1e-12);
      }
    }
  }
}

TEST_CASE("fixed-last-4 era equals explicit adams on a uniform grid") {
  GaussianOracle oracle(NoiseSchedule::continuous_vp(), vec2(0.5, -1.0), 0.6);
  for (int n : {6, 12, 30}) {
    auto config = make_config(Method::explicit_adams, n);
    const auto adams = sample(oracle, config, vec2(0.3, 1.1));
    config.method = Method::era;
    config.selection = Selection::fixed_last_k;
    const auto era = sample(oracle, config, vec2(0.3, 1.1));
    CHECK(relative(era.final, adams.final) < 1e-10);
  }
}

TEST_CASE("trajectory recording") {
  GaussianOracle oracle(NoiseSchedule::continuous_vp(), StateVector::Zero(2), 1.0);
  auto config = make_config(Method::era, 8);
  config.record_trajectory = true;
  const auto result = sample(oracle, config, vec2(1, 0));
  CHECK(result.trajectory.times == config.grid.times);
  REQUIRE(result.trajectory.steps.size() == 8);
  CHECK(result.trajectory.steps[0].rule == StepRule::ddim);
  CHECK(result.trajectory.steps[3].rule == StepRule::era);
  CHECK(result.trajectory.steps[3].selected == std::vector<int>{0, 1, 2, 3});
  CHECK(result.trajectory.steps[3].delta_eps_used == config.lambda);
  CHECK((result.trajectory.states.back() - result.final).norm() == 0.0);

  config.method = Method::fixed_pc;
  const auto pc = sample(oracle, config, vec2(1, 0));
  CHECK(pc.trajectory.steps[3].rule == StepRule::predictor_corrector);
  CHECK(pc.trajectory.steps[7].rule == StepRule::explicit_adams);
}

TEST_CASE("perturbation fields are paired across methods") {
  const auto schedule = NoiseSchedule::continuous_vp();
  auto inner = std::make_shared<MixtureOracle>(
      schedule, GaussianMixtureLaw{{0.5, 0.5}, {vec2(2, 0), vec2(-2, 0)}, {0.5, 0.5}});
  auto perturbed = std::make_shared<PerturbedEstimator>(inner, PerturbationProfile{0.5, 2.0, 3, 1.0});
  using Log = std::map<double, StateVector>;
  auto recorder = [&](Log& log) {
    return FunctionEstimator(2, [&, p = perturbed](const StateVector& x, double t) {
      StateVector out = p->estimate(x, t);
      log[t] = out - inner->estimate(x, t);
      return out;
    });
  };
  Log era_log, pc_log;
  auto config = make_config(Method::era, 12);
  (void)sample(recorder(era_log), config, vec2(0.1, 0.2));
  config.method = Method::fixed_pc;
  (void)sample(recorder(pc_log), config, vec2(0.1, 0.2));
  REQUIRE(era_log.size() == 12);
  REQUIRE(pc_log.size() == 12);
  for (const auto& [t, delta] : era_log) {
    REQUIRE(pc_log.count(t) == 1);
    CHECK((pc_log[t] - delta).norm() < 1e-14);
  }
}

TEST_CASE("sampling is deterministic") {
  auto inner = std::make_shared<MixtureOracle>(
      NoiseSchedule::continuous_vp(),
      GaussianMixtureLaw{{0.3, 0.7}, {vec2(1, 1), vec2(-2, 0)}, {0.4, 0.6}});
  PerturbedEstimator perturbed(inner, {0.4, 1.0, 5, 1.0});
  for (Method m : {Method::ddim, Method::fixed_pc, Method::era}) {
    auto config = make_config(m, 15);
    config.record_trajectory = true;
    const auto a = sample(perturbed, config, vec2(0.3, -0.3));
    const auto b = sample(perturbed, config, vec2(0.3, -0.3));
    for (std::size_t j = 0; j < a.trajectory.states.size(); ++j) {
      CHECK(std::memcmp(a.trajectory.states[j].data(), b.trajectory.states[j].data(),
                        2 * sizeof(double)) == 0);
    }
  }
}

TEST_CASE("identity flow: order of accuracy") {
  GaussianOracle oracle(NoiseSchedule::continuous_vp(), StateVector::Zero(2), 1.0);
  const StateVector x_init = vec2(0.8, -0.6);
  auto error = [&](Method m, int n) {
    const auto r = sample(oracle, make_config(m, n), x_init);
    return (r.final - x_init).norm() / x_init.norm();
  };
  for (Method m : {Method::ddim, Method::fixed_pc, Method::era}) {
    const double e10 = error(m, 10), e20 = error(m, 20), e40 = error(m, 40);
    CHECK(e40 > 0.0);
    const double o1 = std::log2(e10 / e20), o2 = std::log2(e20 / e40);
    CAPTURE(to_string(m));
    CAPTURE(o1);
    CAPTURE(o2);
    if (m == Method::ddim) {
      CHECK(std::abs(o1 - 1.0) <= 0.3);
      CHECK(std::abs(o2 - 1.0) <= 0.3);
    } else {
      CHECK(o1 >= 1.8);
      CHECK(o2 >= 1.8);
    }
  }
  CHECK(error(Method::era, 40) < error(Method::ddim, 40));
}

TEST_CASE("configuration errors") {
  ConstantEstimator estimator(vec2(0, 0));
  CHECK_THROWS_AS((void)sample(estimator, make_config(Method::era, 3, 4), vec2(1, 1)), ConfigError);
  CHECK_THROWS_AS((void)sample(estimator, make_config(Method::fixed_pc, 3), vec2(1, 1)), ConfigError);
  CHECK_THROWS_AS((void)sample(estimator, make_config(Method::explicit_adams, 3), vec2(1, 1)),
                  ConfigError);
  CHECK_THROWS_AS((void)sample(estimator, make_config(Method::era, 10, 2), vec2(1, 1)), ConfigError);
  CHECK_THROWS_AS((void)sample(estimator, make_config(Method::era, 10, 4, 0.0), vec2(1, 1)),
                  ConfigError);
  CHECK_NOTHROW((void)sample(estimator, make_config(Method::era, 4, 4), vec2(1, 1)));
  CHECK_THROWS_AS((void)sample(estimator, make_config(Method::ddim, 5), StateVector::Ones(3)), ContractError);
  CHECK(parse_method("fixed_pc") == Method::fixed_pc);
  CHECK_THROWS_AS((void)parse_method("rk4"), ConfigError);
}
