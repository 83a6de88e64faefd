import math

import numpy as np
import pytest

import erasolver as es


def test_schedule_and_grid():
    s = es.NoiseSchedule.continuous_vp()
    assert s.alpha_bar(0.0) == 1.0
    grid = es.make_time_grid(s, 4, es.GridScheme.uniform, 1.0, 0.2)
    assert grid.times == pytest.approx([1.0, 0.8, 0.6, 0.4, 0.2])


def test_unit_gaussian_oracle():
    s = es.NoiseSchedule()
    oracle = es.GaussianOracle(s, np.zeros(2), 1.0)
    x = np.array([0.3, -1.2])
    np.testing.assert_allclose(oracle.estimate(x, 0.5), math.sqrt(1 - s.alpha_bar(0.5)) * x)


def test_selection_and_interpolation():
    assert es.translate_indices([5, 10, 15, 20], 20, 2.0, 1.0) == [1, 5, 11, 20]
    times = [1.0 - 0.01 * n for n in range(21)]
    assert es.select_indices(times, 4, 5.0, 50.0) == [0, 1, 2, 20]
    nodes = [0.9, 0.6, 0.4, 0.1]
    values = [np.array([t * t, 2 * t - 1]) for t in nodes]
    np.testing.assert_allclose(es.interpolate(nodes, values, 0.25), [0.0625, -0.5], atol=1e-12)


def test_python_callable_estimator_and_nfe():
    calls = []

    def eps(x, t):
        calls.append(t)
        return 0.5 * x

    est = es.FunctionEstimator(2, eps)
    grid = es.make_time_grid(es.NoiseSchedule(), 12)
    cfg = es.SolverConfig(es.Method.era, grid, k=4, lambda_=2.0, record_trajectory=True)
    result = es.sample(est, cfg, np.array([1.0, -1.0]))
    assert result.nfe == 12
    assert len(calls) == 12
    assert result.trajectory.times == grid.times
    with pytest.raises(ValueError):
        es.SolverConfig(es.Method.era, es.make_time_grid(es.NoiseSchedule(), 3), k=4)


def test_sweep_csv_round_trip():
    cfg = es.parse_config("[solver]\nmethods = ddim, era\n[sweep]\nnfe_list = 5, 10\nn_chains = 8\n")
    result = es.run_sweep(cfg)
    text = es.to_csv(result.rows)
    assert text.splitlines()[0] == "method,k,lambda,scheme,nfe,seed,metric,value"
    assert es.parse_csv(text) == result.rows
    assert es.to_csv(es.run_sweep(cfg).rows) == text
    assert es.render_plot(result.rows, "energy_distance").count("<polyline") == 2
