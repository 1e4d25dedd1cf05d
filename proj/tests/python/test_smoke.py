import json
import math
import os
import pathlib

import numpy as np
import pytest

import drto

CONFIG_DIR = pathlib.Path(os.environ.get("DRTO_CONFIG_DIR", pathlib.Path(__file__).parents[2] / "configs"))


def small_config(**solver):
    doc = json.loads((CONFIG_DIR / "linear.json").read_text())
    doc["horizon"] = 10
    doc["delta"] = 5.0
    doc["solver"].update({"outer_iters": 20, **solver})
    return drto.parse_config(json.dumps(doc))


def test_kl_and_barycentric():
    p = drto.Gaussian(np.array([1.0]), np.array([[1.0]]))
    q = drto.Gaussian(np.array([0.0]), np.array([[1.0]]))
    assert drto.kl_gaussian(p, q) == pytest.approx(0.5)
    assert drto.kl_gaussian(p, p) == pytest.approx(0.0, abs=1e-14)
    mid = drto.barycentric(p, q, 0.5)
    assert mid.mean[0] == pytest.approx(0.5)


def test_safe_cholesky_and_errors():
    lower, jitter = drto.safe_cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
    np.testing.assert_allclose(lower @ lower.T, [[4.0, 2.0], [2.0, 3.0]], atol=1e-12)
    assert jitter == 0.0
    with pytest.raises(drto.NotPositiveDefinite):
        drto.safe_cholesky(np.array([[1.0, 0.0], [0.0, -1.0]]))
    assert issubclass(drto.NotPositiveDefinite, drto.Error)


def test_config_errors_name_the_field():
    with pytest.raises(drto.ConfigError, match="solver.lambda"):
        small_config(**{"lambda": 2.0})


def test_solve_and_evaluate():
    config = small_config()
    problem = drto.build_problem(config)
    assert problem.horizon == 10 and problem.state_dim == 2 and problem.action_dim == 1
    robust = drto.solve_robust(problem, config.solver)
    stochastic = drto.solve_stochastic(problem, config.solver)
    assert len(robust.policy) == 9
    assert robust.policy.steps[0].gain.shape == (1, 2)
    assert robust.iterations and robust.iterations[-1]["adversary_kl"] <= 5.0 * 1.05

    attack = drto.attack(stochastic.policy, stochastic.nominal, problem, config.solver)
    assert sum(drto.kl_profile(attack.worst, stochastic.nominal)) == pytest.approx(attack.kl)
    exact = drto.expected_cost(robust.policy, robust.worst, problem.initial, problem.cost)
    mean, se = drto.mc_rollout(robust.policy, robust.worst, problem.initial, problem.cost, 20000, seed=3)
    assert abs(mean - exact) <= 4 * se + 1e-3 * abs(exact)
    # the robust policy is never worse than the stochastic one under its own worst case
    assert exact <= drto.expected_cost(stochastic.policy, robust.worst, problem.initial, problem.cost) * 1.01


def test_run_experiment_writes_artifacts(tmp_path):
    config = small_config()
    result = drto.run_experiment(config, tmp_path)
    for name in ("trajectory.csv", "kl_profile.csv", "sweep.csv", "report.txt", "config_echo.json"):
        assert (tmp_path / name).is_file()
    assert len(result["sweep"]) == 21
    assert result["report"].startswith("status: ok")
    assert all(math.isfinite(r["distance"]) for r in result["sweep"] if r["valid"])
