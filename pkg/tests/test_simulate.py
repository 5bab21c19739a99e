import numpy as np
import pytest
from scipy.special import expit

from rkhs_causal.exceptions import ConfigurationError
from rkhs_causal.simulate import (
    EstimatorSettings,
    default_eval_grid,
    dose_beta,
    dose_equations,
    dose_sigma,
    gen_dose_design,
    gen_hte_design,
    grid_mse,
    hte_equations,
    run_study,
    true_ate_curve,
    true_cate_curve,
)


def test_dose_design_deterministic():
    a, b = gen_dose_design(5, seed=7), gen_dose_design(5, seed=7)
    for name in ("y", "d", "x"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert not np.array_equal(a.y, gen_dose_design(5, seed=8).y)


def test_dose_design_shapes_and_parameters():
    data = gen_dose_design(20, seed=0)
    assert data.x.shape == (20, 100)
    beta = dose_beta()
    assert beta[0] == 1.0 and beta[1] == 0.25 and beta[99] == pytest.approx(1e-4)
    sigma = dose_sigma()
    assert np.all(np.diag(sigma) == 1.0)
    assert np.all(np.diag(sigma, 1) == 0.5) and np.all(np.diag(sigma, -1) == 0.5)
    assert np.count_nonzero(sigma) == 100 + 2 * 99


def test_dose_equations_without_noise():
    d, y = dose_equations(np.zeros((1, 100)), [0.0], [0.0])
    assert d[0] == 0.5
    assert y[0] == pytest.approx(0.85, abs=1e-15)


def test_dose_design_moments():
    data = gen_dose_design(100_000, seed=1)
    assert abs(data.d.mean() - 0.5) < 0.02
    cov = np.cov(data.x[:, :3], rowvar=False)
    np.testing.assert_allclose(cov, dose_sigma(3), atol=0.02)


def test_hte_design_deterministic_and_shapes():
    a, b = gen_hte_design(6, seed=3), gen_hte_design(6, seed=3)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.x, b.x)
    assert a.x.shape == (6, 3) and a.v.shape == (6, 1)
    assert set(np.unique(a.d)) <= {0.0, 1.0}


def test_hte_equations_without_noise():
    y, d, v, x, prob = hte_equations(np.zeros((1, 4)), [0.0], [0.0])
    assert x.tolist() == [[1.0, 1.0, 1.0]]
    assert prob[0] == pytest.approx(expit(1.5), rel=1e-15)
    assert d[0] == 1.0 and y[0] == 0.0


def test_hte_untreated_outcomes_are_zero():
    data = gen_hte_design(2000, seed=4)
    untreated = data.d[:, 0] == 0
    assert untreated.any() and (~untreated).any()
    assert np.all(data.y[untreated] == 0.0)


def test_hte_design_moments():
    data = gen_hte_design(100_000, seed=2)
    assert abs(data.v.mean()) < 0.01
    assert data.v.min() >= -0.5 and data.v.max() <= 0.5
    # residual of Y given treated (V, X) is nu with sd 0.25
    t = data.d[:, 0] == 1
    resid = data.y[t] - data.v[t, 0] * data.x[t].prod(axis=1)
    assert abs(resid.std() - 0.25) < 0.01


def test_truth_curves():
    ate = true_ate_curve([0.0, 1.0, 0.5]).values
    assert ate.tolist() == [0.0, 2.2, 0.85]
    cate = true_cate_curve([0.0, -0.5, 1.0, 0.25]).values
    assert cate.tolist() == [0.0, 0.0, 0.0, 0.31640625]


def test_default_grids():
    dose = default_eval_grid("dose")
    assert dose.shape == (100,) and dose[0] == 0.01 and dose[-1] == 1.0
    hte = default_eval_grid("hte")
    assert hte.shape == (99,) and hte[0] == -0.49 and hte[-1] == 0.49
    with pytest.raises(ConfigurationError):
        default_eval_grid("iv")


def test_grid_mse_self_check():
    grid = default_eval_grid("dose")
    truth = true_ate_curve(grid).values
    assert grid_mse(truth, truth) == 0.0
    assert grid_mse(truth + 0.1, truth) == pytest.approx(0.01)


def test_run_study_deterministic():
    settings = EstimatorSettings(heuristic="joint_median")
    a = run_study("dose", [50], 1, settings, seed=9)
    b = run_study("dose", [50], 1, settings, seed=9)
    assert a.records == b.records
    assert a.summary()["by_n"]["50"]["replications"] == 1
    assert a.records[0]["mse"] >= 0


def test_run_study_hte_summary():
    result = run_study("hte", [60, 80], 2, seed=1)
    summary = result.summary()
    assert set(summary["by_n"]) == {"60", "80"}
    assert summary["failures"] == []
    assert len(result.mses(80)) == 2


def test_run_study_records_failures():
    settings = EstimatorSettings(penalty=-1.0)
    result = run_study("hte", [30], 1, settings)
    assert result.records == []
    assert len(result.failures) == 1


def test_run_study_validation():
    with pytest.raises(ConfigurationError):
        run_study("dose", [10], 0)
    with pytest.raises(ConfigurationError):
        run_study("front", [10], 1)
