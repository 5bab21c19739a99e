import math

import numpy as np
import pytest

from conftest import make_continuous, make_discrete
from oracles import plugin_outcome_prob
from rkhs_causal import Dataset
from rkhs_causal.causal import ConditionalResponse, DoseResponse, TreatedResponse
from rkhs_causal.distributions import (
    CounterfactualDistribution,
    EmbeddingEstimate,
    default_candidate_grid,
    embed_counterfactual,
    herd,
    rkhs_distance,
)
from rkhs_causal.exceptions import ConfigurationError
from rkhs_causal.kernels import KernelConfig, gram

EQ1 = KernelConfig.exp_quadratic([1.0])
EXACT = KernelConfig.exact_match()
KY = KernelConfig.exp_quadratic([0.25])


def two_point_embedding():
    """Mean embedding of {0 w.p. 2/3, 1 w.p. 1/3} as an average of kernel columns."""
    return EmbeddingEstimate(np.full(3, 1 / 3), [0.0, 0.0, 1.0], KY)


def test_single_point_embedding():
    lam3 = 0.5
    data = Dataset(y=[1.5], d=[0.0], x=[0.0])
    emb = embed_counterfactual("d_ate", data, {"d": 1.0}, lam3, kernel_d=EQ1, kernel_x=EQ1, kernel_y=EQ1)
    for y in (1.5, 0.5, 3.0):
        expected = math.exp(-0.5 * (y - 1.5) ** 2) * math.exp(-0.5) / (1 + lam3)
        assert emb(y)[0] == pytest.approx(expected, rel=1e-12)
    grid = np.linspace(0, 3, 301)
    assert grid[np.argmax(emb(grid))] == pytest.approx(1.5)


@pytest.mark.parametrize("estimand", ["ate", "att", "cate"])
def test_embedding_matches_substituted_targets(rng, estimand):
    """Evaluating the embedding at y equals the mean estimator with Y replaced by K_{Yy}."""
    data = make_continuous(rng, 25, with_v=True)
    kd, kv, kx = KernelConfig.exp_quadratic([0.3]), EQ1, KernelConfig.exp_quadratic([1.0, 1.0])
    lam3, lam_inner = 0.03, 0.07
    est = CounterfactualDistribution(estimand, lam3, lam_inner, kd, kv, kx, KY)
    est.fit(data.y, data.d, data.x, data.v if estimand == "cate" else None)
    ys = np.array([-0.5, 0.3, 1.2])
    target = gram(data.y, ys, KY)
    for j, y in enumerate(ys):
        if estimand == "ate":
            emb = est.embed(0.4)
            mean = DoseResponse(lam3, kd, kx).fit(target[:, j], data.d, data.x).predict([0.4])[0]
        elif estimand == "att":
            emb = est.embed(0.4, d_prime=0.7)
            model = TreatedResponse(lam3, lam_inner, kd, kx).fit(target[:, j], data.d, data.x)
            mean = model.predict([0.4], [0.7])[0]
        else:
            emb = est.embed(0.4, v=0.1)
            model = ConditionalResponse(lam3, lam_inner, kd, kv, kx).fit(target[:, j], data.d, data.v, data.x)
            mean = model.predict([0.4], [0.1])[0]
        assert emb(y)[0] == pytest.approx(mean, abs=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_discrete_embedding_matches_plugin_probability(seed):
    data = make_discrete(np.random.default_rng(seed), n_d=2, n_x=3, n=150, n_y=3)
    for d in (0.0, 1.0):
        emb = embed_counterfactual("ate", data, {"d": d}, 1e-10, kernel_d=EXACT, kernel_x=EXACT, kernel_y=EXACT)
        for y0 in (0.0, 1.0, 2.0):
            assert emb(y0)[0] == pytest.approx(plugin_outcome_prob(data, d, y0), abs=1e-4)


def test_ds_embedding_equals_ate(rng):
    data = make_continuous(rng, 30)
    est = CounterfactualDistribution("ds", 0.01).fit(data.y, data.d, data.x)
    ate = CounterfactualDistribution("ate", 0.01).fit(data.y, data.d, data.x)
    grid = np.linspace(0, 1, 5)
    assert np.array_equal(est.coefficients(grid, X_alt=data.x), ate.coefficients(grid))
    with pytest.raises(ConfigurationError):
        est.coefficients(grid)


def test_coefficients_do_not_depend_on_outcome_order(rng):
    data = make_continuous(rng, 30)
    ky = KernelConfig.exp_quadratic([0.5])
    a = CounterfactualDistribution("ate", 0.01, kernel_y=ky).fit(data.y, data.d, data.x)
    b = CounterfactualDistribution("ate", 0.01, kernel_y=ky).fit(rng.permutation(data.y), data.d, data.x)
    assert np.array_equal(a.coefficients([0.5]), b.coefficients([0.5]))


def test_penalties_reported(rng):
    data = make_continuous(rng, 20, with_v=True)
    est = CounterfactualDistribution("cate", "loocv", "gcv").fit(data.y, data.d, data.x, data.v)
    assert set(est.penalties()) == {"lam3", "lam2"}
    with pytest.raises(ConfigurationError):
        CounterfactualDistribution("median").fit(data.y, data.d, data.x)


# herding ---------------------------------------------------------------------------

def test_herd_single_outcome_picks_nearest_grid_point():
    data = Dataset(y=[0.37], d=[0.0], x=[0.0])
    emb = embed_counterfactual("ate", data, {"d": 0.0}, 0.1, kernel_d=EQ1, kernel_x=EQ1, kernel_y=EQ1)
    grid = np.linspace(-1, 1, 21)
    sample = herd(emb, 1, grid)
    assert sample.points[0] == pytest.approx(0.4)


def test_herd_first_point_is_argmax(rng):
    emb = EmbeddingEstimate(rng.uniform(size=6), rng.normal(size=6), KY)
    grid = default_candidate_grid(emb.outcome_points[:, 0])
    sample = herd(emb, 1, grid)
    assert sample.indices.tolist() == [int(np.argmax(emb(grid)))]
    assert sample.points.shape == (1,)


def test_herd_ties_go_to_lowest_index():
    emb = EmbeddingEstimate([1.0], [0.0], KY)
    assert herd(emb, 1, [-1.0, 1.0]).indices.tolist() == [0]


def test_herd_two_point_frequencies():
    sample = herd(two_point_embedding(), 300)
    assert abs(np.mean(sample.points < 0.5) - 2 / 3) <= 0.1
    assert abs(np.mean(sample.points >= 0.5) - 1 / 3) <= 0.1


def test_herd_quadrature_improves():
    emb = two_point_embedding()
    sample = herd(emb, 400)
    assert rkhs_distance(emb, sample.points) < rkhs_distance(emb, sample.points[:25])


def test_herd_on_estimated_embedding(rng):
    data = make_continuous(rng, 60)
    emb = CounterfactualDistribution("ate", 0.01).fit(data.y, data.d, data.x).embed(0.5)
    sample = herd(emb, 200)
    assert rkhs_distance(emb, sample.points) < rkhs_distance(emb, sample.points[:10])
    assert np.isin(sample.points, sample.candidate_grid).all()


def test_herd_deterministic(rng):
    emb = EmbeddingEstimate(rng.uniform(size=5), rng.normal(size=5), KY)
    a, b = herd(emb, 50), herd(emb, 50)
    assert np.array_equal(a.points, b.points)


def test_herd_validation():
    emb = two_point_embedding()
    with pytest.raises(ConfigurationError):
        herd(emb, 0)
    with pytest.raises(ConfigurationError):
        herd(emb, 5, [])


def test_rkhs_distance_of_exact_sample_is_zero():
    emb = two_point_embedding()
    assert rkhs_distance(emb, [0.0, 0.0, 1.0]) == pytest.approx(0.0, abs=1e-7)


def test_default_candidate_grid():
    grid = default_candidate_grid([0.0, 2.0])
    assert grid.shape == (512,)
    assert grid[0] == -1.0 and grid[-1] == 3.0
    flat = default_candidate_grid([1.0, 1.0], size=3)
    assert flat.tolist() == [0.5, 1.0, 1.5]
