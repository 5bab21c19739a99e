import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rkhs_causal.exceptions import (
    ConfigurationError,
    InsufficientDataError,
    UnsupportedOperationError,
)
from rkhs_causal.kernels import (
    KernelConfig,
    grad_kernel_column,
    gram,
    joint_median_heuristic,
    median_heuristic,
)

EQ1 = KernelConfig.exp_quadratic([1.0])


def test_gram_examples():
    assert gram([0.0], [0.0], EQ1).tolist() == [[1.0]]
    assert gram([0.0], [1.0], EQ1)[0, 0] == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert gram([0.0], [1.0], EQ1)[0, 0] == pytest.approx(0.60653, abs=1e-5)
    cfg = KernelConfig.exp_quadratic([1.0, 1.0])
    # each scalar factor evaluated separately, then multiplied
    expected = math.exp(-(1.0**2) / 2) * math.exp(-(2.0**2) / 2)
    assert gram([[0.0, 0.0]], [[1.0, 2.0]], cfg)[0, 0] == pytest.approx(expected, rel=1e-14)


def test_gram_exact_match():
    cfg = KernelConfig.exact_match()
    a = [[0.0, 1.0], [1.0, 1.0]]
    b = [[0.0, 1.0], [0.0, 0.0], [1.0, 1.0]]
    assert gram(a, b, cfg).tolist() == [[1, 0, 0], [0, 0, 1]]


def test_config_validation():
    with pytest.raises(ConfigurationError):
        KernelConfig.exp_quadratic([0.0])
    with pytest.raises(ConfigurationError):
        KernelConfig.exp_quadratic([np.inf])
    with pytest.raises(ConfigurationError):
        KernelConfig("exact_match", (1.0,))
    with pytest.raises(ConfigurationError):
        gram([[0.0, 1.0]], [[0.0]], KernelConfig.exp_quadratic([1.0, 1.0]))
    with pytest.raises(ConfigurationError):
        gram([[0.0, 1.0]], [[0.0, 1.0]], EQ1)


def test_grad_kernel_column_examples():
    assert grad_kernel_column([0.0], 0.0, EQ1).tolist() == [0.0]
    assert grad_kernel_column([1.0], 0.0, EQ1)[0] == pytest.approx(math.exp(-0.5), rel=1e-14)
    cfg = KernelConfig.exp_quadratic([0.5])
    h = 1e-5
    fd = (gram([0.3], [0.7 + h], cfg) - gram([0.3], [0.7 - h], cfg))[0, 0] / (2 * h)
    assert grad_kernel_column([0.3], 0.7, cfg)[0] == pytest.approx(fd, abs=1e-6)


def test_grad_requires_differentiable_kernel():
    with pytest.raises(UnsupportedOperationError):
        grad_kernel_column([0.0, 1.0], 0.0, KernelConfig.exact_match())


def test_grad_matches_finite_differences(rng):
    pts = rng.uniform(-1, 1, 15)
    cfg = KernelConfig.exp_quadratic([0.4])
    h = 1e-6
    for at in rng.uniform(-1, 1, 20):
        analytic = grad_kernel_column(pts, at, cfg)
        fd = (gram(pts, [at + h], cfg) - gram(pts, [at - h], cfg))[:, 0] / (2 * h)
        scale = np.maximum(np.abs(analytic), 1e-3)
        assert np.all(np.abs(analytic - fd) / scale < 1e-6)


def test_median_heuristic_examples():
    assert median_heuristic([[0.0], [1.0], [3.0]]) == (2.0,)
    assert median_heuristic([[2.5], [2.5], [2.5]]) == (1.0,)
    assert median_heuristic([[0.0, 0.0], [2.0, 10.0]]) == (2.0, 10.0)


def test_median_heuristic_lower_median_and_fallback():
    # distances {1, 2, 3, 1, 2, 1}: sorted 1,1,1,2,2,3 -> lower median index 2 -> 1
    assert median_heuristic([[0.0], [1.0], [2.0], [3.0]]) == (1.0,)
    # distances {0, 0, 0, 4, 4, 4} -> lower median 0 -> mean of positives
    assert median_heuristic([[0.0], [0.0], [0.0], [4.0]]) == (4.0,)
    assert median_heuristic([[0.0], [0.0], [0.0], [1.0], [5.0]]) == (1.0,)
    with pytest.raises(InsufficientDataError):
        median_heuristic([[1.0]])


def test_joint_median_heuristic():
    # Euclidean distances 5, 10, 5 -> lower median 5
    assert joint_median_heuristic([[0, 0], [3, 4], [6, 8]]) == (5.0, 5.0)


points = arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 3)),
                elements=st.floats(-5, 5, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(points, st.floats(0.1, 3.0))
def test_gram_symmetric_psd_bounded(pts, ls):
    cfg = KernelConfig.exp_quadratic([ls] * pts.shape[1])
    K = gram(pts, pts, cfg)
    n = K.shape[0]
    assert np.array_equal(K, K.T)
    assert np.all(np.diag(K) == 1.0)
    assert np.all((K >= 0) & (K <= 1))
    assert np.linalg.eigvalsh(K).min() >= -1e-8 * n


@settings(max_examples=40, deadline=None)
@given(points)
def test_exact_match_gram_psd(pts):
    pts = np.round(pts)
    K = gram(pts, pts, KernelConfig.exact_match())
    assert np.all(np.isin(K, (0.0, 1.0)))
    assert np.linalg.eigvalsh(K).min() >= -1e-8 * K.shape[0]


def test_product_of_grams_is_psd(rng):
    for _ in range(10):
        n = rng.integers(3, 40)
        a = rng.normal(size=(n, 2))
        b = rng.integers(0, 3, size=(n, 1)).astype(float)
        K = gram(a, a, KernelConfig.exp_quadratic(median_heuristic(a))) * gram(
            b, b, KernelConfig.exact_match()
        )
        assert np.linalg.eigvalsh(K).min() >= -1e-8 * n
