import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npbayes.dp import Normal, Uniform
from npbayes.envelope import (
    ResidualSet,
    control_log_factor,
    predictive_cdf,
    rising_factorial_log,
)


def test_predictive_no_data_is_prior_guess():
    g0 = Normal(0.0, 1.0)
    for t in [-1.0, 0.0, 2.0]:
        assert predictive_cdf(t, np.empty((3, 0)), 2.0, g0) == pytest.approx(
            float(g0.cdf(t)), abs=1e-15
        )


def test_predictive_equal_weight_mixture():
    g0 = Uniform(0.0, 1.0)
    residuals = np.array([0.2, 0.6])  # n = 2, b = 2 -> w = 1/2
    val = predictive_cdf(0.5, residuals, 2.0, g0)
    assert val == pytest.approx(0.5 * 0.5 + 0.5 * 0.5, abs=1e-15)


def test_predictive_noninformative_limit_is_empirical():
    residuals = np.array([-1.0, 0.0, 0.5, 2.0])
    g0 = Normal(0.0, 1.0)
    for t in [-0.5, 0.4, 1.0]:
        emp = np.mean(residuals <= t)
        assert abs(predictive_cdf(t, residuals, 1e-9, g0) - emp) < 1e-8


def test_predictive_averages_across_draws():
    draws = [np.array([0.0, 1.0]), np.array([2.0, 3.0])]
    g0 = Uniform(0.0, 4.0)
    val = predictive_cdf(1.5, draws, 2.0, g0)
    # w = 0.5; averaged empirical frequency of r <= 1.5 is 2/4
    assert val == pytest.approx(0.5 * (1.5 / 4.0) + 0.5 * 0.5, abs=1e-15)


def test_predictive_w_override():
    residuals = np.array([0.25, 0.75])
    g0 = Uniform(0.0, 1.0)
    val = predictive_cdf(0.5, residuals, 123.0, g0, w_n=0.25)
    assert val == pytest.approx(0.25 * 0.5 + 0.75 * 0.5, abs=1e-15)


def test_predictive_is_valid_cdf():
    gen = np.random.default_rng(1)
    draws = gen.normal(size=(5, 40))
    g0 = Normal(0.0, 1.0)
    grid = np.linspace(-6, 6, 301)
    vals = predictive_cdf(grid, draws, 3.0, g0)
    assert np.all(np.diff(vals) >= 0)
    assert vals[0] < 1e-6 and vals[-1] > 1 - 1e-6


def test_rising_factorial_values():
    assert rising_factorial_log(0.7, 0) == 0.0
    assert rising_factorial_log(2.0, 3) == pytest.approx(math.log(24.0), rel=1e-13)
    assert rising_factorial_log(5.5, 1) == pytest.approx(math.log(5.5), rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(x=st.floats(0.01, 50.0), m=st.integers(0, 30))
def test_rising_factorial_recurrence(x, m):
    lhs = rising_factorial_log(x, m + 1)
    rhs = rising_factorial_log(x, m) + math.log(x + m)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_rising_factorial_domain():
    with pytest.raises(ValueError):
        rising_factorial_log(0.0, 2)
    with pytest.raises(ValueError):
        rising_factorial_log(1.0, -1)


def test_control_factor_zero_counts():
    assert control_log_factor([0, 0, 0], [0.2, 0.3, 0.5], 2.0) == 0.0


def test_control_factor_single_cell():
    n, b = 7, 1.3
    val = control_log_factor([n], [1.0], b)
    assert val == pytest.approx(n * math.log(b) - rising_factorial_log(b, n), rel=1e-12)


def test_control_factor_empty_cell_is_neutral():
    # splitting an empty cell off another empty cell changes nothing: only
    # occupied cells enter the product
    a = control_log_factor([3, 4, 0], [0.4, 0.4, 0.2], 1.7)
    b = control_log_factor([3, 4, 0, 0], [0.4, 0.4, 0.1, 0.1], 1.7)
    assert a == pytest.approx(b, rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(
    counts=st.lists(st.integers(0, 12), min_size=2, max_size=6),
    b=st.floats(0.1, 20.0),
    seed=st.integers(0, 10_000),
)
def test_control_factor_relabel_invariance(counts, b, seed):
    gen = np.random.default_rng(seed)
    k = len(counts)
    z = gen.dirichlet(np.ones(k) * 2.0)
    z = z / z.sum()
    perm = gen.permutation(k)
    a = control_log_factor(counts, z, b)
    bb = control_log_factor(np.asarray(counts)[perm], z[perm], b)
    assert a == pytest.approx(bb, rel=1e-12, abs=1e-12)


def test_control_factor_validation():
    with pytest.raises(ValueError):
        control_log_factor([1, 2], [0.5, 0.3, 0.2], 1.0)
    with pytest.raises(ValueError):
        control_log_factor([1, -1], [0.5, 0.5], 1.0)
    with pytest.raises(ValueError):
        control_log_factor([1, 1], [0.5, 0.5], 0.0)


def test_residual_set_counts():
    rs = ResidualSet(
        residuals=np.array([-1.0, -0.5, 0.0, 0.4, 0.9]),
        edges=np.array([-0.5, 0.5]),
        z=np.array([0.25, 0.5, 0.25]),
    )
    assert rs.counts().tolist() == [2, 2, 1]


def test_residual_set_validation():
    with pytest.raises(ValueError):
        ResidualSet(np.array([0.0]), np.array([1.0, 0.5]), np.array([0.2, 0.3, 0.5]))
    with pytest.raises(ValueError):
        ResidualSet(np.array([0.0]), np.array([0.5]), np.array([0.7, 0.7]))


def test_control_scan_prefers_frequency_match():
    # location family: residuals y - theta; the grid theta maximizing the
    # factor must reach the minimum total-variation gap to the target z
    y = np.array([-1.3, -0.8, -0.45, -0.1, 0.02, 0.3, 0.55, 1.2])
    edges = np.array([-0.5, 0.5])
    z = np.array([0.25, 0.5, 0.25])
    grid = np.linspace(-2.0, 2.0, 81)
    for b in [0.5, 3.0, 10.0]:
        best_val, best_tv = -np.inf, None
        min_tv = np.inf
        for theta in grid:
            rs = ResidualSet(y - theta, edges, z)
            counts = rs.counts()
            val = control_log_factor(counts, z, b)
            tv = 0.5 * np.abs(counts / y.size - z).sum()
            min_tv = min(min_tv, tv)
            if val > best_val:
                best_val, best_tv = val, tv
        assert best_tv == pytest.approx(min_tv, abs=1e-12)
