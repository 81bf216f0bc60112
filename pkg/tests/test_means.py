import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npbayes.dp import DPParams, Uniform
from npbayes.means import (
    BaseMomentSpec,
    central_moments,
    match_first_two_moments,
    stick_moments,
    stochastic_chain,
    transform_identity_check,
)
from npbayes.randkit import RngState


def beta_product_moment_quadrature(a, c, i, j, n=40):
    """Gauss-Jacobi oracle for E[B^i (1-B)^j], B ~ Beta(a, c).

    The rule integrates polynomials against the x^(a-1)(1-x)^(c-1) weight
    exactly once n exceeds the degree, so no Gamma-function identity enters.
    """
    from scipy.special import roots_jacobi

    t, w = roots_jacobi(n, c - 1.0, a - 1.0)
    x = 0.5 * (t + 1.0)
    num = np.dot(w, x**i * (1 - x) ** j)
    return num / w.sum()


def test_stick_moment_dirichlet_mean():
    tab = stick_moments(1.0, 1.0, 4)
    assert tab.entry(1, 0) == pytest.approx(0.5, abs=1e-14)
    tab = stick_moments(1.0, 3.0, 4)
    assert tab.entry(1, 0) == pytest.approx(0.25, abs=1e-14)


def test_stick_moment_bbar_square():
    # E (1-B)^2 = b/(b+2) for Beta(1, b); quadrature oracle confirms 0.5 at b=2
    oracle = beta_product_moment_quadrature(1.0, 2.0, 0, 2)
    assert oracle == pytest.approx(0.5, abs=1e-6)
    tab = stick_moments(1.0, 2.0, 4)
    assert tab.entry(0, 2) == pytest.approx(0.5, abs=1e-14)


def test_stick_moment_vs_quadrature_general_law():
    tab = stick_moments(2.5, 0.7, 5)
    for i, j in [(1, 1), (2, 3), (0, 5), (4, 0)]:
        assert tab.entry(i, j) == pytest.approx(
            beta_product_moment_quadrature(2.5, 0.7, i, j), abs=1e-12
        )


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.1, 20.0), b=st.floats(0.1, 20.0))
def test_stick_moment_algebraic_identity(a, b):
    tab = stick_moments(a, b, 3)
    assert tab.entry(1, 1) + tab.entry(2, 0) == pytest.approx(tab.entry(1, 0), rel=1e-12)


def test_stick_moment_table_invariants():
    tab = stick_moments(0.8, 1.7, 6)
    assert tab.entry(0, 0) == 1.0
    for (i, j), v in tab.entries.items():
        assert 0.0 <= v <= 1.0
        if i >= 1:
            assert v <= tab.entry(i - 1, j) + 1e-15
        if j >= 1:
            assert v <= tab.entry(i, j - 1) + 1e-15


def test_stick_moments_exact_fractions():
    tab = stick_moments(1, 2, 4)
    assert tab.entry(0, 2) == Fraction(1, 2)
    assert isinstance(tab.entry(2, 1), Fraction)


def test_central_moment_variance_dirichlet():
    # hand-solved order-2 equation: m2 = mu2 E B^2 / (1 - E(1-B)^2) = mu2/(1+b)
    sticks = stick_moments(1, 1, 4)
    base = BaseMomentSpec.uniform(0, 1, p_max=4, exact=True)
    m = central_moments(base, sticks, 4)
    assert m[0] == Fraction(1, 24)
    assert m[1] == 0


def test_central_moment_third_order_formula():
    # m3 = 2 mu3 / ((1+b)(2+b)) for Dirichlet sticks; uniform Y has mu3 = 0
    sticks = stick_moments(1, 2, 3)
    base = BaseMomentSpec.uniform(0, 1, p_max=3, exact=True)
    m = central_moments(base, sticks, 3)
    assert m[1] == 0


def test_central_moment_degenerate_y():
    sticks = stick_moments(1.0, 1.5, 4)
    base = BaseMomentSpec.degenerate(3.7, p_max=4)
    assert central_moments(base, sticks, 4) == [0, 0, 0]


def test_central_moments_float_path_matches_exact():
    exact = central_moments(
        BaseMomentSpec.uniform(0, 1, p_max=6, exact=True), stick_moments(1, 2, 6), 6
    )
    approx = central_moments(
        BaseMomentSpec.uniform(0.0, 1.0, p_max=6), stick_moments(1.0, 2.0, 6), 6
    )
    for e, a in zip(exact, approx):
        assert a == pytest.approx(float(e), rel=1e-12)


def test_base_moments_from_distribution_match_closed_form():
    spec = BaseMomentSpec.from_base(Uniform(0.0, 1.0), p_max=4)
    assert spec.theta0 == pytest.approx(0.5, abs=1e-12)
    assert spec.central[2] == pytest.approx(1 / 12, abs=1e-12)
    assert spec.central[4] == pytest.approx(1 / 80, abs=1e-12)


def test_transform_constant_g():
    params = DPParams(b=1.5, base=Uniform(0.0, 1.0))
    out = transform_identity_check(
        2.0, params, lambda x: np.full_like(x, 0.7), n_sim=200, quad_points=64, rng=RngState(1)
    )
    assert out.rhs_exact == pytest.approx((1 + 2.0 * 0.7) ** (-1.5), rel=1e-12)
    assert abs(out.lhs_mc - out.rhs_exact) < 1e-9  # degenerate mean: zero variance


def test_transform_identity_uniform_base():
    # analytic: int_0^1 log(1+x) dx = 2 log 2 - 1, so rhs = exp(1 - 2 log 2) = e/4
    params = DPParams(b=1.0, base=Uniform(0.0, 1.0))
    out = transform_identity_check(
        1.0, params, lambda x: x, n_sim=20_000, quad_points=200, rng=RngState(2)
    )
    assert out.rhs_exact == pytest.approx(math.e / 4, abs=1e-10)
    assert out.within_3se


def test_transform_identity_normal_base():
    # Hermite-quadrature path: g(x) = x^2 is nonnegative on the whole line
    from npbayes.dp import Normal

    params = DPParams(b=2.0, base=Normal(0.0, 1.0))
    out = transform_identity_check(
        0.7, params, lambda x: x**2, n_sim=20_000, quad_points=150, rng=RngState(8)
    )
    # independent oracle for the right side: E log(1 + 0.7 Z^2) by trapezoid
    z = np.linspace(-12, 12, 400_001)
    phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    rhs_direct = math.exp(-2.0 * np.trapezoid(np.log1p(0.7 * z * z) * phi, z))
    assert out.rhs_exact == pytest.approx(rhs_direct, rel=1e-9)
    assert out.within_3se


def test_normal_moment_spec_matches_quadrature():
    from npbayes.dp import Normal

    closed = BaseMomentSpec.normal(1.5, 2.0, p_max=6)
    quad = BaseMomentSpec.from_base(Normal(1.5, 2.0), p_max=6, n_nodes=200)
    assert quad.theta0 == pytest.approx(1.5, abs=1e-12)
    for p in range(2, 7):
        assert quad.central[p] == pytest.approx(closed.central[p], rel=1e-10, abs=1e-10)


def test_transform_rejects_negative_g():
    params = DPParams(b=1.0, base=Uniform(-1.0, 1.0))
    with pytest.raises(ValueError):
        transform_identity_check(1.0, params, lambda x: x, 10, 32, RngState(3))


def test_chain_stays_in_support():
    path = stochastic_chain(1.0, 1.0, Uniform(0.0, 1.0), steps=5000, burn_in=100, rng=RngState(4))
    assert path.min() >= 0.0 and path.max() <= 1.0


def test_chain_ergodic_mean():
    path = stochastic_chain(1.0, 1.0, Uniform(0.0, 1.0), steps=1_000_000, burn_in=10_000, rng=RngState(5))
    batches = np.array_split(path, 50)
    bm = np.array([b.mean() for b in batches])
    se = bm.std(ddof=1) / math.sqrt(bm.size)
    assert abs(path.mean() - 0.5) < 3 * se


def test_chain_variance_matches_recursion():
    # stationary variance for b=1, Y ~ U(0,1) is 1/24
    path = stochastic_chain(1.0, 1.0, Uniform(0.0, 1.0), steps=400_000, burn_in=4000, rng=RngState(6))
    assert path.var() == pytest.approx(1 / 24, rel=0.02)


def test_chain_domain():
    with pytest.raises(ValueError):
        stochastic_chain(1.0, 1.0, Uniform(), steps=10, burn_in=10, rng=RngState(1))


def test_moment_matching_adjustment():
    path = stochastic_chain(1.0, 1.0, Uniform(0.0, 1.0), steps=50_000, burn_in=500, rng=RngState(7))
    fixed = match_first_two_moments(path, 0.5, 1 / 24)
    assert fixed.mean() == pytest.approx(0.5, abs=1e-12)
    assert fixed.var() == pytest.approx(1 / 24, rel=1e-10)
