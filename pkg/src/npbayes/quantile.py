"""Quantile inference under the Dirichlet-process prior.

Prior and posterior laws of a single quantile Q(y), the polynomial-weighted
order-statistic estimator arising as the noninformative limit, and the
smoothing-parameter-free density estimator obtained by differentiating and
inverting that quantile estimator.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import integrate as _integrate

from npbayes.dp import BaseDistribution
from npbayes.randkit import log_gamma, reg_inc_beta

_BISECT_TOL = 1e-12
_EXACT_COMB_MAX_N = 500


@lru_cache(maxsize=1024)
def _comb_row(n: int) -> np.ndarray:
    """Exact binomial coefficients C(n-1, 0..n-1) as floats."""
    return np.array([math.comb(n - 1, k) for k in range(n)], dtype=float)


@dataclass(frozen=True, eq=False)
class SortedSample:
    """Strictly increasing data values; ties are rejected, not jittered."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.sort(np.asarray(self.values, dtype=float))
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("need at least one data point")
        if np.any(np.diff(vals) <= 0):
            raise ValueError("data points must be distinct")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.size


def _beta_cdf_safe(x: float, a: float, c: float) -> float:
    """Beta(a, c) cdf extended by the degenerate limits a->0 or c->0."""
    if a <= 0.0:
        return 1.0 if x > 0.0 else 0.0
    if c <= 0.0:
        return 1.0 if x >= 1.0 else 0.0
    return reg_inc_beta(x, a, c)


def prior_quantile_cdf(y: float, x: float, b: float, f0: BaseDistribution) -> float:
    """Prior probability that the y-quantile of the random F lies at or below x.

    Equals the Beta tail identity G(1-y; b(1-F0(x)), b F0(x)); as a function
    of x it factors through F0(x), so the uniform-base version evaluated at
    F0(x) gives the same number exactly.
    """
    if not 0 < y < 1:
        raise ValueError("y must lie in (0, 1)")
    if not b > 0:
        raise ValueError("b must be positive")
    p = float(np.asarray(f0.cdf(x)))
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    return _beta_cdf_safe(1.0 - y, b * (1.0 - p), b * p)


def _binomial_weights(y: float, n: int) -> np.ndarray:
    """Weights C(n-1, i-1) y^(i-1) (1-y)^(n-i) for i = 1..n.

    Exact integer binomials are used up to moderate n; beyond that the
    computation moves to log space through log_gamma.
    """
    i = np.arange(1, n + 1)
    if n <= _EXACT_COMB_MAX_N:
        return _comb_row(n) * y ** (i - 1.0) * (1.0 - y) ** (n - i)
    logc = log_gamma(float(n)) - log_gamma(i.astype(float)) - log_gamma(n - i + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ly = np.where(i == 1, 0.0, (i - 1.0) * np.log(y))
        lyb = np.where(i == n, 0.0, (n - i) * np.log1p(-y))
    return np.exp(logc + ly + lyb)


def noninf_point_masses(y: float, n: int) -> np.ndarray:
    """Posterior point masses of Q(y) on the order statistics in the b -> 0
    limit: mass C(n-1, i-1) y^(i-1) (1-y)^(n-i) on the i-th smallest point."""
    if not 0 < y < 1:
        raise ValueError("y must lie in (0, 1)")
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError("n must be a positive integer")
    return _binomial_weights(float(y), int(n))


def bernstein_quantile(y: float, data: SortedSample) -> float:
    """Polynomial-weighted average of the order statistics: the mean of the
    noninformative point-mass law, smooth in y with boundary values x_(1)
    and x_(n)."""
    if not 0 < y < 1:
        raise ValueError("y must lie in (0, 1)")
    return float(np.dot(_binomial_weights(float(y), data.n), data.values))


@dataclass(frozen=True, eq=False)
class QuantilePosteriorLaw:
    """Posterior law of Q(y) given data: smooth between consecutive data
    points, with point masses at the data points themselves.

    ``b == 0`` is the exact noninformative limit: all mass sits on the data.
    """

    y: float
    b: float
    data: SortedSample | None
    f0: BaseDistribution

    def __post_init__(self):
        if not 0 < self.y < 1:
            raise ValueError("y must lie in (0, 1)")
        if self.b < 0:
            raise ValueError("b must be nonnegative")
        if self.b == 0 and self.data is None:
            raise ValueError("b = 0 requires data")

    @property
    def n(self) -> int:
        return 0 if self.data is None else self.data.n

    def _segment_cdf(self, x: float, i: int) -> float:
        """cdf formula on the window [x_(i), x_(i+1)) holding i data <= x."""
        n = self.n
        if self.b == 0.0:
            return _beta_cdf_safe(1.0 - self.y, float(n - i), float(i))
        p = float(np.asarray(self.f0.cdf(x)))
        return _beta_cdf_safe(
            1.0 - self.y, self.b * (1.0 - p) + (n - i), self.b * p + i
        )

    def cdf(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        vals = self.data.values if self.data is not None else np.empty(0)
        counts = np.searchsorted(vals, xs, side="right")
        out = np.array([self._segment_cdf(xi, int(i)) for xi, i in zip(xs, counts)])
        return float(out[0]) if np.isscalar(x) else out

    @cached_property
    def point_masses(self) -> np.ndarray:
        """Mass at each data point: the jump of the cdf across it."""
        if self.data is None:
            return np.empty(0)
        n = self.n
        if self.b == 0.0:
            return noninf_point_masses(self.y, n)
        out = np.empty(n)
        for i, xi in enumerate(self.data.values, start=1):
            p = float(np.asarray(self.f0.cdf(xi)))
            upper = _beta_cdf_safe(
                1.0 - self.y, self.b * (1.0 - p) + (n - i), self.b * p + i
            )
            lower = _beta_cdf_safe(
                1.0 - self.y, self.b * (1.0 - p) + (n - i + 1), self.b * p + i - 1
            )
            out[i - 1] = max(upper - lower, 0.0)
        return out

    @property
    def continuous_mass(self) -> float:
        return 1.0 - float(self.point_masses.sum())

    def mean(self, tol: float = 1e-9) -> float:
        """E Q(y): atom sum plus window-by-window quadrature of the smooth part.

        Uses the tail-probability form E = int_0^inf (1-H) - int_-inf^0 H with
        windows split at the data points, zero, and finite support edges.
        """
        if self.b == 0.0:
            return float(np.dot(self.point_masses, self.data.values))
        lo, hi = self.f0.support
        # the integrand vanishes identically below min(support lo, 0) and
        # above max(support hi, 0); between those the cdf is smooth except
        # at the data points, so integrate window by window
        lo_edge = min(float(lo), 0.0) if math.isfinite(lo) else -math.inf
        hi_edge = max(float(hi), 0.0) if math.isfinite(hi) else math.inf
        pieces = {0.0}
        if math.isfinite(lo):
            pieces.add(float(lo))
        if math.isfinite(hi):
            pieces.add(float(hi))
        if self.data is not None:
            pieces.update(self.data.values.tolist())
        cuts = sorted(p for p in pieces if lo_edge < p < hi_edge)
        edges = [lo_edge] + cuts + [hi_edge]

        def integrand(t: float) -> float:
            h = float(self.cdf(t))
            return (1.0 - h) if t >= 0.0 else -h

        total, err_total = 0.0, 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("error", _integrate.IntegrationWarning)
            for a, c in zip(edges[:-1], edges[1:]):
                if a >= c:
                    continue
                try:
                    val, err = _integrate.quad(integrand, a, c, epsabs=tol, limit=200)
                except _integrate.IntegrationWarning as exc:
                    raise RuntimeError(
                        f"quantile mean integration did not converge on ({a}, {c}); "
                        "the base distribution may be too heavy-tailed"
                    ) from exc
                total += val
                err_total += err
        if err_total > 1e-6:
            raise RuntimeError("quantile mean integration error estimate too large")
        return total


def posterior_quantile_law(
    y: float, data: SortedSample | None, b: float, f0: BaseDistribution
) -> QuantilePosteriorLaw:
    """Posterior law of Q(y) after a conjugate update with the given data.

    With no data this is the prior law of Q(y); with b = 0 it is the exact
    noninformative limit carrying the binomial point masses only.
    """
    return QuantilePosteriorLaw(y=float(y), b=float(b), data=data, f0=f0)


def quantile_posterior_mean(
    y: float, data: SortedSample | None, b: float, f0: BaseDistribution
) -> float:
    """Posterior mean quantile; continuous in b down to the noninformative
    limit, where it coincides with :func:`bernstein_quantile`."""
    return posterior_quantile_law(y, data, b, f0).mean()


class AutomaticDensity:
    """Density estimator with no smoothing parameter.

    Differentiates the smooth quantile estimate analytically, inverts it by
    bisection, and returns the reciprocal slope; zero outside the data range.
    Callable; also exposes the fitted cdf and the quantile derivative.
    """

    def __init__(self, data: SortedSample):
        if data.n < 3:
            raise ValueError("automatic density needs at least 3 data points")
        self.data = data
        self._gaps = np.diff(data.values)  # x_(k+2) - x_(k+1), k = 0..n-2

    def quantile_estimate(self, y: float) -> float:
        return bernstein_quantile(y, self.data)

    def quantile_derivative(self, y: float) -> float:
        """Analytic slope of the quantile estimate: (n-1) times the
        gap-weighted Bernstein average of one lower degree."""
        n = self.data.n
        w = _binomial_weights(float(y), n - 1)
        return float((n - 1) * np.dot(w, self._gaps))

    def cdf(self, x: float) -> float:
        """Inverse of the quantile estimate by bisection to 1e-12."""
        x1, xn = self.data.values[0], self.data.values[-1]
        if x <= x1:
            return 0.0
        if x >= xn:
            return 1.0
        lo, hi = 0.0, 1.0
        while hi - lo > _BISECT_TOL:
            mid = 0.5 * (lo + hi)
            if bernstein_quantile(mid, self.data) < x:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def density(self, x: float) -> float:
        x1, xn = self.data.values[0], self.data.values[-1]
        if x < x1 or x > xn:
            return 0.0
        if x == x1:
            u = 0.0
        elif x == xn:
            u = 1.0
        else:
            u = self.cdf(x)
        return 1.0 / self.quantile_derivative(u)

    __call__ = density

    @property
    def support(self) -> tuple[float, float]:
        return (float(self.data.values[0]), float(self.data.values[-1]))


def automatic_density(data: SortedSample) -> AutomaticDensity:
    """Build the automatic density estimator for a sample of distinct points."""
    return AutomaticDensity(data)
