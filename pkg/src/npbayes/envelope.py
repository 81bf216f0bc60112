"""Nonparametric envelopes around parametric models.

Two devices: the semiparametric predictive cdf of the residual distribution,
a b/(b+n)-weighted blend of the prior guess with the (averaged) empirical
residual law; and the control-set posterior factor for a process pinned to
prescribed cell probabilities, a product of rising-factorial ratios over the
cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from npbayes.dp import BaseDistribution
from npbayes.randkit import log_gamma


@dataclass(frozen=True, eq=False)
class ResidualSet:
    """Standardized residuals for one parameter value, plus the control
    partition (interval edges) and its target cell masses.

    The cells are (-inf, e_1], (e_1, e_2], ..., (e_{k-1}, inf): disjoint and
    exhaustive by construction.
    """

    residuals: np.ndarray
    edges: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        residuals = np.asarray(self.residuals, dtype=float)
        edges = np.asarray(self.edges, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if edges.ndim != 1 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if z.shape != (edges.size + 1,):
            raise ValueError("need one target mass per cell (len(edges) + 1)")
        if np.any(z <= 0) or abs(z.sum() - 1.0) > 1e-12:
            raise ValueError("target masses must be positive and sum to 1")
        object.__setattr__(self, "residuals", residuals)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "z", z)

    def counts(self) -> np.ndarray:
        idx = np.searchsorted(self.edges, self.residuals, side="left")
        return np.bincount(idx, minlength=self.z.size)


def predictive_cdf(
    t,
    residual_draws,
    b: float,
    g0: BaseDistribution,
    w_n: float | None = None,
):
    """Predictive residual cdf: w_n G0(t) + (1 - w_n) * averaged empirical cdf.

    ``residual_draws`` is one residual vector per posterior parameter draw
    (a single vector is accepted too); the inner exceedance probabilities
    are estimated by across-draw frequencies.  ``w_n`` defaults to b/(b+n)
    and may be overridden directly, which is how stick laws other than the
    Dirichlet are accommodated.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    draws = np.atleast_2d(np.asarray(residual_draws, dtype=float))
    n = draws.shape[1]
    if w_n is None:
        w_n = b / (b + n)
    if not 0 <= w_n <= 1:
        raise ValueError("w_n must lie in [0, 1]")
    ts = np.asarray(t, dtype=float)
    base = w_n * np.asarray(g0.cdf(ts), dtype=float)
    if n == 0:
        out = base
    else:
        flat = np.sort(draws.ravel())
        emp = np.searchsorted(flat, ts, side="right") / flat.size
        out = base + (1.0 - w_n) * emp
    return float(out) if np.isscalar(t) else out


def rising_factorial_log(x: float, m: int) -> float:
    """log of x(x+1)...(x+m-1); the empty product at m=0 gives 0."""
    if not x > 0:
        raise ValueError("x must be positive")
    if not (isinstance(m, (int, np.integer)) and m >= 0):
        raise ValueError("m must be a nonnegative integer")
    if m == 0:
        return 0.0
    return float(log_gamma(x + float(m)) - log_gamma(float(x)))


def control_log_factor(counts, z, b: float) -> float:
    """Log posterior factor for a process pinned to cell masses z:
    sum over cells of N_j log(b z_j) minus the log rising factorial
    (b z_j)^{[N_j]}.  Empty cells contribute zero, so the value is invariant
    to relabeling cells together with their counts."""
    counts = np.asarray(counts)
    z = np.asarray(z, dtype=float)
    if counts.shape != z.shape:
        raise ValueError("counts and z must have the same length")
    if np.any(counts < 0) or not np.all(counts == np.floor(counts)):
        raise ValueError("counts must be nonnegative integers")
    if np.any(z <= 0) or abs(z.sum() - 1.0) > 1e-9:
        raise ValueError("z must be a probability vector with positive entries")
    if not b > 0:
        raise ValueError("b must be positive")
    a = b * z
    counts = counts.astype(float)
    return float(np.sum(counts * np.log(a) - (log_gamma(a + counts) - log_gamma(a))))
