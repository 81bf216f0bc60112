"""Local Bayesian regression with kernel information weights.

The response is modelled as locally constant with Gaussian noise; a kernel
scaled to value 1 at the origin assigns each in-window observation an
information weight, and their sum s0(x) acts as the local sample size.  A
local Gaussian prior then gives a conjugate posterior at every position.
The curve fitter adds an empirical-Bayes plug-in for the prior precision
and an optional hierarchical stage that averages the fitted curve over
draws of a linear background prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from npbayes.randkit import RngState

_EB_FLOOR = 1e-8


class EmptyWindowError(ValueError):
    """No observation carries weight in the requested window."""


_KERNELS = {
    # name -> (density K normalized on [-1/2, 1/2], K(0))
    "uniform": (lambda u: np.ones_like(u), 1.0),
    "triangular": (lambda u: 2.0 * (1.0 - 2.0 * np.abs(u)), 2.0),
    "epanechnikov": (lambda u: 1.5 * (1.0 - 4.0 * u * u), 1.5),
    "biweight": (lambda u: 1.875 * (1.0 - 4.0 * u * u) ** 2, 1.875),
}


@dataclass(frozen=True)
class Kernel:
    """Symmetric unimodal kernel supported on [-1/2, 1/2], stored as a
    probability density; ``kbar`` rescales it to value 1 at the origin."""

    name: str = "uniform"

    def __post_init__(self):
        if self.name not in _KERNELS:
            raise ValueError(f"unknown kernel {self.name!r}; choose from {sorted(_KERNELS)}")

    @property
    def at_zero(self) -> float:
        return _KERNELS[self.name][1]

    def raw(self, u):
        u = np.asarray(u, dtype=float)
        fn = _KERNELS[self.name][0]
        return np.where(np.abs(u) <= 0.5, fn(np.clip(u, -0.5, 0.5)), 0.0)

    def kbar(self, u):
        return self.raw(u) / self.at_zero


@dataclass(frozen=True, eq=False)
class RegressionData:
    """Covariate/response pairs with finite values."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 1:
            raise ValueError("x and y must be equal-length nonempty 1-d arrays")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("x and y must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size


def constant_mean(c: float) -> Callable:
    return lambda x: np.full_like(np.asarray(x, dtype=float), float(c))


def linear_mean(intercept: float, slope: float) -> Callable:
    return lambda x: intercept + slope * np.asarray(x, dtype=float)


def tabulated(xs, vals) -> Callable:
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    return lambda x: np.interp(np.asarray(x, dtype=float), xs, vals)


@dataclass(frozen=True)
class LocalPrior:
    """Local-level prior: guess curve m0, precision curve w0, noise sd.

    ``w0`` may be a constant, a callable, or None to request the
    empirical-Bayes plug-in at fit time; ``sigma`` may be None to request
    the rough residual plug-in (both substitutions are reported on the fit).
    """

    m0: Callable = field(default_factory=lambda: constant_mean(0.0))
    w0: object = 0.0
    sigma: float | None = 1.0

    def w0_at(self, x) -> np.ndarray:
        if self.w0 is None:
            raise ValueError("w0 is unset; fit_curve computes the plug-in")
        w = self.w0(np.asarray(x, dtype=float)) if callable(self.w0) else np.full_like(
            np.asarray(x, dtype=float), float(self.w0)
        )
        if np.any(w < 0):
            raise ValueError("w0 must be nonnegative")
        return w


@dataclass(frozen=True, eq=False)
class KernelWeights:
    """Information weights of the data at one position, and their sum s0."""

    weights: np.ndarray
    s0: float


def kernel_weights(x: float, data: RegressionData, h: float, kernel: Kernel) -> KernelWeights:
    """Weights kbar((x_i - x)/h), zero outside the window x +- h/2, and the
    information total s0(x) = n h f_n(x) / K(0) with f_n the kernel density
    estimate built from the same kernel and bandwidth."""
    if not h > 0:
        raise ValueError("bandwidth h must be positive")
    w = kernel.kbar((data.x - x) / h)
    return KernelWeights(weights=w, s0=float(w.sum()))


def kernel_density_estimate(x: float, data: RegressionData, h: float, kernel: Kernel) -> float:
    """Kernel density estimate of the covariates at x: (nh)^-1 sum K((x_i-x)/h)."""
    if not h > 0:
        raise ValueError("bandwidth h must be positive")
    return float(kernel.raw((data.x - x) / h).sum() / (data.n * h))


def local_constant_estimate(x: float, data: RegressionData, h: float, kernel: Kernel) -> float:
    """Kernel-weighted mean of the in-window responses: the minimizer of the
    kernel-weighted sum of squares at x."""
    kw = kernel_weights(x, data, h, kernel)
    if kw.s0 <= 0.0:
        raise EmptyWindowError(f"no data within the window around x={x}")
    return float(np.dot(kw.weights, data.y) / kw.s0)


def local_log_likelihood(
    x: float, data: RegressionData, h: float, kernel: Kernel, a: float, sigma: float
) -> float:
    """Information-weighted Gaussian log likelihood of the local level a."""
    kw = kernel_weights(x, data, h, kernel)
    dens = -np.log(math.sqrt(2.0 * math.pi) * sigma) - (data.y - a) ** 2 / (2.0 * sigma**2)
    return float(np.dot(kw.weights, dens))


@dataclass(frozen=True)
class LocalPosterior:
    """Gaussian posterior of the local level at one position."""

    mean: float
    variance: float
    s0: float
    m_tilde: float
    w0: float


def local_posterior(
    x: float, data: RegressionData, h: float, kernel: Kernel, prior: LocalPrior
) -> LocalPosterior:
    """Conjugate local update: the posterior of the level at x is Gaussian
    with mean the precision-weighted blend of prior guess and local estimate
    and variance sigma^2 / (w0 + s0)."""
    if prior.sigma is None or not prior.sigma > 0:
        raise ValueError("local_posterior needs a fixed positive sigma")
    kw = kernel_weights(x, data, h, kernel)
    w0 = float(prior.w0_at(np.asarray(x)))
    if w0 + kw.s0 <= 0.0:
        raise EmptyWindowError(f"zero prior precision and empty window at x={x}")
    m0 = float(prior.m0(np.asarray(x)))
    if kw.s0 > 0.0:
        m_tilde = float(np.dot(kw.weights, data.y) / kw.s0)
        mean = (w0 * m0 + kw.s0 * m_tilde) / (w0 + kw.s0)
    else:
        m_tilde = math.nan
        mean = m0
    return LocalPosterior(
        mean=mean,
        variance=prior.sigma**2 / (w0 + kw.s0),
        s0=kw.s0,
        m_tilde=m_tilde,
        w0=w0,
    )


@dataclass(frozen=True, eq=False)
class LocalFit:
    """Fitted curve on a grid: posterior mean/variance, information weight,
    and the plain local estimate, with empty windows flagged as gaps."""

    grid: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    s0: np.ndarray
    m_tilde: np.ndarray
    gap: np.ndarray
    sigma: float
    w0: np.ndarray

    def rows(self):
        """(x, mean, sd, s0, m_tilde) tuples, one per grid point."""
        sd = np.sqrt(self.variance)
        for k in range(self.grid.size):
            yield (self.grid[k], self.mean[k], sd[k], self.s0[k], self.m_tilde[k])


@dataclass(frozen=True)
class HierarchicalSpec:
    """Gaussian background prior over the linear guess-curve coefficients."""

    xi_mean: tuple
    xi_cov: tuple
    n_draws: int
    rng: RngState


def _plug_in_sigma(data: RegressionData, h: float, kernel: Kernel) -> float:
    """Rough noise plug-in: local residual variance at the data points,
    corrected by s0/(s0-1), averaged where at least two points share a
    window.  A coarse device; pass a fixed sigma when it matters."""
    vals = []
    for xi, yi in zip(data.x, data.y):
        kw = kernel_weights(xi, data, h, kernel)
        if kw.s0 <= 1.0:
            continue
        m = float(np.dot(kw.weights, data.y) / kw.s0)
        vals.append((yi - m) ** 2 * kw.s0 / (kw.s0 - 1.0))
    if not vals:
        raise ValueError("cannot estimate sigma: all windows contain a single point")
    return math.sqrt(float(np.mean(vals)))


def _eb_w0(
    grid, data, h, kernel, m0: Callable, sigma: float
) -> float:
    """Method-of-moments prior precision: matches the average squared gap
    between the local estimate and the prior guess, net of noise."""
    gaps = []
    for x in grid:
        kw = kernel_weights(x, data, h, kernel)
        if kw.s0 <= 0.0:
            continue
        m_tilde = float(np.dot(kw.weights, data.y) / kw.s0)
        gaps.append((m_tilde - float(m0(np.asarray(x)))) ** 2 - sigma**2 / kw.s0)
    if not gaps:
        raise EmptyWindowError("every grid window is empty")
    return sigma**2 / max(_EB_FLOOR, float(np.mean(gaps)))


def fit_curve(
    data: RegressionData,
    grid,
    h: float,
    prior: LocalPrior,
    kernel: Kernel = Kernel("uniform"),
    hierarchical: HierarchicalSpec | None = None,
) -> LocalFit:
    """Fit the local-posterior curve over a grid.

    Runs the local conjugate update at every grid point.  With ``prior.w0``
    None the constant empirical-Bayes precision is plugged in first; with a
    hierarchical spec, linear guess-curve coefficients are drawn from their
    Gaussian posterior under the global linear model and the per-draw curves
    are averaged (their spread is added to the reported variance).  Grid
    points with no data and zero prior precision come back as gaps, not
    errors.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d array")
    sigma = prior.sigma if prior.sigma is not None else _plug_in_sigma(data, h, kernel)

    if hierarchical is None:
        m0s = [prior.m0]
    else:
        m0s = [linear_mean(b0, b1) for b0, b1 in _draw_background(data, sigma, hierarchical)]

    curves, variances, w0_per_draw = [], [], []
    for m0 in m0s:
        if prior.w0 is None:
            w0_const = _eb_w0(grid, data, h, kernel, m0, sigma)
            w0_fn = constant_mean(w0_const)
        else:
            w0_fn = prior.w0 if callable(prior.w0) else constant_mean(float(prior.w0))
        eff_prior = LocalPrior(m0=m0, w0=w0_fn, sigma=sigma)
        mean = np.empty(grid.size)
        var = np.empty(grid.size)
        s0 = np.empty(grid.size)
        m_tilde = np.empty(grid.size)
        w0_arr = np.empty(grid.size)
        gap = np.zeros(grid.size, dtype=bool)
        for k, x in enumerate(grid):
            try:
                post = local_posterior(float(x), data, h, kernel, eff_prior)
            except EmptyWindowError:
                gap[k] = True
                mean[k] = var[k] = m_tilde[k] = math.nan
                s0[k] = 0.0
                w0_arr[k] = float(eff_prior.w0_at(np.asarray(x)))
                continue
            mean[k], var[k] = post.mean, post.variance
            s0[k], m_tilde[k], w0_arr[k] = post.s0, post.m_tilde, post.w0
        curves.append(mean)
        variances.append(var)
        w0_per_draw.append(w0_arr)
    stacked = np.vstack(curves)
    mean = stacked.mean(axis=0)
    variance = np.vstack(variances).mean(axis=0)
    if len(curves) > 1:
        variance = variance + stacked.var(axis=0)
    w0_used = np.vstack(w0_per_draw).mean(axis=0)
    return LocalFit(
        grid=grid,
        mean=mean,
        variance=variance,
        s0=s0,
        m_tilde=m_tilde,
        gap=gap,
        sigma=float(sigma),
        w0=w0_used,
    )


def _draw_background(data: RegressionData, sigma: float, spec: HierarchicalSpec):
    """Draws of the linear guess-curve coefficients from their Gaussian
    posterior under the global model y ~ N(xi0 + xi1 x, sigma^2).

    A zero prior covariance is a point mass: no update, every draw equals
    the prior mean, which collapses the hierarchical stage onto the plain
    fit with that guess curve.
    """
    mu0 = np.asarray(spec.xi_mean, dtype=float)
    cov0 = np.asarray(spec.xi_cov, dtype=float)
    if mu0.shape != (2,) or cov0.shape != (2, 2):
        raise ValueError("xi_mean must have shape (2,) and xi_cov shape (2, 2)")
    if spec.n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    if np.all(cov0 == 0.0):
        # point mass: one draw carries the whole average exactly
        return [tuple(mu0)]
    X = np.column_stack([np.ones(data.n), data.x])
    prec0 = np.linalg.inv(cov0)
    prec_n = prec0 + X.T @ X / sigma**2
    cov_n = np.linalg.inv(prec_n)
    mean_n = cov_n @ (prec0 @ mu0 + X.T @ data.y / sigma**2)
    draws = spec.rng.generator.multivariate_normal(mean_n, cov_n, size=spec.n_draws)
    return [tuple(d) for d in draws]
