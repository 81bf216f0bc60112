"""Dirichlet-process constructions: finite symmetric-weight approximation,
stick-breaking with a general Beta stick law, a random-atom-count variant,
and conjugate posterior updating.

A realized random measure is an :class:`AtomicMeasure`; process parameters
live in :class:`DPParams` (concentration ``b``, base distribution, stick law).
The defaults ``stick_a=1, stick_b=b`` give the plain Dirichlet process.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special as _sp

from npbayes.randkit import BetaLaw, RngState, sample_dirichlet

_SIMPLEX_TOL = 1e-12


class TruncationCapError(RuntimeError):
    """Stick-breaking failed to reach the residual-mass target within the cap."""


# ---------------------------------------------------------------------------
# Base distributions


class BaseDistribution:
    """Common surface for prior-guess distributions on the real line.

    Subclasses provide ``cdf``, ``quantile`` (left-continuous inverse),
    ``sample``, a ``mean``, a ``support`` interval, and ``quadrature_nodes``
    returning (points, probability weights) for computing expectations.
    """

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, y):
        raise NotImplementedError

    def sample(self, rng: RngState, size=None):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def quadrature_nodes(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(BaseDistribution):
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"need hi > lo, got [{self.lo}, {self.hi}]")

    def cdf(self, x):
        return np.clip((np.asarray(x, float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def quantile(self, y):
        return self.lo + np.asarray(y, float) * (self.hi - self.lo)

    def sample(self, rng, size=None):
        return rng.generator.uniform(self.lo, self.hi, size=size)

    @property
    def mean(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def support(self):
        return (self.lo, self.hi)

    def quadrature_nodes(self, n):
        t, w = np.polynomial.legendre.leggauss(n)
        x = 0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * t
        return x, w / 2.0


@dataclass(frozen=True)
class Normal(BaseDistribution):
    loc: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError("sd must be positive")

    def cdf(self, x):
        return _sp.ndtr((np.asarray(x, float) - self.loc) / self.sd)

    def quantile(self, y):
        return self.loc + self.sd * _sp.ndtri(np.asarray(y, float))

    def sample(self, rng, size=None):
        return rng.generator.normal(self.loc, self.sd, size=size)

    @property
    def mean(self):
        return self.loc

    @property
    def support(self):
        return (-np.inf, np.inf)

    def quadrature_nodes(self, n):
        t, w = np.polynomial.hermite.hermgauss(n)
        x = self.loc + np.sqrt(2.0) * self.sd * t
        return x, w / np.sqrt(np.pi)


class Empirical(BaseDistribution):
    """Discrete distribution over a point list, optionally with raw masses.

    Points are stored sorted with duplicate locations merged, so two
    empirical components built from the same multiset compare equal.
    """

    def __init__(self, points, masses=None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("points must be a nonempty 1-d sequence")
        if masses is None:
            masses = np.ones_like(pts)
        else:
            masses = np.asarray(masses, dtype=float)
            if masses.shape != pts.shape or np.any(masses < 0) or masses.sum() <= 0:
                raise ValueError("masses must be nonnegative, same length as points")
        order = np.argsort(pts, kind="stable")
        pts, masses = pts[order], masses[order]
        keep = np.empty(pts.size, dtype=bool)
        keep[0] = True
        keep[1:] = pts[1:] != pts[:-1]
        idx = np.cumsum(keep) - 1
        self.points = pts[keep]
        self.masses = np.bincount(idx, weights=masses)
        self._cum = np.cumsum(self.masses)

    @property
    def total_mass(self) -> float:
        return float(self._cum[-1])

    def cdf(self, x):
        idx = np.searchsorted(self.points, np.asarray(x, float), side="right")
        cum = np.concatenate(([0.0], self._cum))
        return cum[idx] / self.total_mass

    def quantile(self, y):
        v = np.asarray(y, float) * self.total_mass
        idx = np.clip(np.searchsorted(self._cum, v, side="left"), 0, self.points.size - 1)
        return self.points[idx]

    def sample(self, rng, size=None):
        p = self.masses / self.total_mass
        return rng.generator.choice(self.points, size=size, p=p)

    @property
    def mean(self):
        return float(np.dot(self.points, self.masses) / self.total_mass)

    @property
    def support(self):
        return (float(self.points[0]), float(self.points[-1]))

    def quadrature_nodes(self, n):
        return self.points, self.masses / self.total_mass

    def __eq__(self, other):
        return (
            isinstance(other, Empirical)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.masses, other.masses)
        )

    def __repr__(self):
        return f"Empirical({self.points.size} support points, total_mass={self.total_mass})"


class Mixture(BaseDistribution):
    """Continuous family plus an empirical component, held as raw masses.

    ``cont_mass`` and the empirical masses are unnormalized; the mixing
    weight on the continuous part is ``cont_mass / (cont_mass + empirical
    total)``.  Keeping raw masses makes repeated conjugate updates compose
    exactly (merging point masses never re-normalizes intermediate weights).
    """

    def __init__(self, continuous: BaseDistribution, empirical: Empirical, cont_mass: float):
        if cont_mass < 0:
            raise ValueError("cont_mass must be nonnegative")
        self.continuous = continuous
        self.empirical = empirical
        self.cont_mass = float(cont_mass)

    @classmethod
    def from_weight(cls, continuous, empirical, weight_continuous: float):
        if not 0 <= weight_continuous <= 1:
            raise ValueError("mixing weight must lie in [0, 1]")
        emp = Empirical(empirical.points, empirical.masses * ((1.0 - weight_continuous) / empirical.total_mass))
        return cls(continuous, emp, weight_continuous)

    @property
    def total_mass(self) -> float:
        return self.cont_mass + self.empirical.total_mass

    @property
    def weight_continuous(self) -> float:
        return self.cont_mass / self.total_mass

    def cdf(self, x):
        w = self.weight_continuous
        return w * self.continuous.cdf(x) + (1.0 - w) * self.empirical.cdf(x)

    def quantile(self, y):
        ys = np.atleast_1d(np.asarray(y, float))
        out = np.array([self._quantile_scalar(v) for v in ys])
        return float(out[0]) if np.isscalar(y) else out

    def _quantile_scalar(self, y: float) -> float:
        if not 0 < y < 1:
            raise ValueError("quantile level must be in (0, 1)")
        lo, hi = self.empirical.support
        clo = self.continuous.quantile(min(y, 1e-12))
        chi = self.continuous.quantile(max(y, 1.0 - 1e-12))
        a, b = min(lo, clo) - 1.0, max(hi, chi) + 1.0
        while self.cdf(a) >= y:
            a -= 2.0 * (b - a)
        while self.cdf(b) < y:
            b += 2.0 * (b - a)
        for _ in range(200):
            m = 0.5 * (a + b)
            if self.cdf(m) >= y:
                b = m
            else:
                a = m
        return b

    def sample(self, rng, size=None):
        if size is None:
            pick = rng.generator.uniform() < self.weight_continuous
            return self.continuous.sample(rng) if pick else self.empirical.sample(rng)
        n = int(size)
        pick = rng.generator.uniform(size=n) < self.weight_continuous
        out = np.empty(n)
        if pick.any():
            out[pick] = self.continuous.sample(rng, size=int(pick.sum()))
        if (~pick).any():
            out[~pick] = self.empirical.sample(rng, size=int((~pick).sum()))
        return out

    @property
    def mean(self):
        w = self.weight_continuous
        return w * self.continuous.mean + (1.0 - w) * self.empirical.mean

    @property
    def support(self):
        (a1, b1), (a2, b2) = self.continuous.support, self.empirical.support
        return (min(a1, a2), max(b1, b2))

    def quadrature_nodes(self, n):
        xc, wc = self.continuous.quadrature_nodes(n)
        xe, we = self.empirical.quadrature_nodes(n)
        w = self.weight_continuous
        return np.concatenate([xc, xe]), np.concatenate([w * wc, (1.0 - w) * we])

    def __eq__(self, other):
        return (
            isinstance(other, Mixture)
            and self.continuous == other.continuous
            and self.empirical == other.empirical
            and self.cont_mass == other.cont_mass
        )

    def __repr__(self):
        return (
            f"Mixture(continuous={self.continuous!r}, cont_mass={self.cont_mass}, "
            f"empirical={self.empirical!r})"
        )


# ---------------------------------------------------------------------------
# Process parameters and realized measures


@dataclass(frozen=True)
class DPParams:
    """Concentration, base distribution and stick law of the process.

    ``stick_a=1, stick_b=b`` (the default) is the Dirichlet process; other
    positive values give the generalized stick-breaking process.  The
    concentration must be strictly positive: for noninformative-limit
    computations use the conventional floor b = 1e-8, except in the
    quantile module where b = 0 has its own exact code path.
    """

    b: float
    base: BaseDistribution
    stick_a: float = 1.0
    stick_b: float | None = None

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("concentration b must be positive")
        if self.stick_b is None:
            object.__setattr__(self, "stick_b", float(self.b))
        if not (self.stick_a > 0 and self.stick_b > 0):
            raise ValueError("stick-law parameters must be positive")

    @property
    def is_dirichlet(self) -> bool:
        return self.stick_a == 1.0 and self.stick_b == self.b


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Atoms with simplex weights plus the truncated residual stick mass."""

    atoms: np.ndarray
    weights: np.ndarray
    residual_mass: float = 0.0

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if atoms.shape != weights.shape or atoms.ndim != 1:
            raise ValueError("atoms and weights must be 1-d arrays of equal length")
        if np.any(weights < 0) or not 0 <= self.residual_mass < 1:
            raise ValueError("weights must be nonnegative and residual_mass in [0, 1)")
        if abs(weights.sum() + self.residual_mass - 1.0) > _SIMPLEX_TOL:
            raise ValueError("weights + residual_mass must sum to 1")
        atoms.setflags(write=False)
        weights.setflags(write=False)

    def integrate(self, g: Callable | None = None) -> float:
        """Mean of g under the measure, renormalized over the kept atoms.

        The truncated residual mass is spread proportionally over the kept
        atoms, so the bias is at most residual_mass * range(g).
        """
        vals = self.atoms if g is None else np.asarray(g(self.atoms), float)
        return float(np.dot(self.weights, vals) / (1.0 - self.residual_mass))

    def prob_leq(self, x: float) -> float:
        """Measure of (-inf, x], renormalized over the kept atoms."""
        return float(self.weights[self.atoms <= x].sum() / (1.0 - self.residual_mass))


def finite_approx_sample(m: int, params: DPParams, rng: RngState) -> AtomicMeasure:
    """Draw the m-atom symmetric-Dirichlet approximation of the process.

    Atoms are i.i.d. from the base; weights are Dirichlet(b/m, ..., b/m).
    As m grows the finite-dimensional laws converge to the Dirichlet
    process with the same (b, base).
    """
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError(f"m must be a positive integer, got {m!r}")
    atoms = np.atleast_1d(np.asarray(params.base.sample(rng, size=int(m)), dtype=float))
    weights = sample_dirichlet(np.full(int(m), params.b / m), rng)
    return AtomicMeasure(atoms=atoms, weights=weights, residual_mass=0.0)


def stick_breaking_sample(
    params: DPParams,
    truncation_eps: float,
    rng: RngState,
    max_sticks: int = 1_000_000,
) -> AtomicMeasure:
    """Draw the process by stick breaking, truncated by residual mass.

    Sticks are i.i.d. Beta(stick_a, stick_b); generation stops as soon as
    the unassigned mass prod(1 - B_j) drops to ``truncation_eps`` or below,
    and that leftover is reported as ``residual_mass``.  Raises
    :class:`TruncationCapError` after ``max_sticks`` sticks, which can only
    happen when the stick law degenerates near zero.
    """
    if not 0 < truncation_eps < 1:
        raise ValueError("truncation_eps must lie in (0, 1)")
    law = None if params.stick_a == 1.0 else BetaLaw(params.stick_a, params.stick_b)
    log_eps = np.log(truncation_eps)
    blocks = []
    log_residual = 0.0
    total = 0
    block = 64
    while True:
        if law is None:
            # Beta(1, b) sticks: 1 - B =_d U^(1/b), so draw log(1-B) directly
            log_bbar = np.log(rng.generator.uniform(size=block)) / params.stick_b
            b = -np.expm1(log_bbar)
        else:
            b = np.asarray(law.sample(rng, size=block))
            log_bbar = np.log1p(-b)
        cum = log_residual + np.cumsum(log_bbar)
        blocks.append((b, log_residual, cum))
        total += block
        hit = np.nonzero(cum <= log_eps)[0]
        if hit.size:
            cut = int(hit[0]) + 1
            b, log_residual0, cum = blocks[-1]
            blocks[-1] = (b[:cut], log_residual0, cum[:cut])
            log_residual = float(cum[cut - 1])
            break
        log_residual = float(cum[-1])
        if total >= max_sticks:
            raise TruncationCapError(
                f"residual mass {np.exp(log_residual):.3e} still above "
                f"{truncation_eps} after {total} sticks"
            )
    b_all = np.concatenate([blk[0] for blk in blocks])
    log_prefix = np.concatenate(
        [np.concatenate(([blk[1]], blk[2][:-1])) for blk in blocks]
    )
    weights = b_all * np.exp(log_prefix)
    residual = float(np.exp(log_residual))
    atoms = np.atleast_1d(np.asarray(params.base.sample(rng, size=weights.size), dtype=float))
    weights *= (1.0 - residual) / weights.sum()
    return AtomicMeasure(atoms=atoms, weights=weights, residual_mass=residual)


def fixed_m(m: int) -> Callable[[RngState], int]:
    """Atom-count law degenerate at m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return lambda rng: int(m)


def shifted_poisson(mean: float) -> Callable[[RngState], int]:
    """Atom-count law 1 + Poisson(mean); supported on all positive integers."""
    if mean < 0:
        raise ValueError("mean must be nonnegative")
    return lambda rng: 1 + int(rng.generator.poisson(mean))


def random_m_sample(
    m_law: Callable[[RngState], int], params: DPParams, rng: RngState
) -> AtomicMeasure:
    """Draw the finite approximation with a random number of atoms.

    Given M drawn from ``m_law``, the weights are symmetric
    Dirichlet(b/M, ..., b/M), mirroring the fixed-m construction; the
    Dirichlet process is the limit as the law of M pushes to infinity.
    """
    m = m_law(rng)
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError(f"m_law must produce positive integers, got {m!r}")
    return finite_approx_sample(int(m), params, rng)


def posterior_update(params: DPParams, data) -> DPParams:
    """Conjugate update: total measure b*P0 + sum of unit masses at the data.

    Only the plain Dirichlet case updates in closed form; generalized stick
    laws are rejected.  Updating twice with two data batches yields exactly
    the same parameters as one update with the concatenated batch.
    """
    if not params.is_dirichlet:
        raise ValueError("conjugate updating requires the Dirichlet case (stick_a=1, stick_b=b)")
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        return params
    new_points = Empirical(data)
    if isinstance(params.base, Mixture):
        merged = Empirical(
            np.concatenate([params.base.empirical.points, new_points.points]),
            np.concatenate([params.base.empirical.masses, new_points.masses]),
        )
        base = Mixture(params.base.continuous, merged, params.base.cont_mass)
    else:
        base = Mixture(params.base, new_points, cont_mass=params.b)
    new_b = base.cont_mass + base.empirical.total_mass
    return DPParams(b=new_b, base=base)


@dataclass(frozen=True)
class SetProbabilityLaw:
    """Law of the random probability P(A) for one set: Beta, or degenerate."""

    law: BetaLaw | None
    mean: float
    variance: float
    degenerate: bool


def set_probability_law(params: DPParams, p0A: float) -> SetProbabilityLaw:
    """Law of P(A) for a set with base probability p0A under the Dirichlet.

    P(A) ~ Beta(b*p0A, b*(1-p0A)) with mean p0A and variance
    p0A*(1-p0A)/(1+b); p0A in {0, 1} degenerates to a point mass.
    """
    if not 0 <= p0A <= 1:
        raise ValueError("p0A must lie in [0, 1]")
    mean = float(p0A)
    variance = p0A * (1.0 - p0A) / (1.0 + params.b)
    if p0A in (0.0, 1.0):
        return SetProbabilityLaw(law=None, mean=mean, variance=0.0, degenerate=True)
    return SetProbabilityLaw(
        law=BetaLaw(params.b * p0A, params.b * (1.0 - p0A)),
        mean=mean,
        variance=variance,
        degenerate=False,
    )
