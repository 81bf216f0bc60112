"""Distribution of the random mean of g under the process.

Three complementary routes are provided: exact central moments from the
stick-law recursion, a log-transform identity evaluated by quadrature as an
independent check on the samplers, and an ergodic Markov chain built from
the distributional fixed point  theta = B*Y + (1-B)*theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from npbayes.dp import BaseDistribution, DPParams, stick_breaking_sample
from npbayes.randkit import BetaLaw, RngState


def _is_exact(*values) -> bool:
    return all(isinstance(v, (Fraction, int)) for v in values)


@dataclass(frozen=True)
class StickMomentTable:
    """Joint moments E[B^i (1-B)^j] of one stick B ~ Beta(a, b), i+j <= p_max.

    Entries are Fractions when both stick parameters are exact (int or
    Fraction), else floats computed in log space.
    """

    stick_a: object
    stick_b: object
    p_max: int
    entries: dict

    def entry(self, i: int, j: int):
        return self.entries[(i, j)]


def stick_moments(stick_a, stick_b, p_max: int) -> StickMomentTable:
    """Tabulate E[B^i (1-B)^j] = prod(a+r) prod(b+s) / prod(a+b+t).

    The float path runs in log space so large p_max cannot overflow.
    """
    if p_max < 2:
        raise ValueError("p_max must be >= 2")
    if not (stick_a > 0 and stick_b > 0):
        raise ValueError("stick parameters must be positive")
    exact = _is_exact(stick_a, stick_b)
    entries = {}
    for i in range(p_max + 1):
        for j in range(p_max + 1 - i):
            if exact:
                a, b = Fraction(stick_a), Fraction(stick_b)
                num = math.prod([a + r for r in range(i)], start=Fraction(1))
                num *= math.prod([b + s for s in range(j)], start=Fraction(1))
                den = math.prod([a + b + t for t in range(i + j)], start=Fraction(1))
                entries[(i, j)] = num / den
            else:
                a, b = float(stick_a), float(stick_b)
                lg = sum(math.log(a + r) for r in range(i))
                lg += sum(math.log(b + s) for s in range(j))
                lg -= sum(math.log(a + b + t) for t in range(i + j))
                entries[(i, j)] = math.exp(lg)
    return StickMomentTable(stick_a=stick_a, stick_b=stick_b, p_max=p_max, entries=entries)


@dataclass(frozen=True)
class BaseMomentSpec:
    """Moment data of Y = g(xi) under the base law: mean, central moments,
    and the support interval of Y."""

    theta0: object
    central: dict  # p -> E(Y - theta0)^p for p = 2..p_max
    support: tuple

    def __post_init__(self):
        for p, mu in self.central.items():
            if p % 2 == 0 and mu < 0:
                raise ValueError(f"even central moment mu_{p} must be nonnegative, got {mu}")

    @property
    def p_max(self) -> int:
        return max(self.central) if self.central else 1

    @classmethod
    def uniform(cls, lo=0, hi=1, p_max: int = 4, exact: bool = False):
        """Y ~ Uniform(lo, hi); central moments ((hi-lo)/2)^p / (p+1) for even p."""
        if exact:
            lo, hi = Fraction(lo), Fraction(hi)
            half = (hi - lo) / 2
            theta0 = (lo + hi) / 2
            central = {
                p: (half**p / (p + 1) if p % 2 == 0 else Fraction(0))
                for p in range(2, p_max + 1)
            }
        else:
            half = (hi - lo) / 2.0
            theta0 = 0.5 * (lo + hi)
            central = {
                p: (half**p / (p + 1) if p % 2 == 0 else 0.0) for p in range(2, p_max + 1)
            }
        return cls(theta0=theta0, central=central, support=(lo, hi))

    @classmethod
    def normal(cls, loc=0.0, sd=1.0, p_max: int = 4):
        """Y ~ N(loc, sd^2); central moments sd^p (p-1)!! for even p."""
        central = {}
        for p in range(2, p_max + 1):
            central[p] = 0.0 if p % 2 else sd**p * math.prod(range(p - 1, 0, -2))
        return cls(theta0=float(loc), central=central, support=(-math.inf, math.inf))

    @classmethod
    def degenerate(cls, c, p_max: int = 4):
        return cls(theta0=c, central={p: 0 * c for p in range(2, p_max + 1)}, support=(c, c))

    @classmethod
    def from_base(cls, base: BaseDistribution, p_max: int = 4, n_nodes: int = 400):
        """Quadrature moments of Y when Y itself follows ``base``."""
        x, w = base.quadrature_nodes(n_nodes)
        theta0 = float(np.dot(w, x))
        central = {p: float(np.dot(w, (x - theta0) ** p)) for p in range(2, p_max + 1)}
        return cls(theta0=theta0, central=central, support=base.support)


def central_moments(base: BaseMomentSpec, sticks: StickMomentTable, p_max: int | None = None):
    """Central moments of the random mean, solved order by order.

    At each order p the defining moment equation is linear in the unknown
    m_p with coefficient 1 - E(1-B)^p > 0, so

        m_p = sum_{j<p} C(p,j) mu_{p-j} E[B^{p-j}(1-B)^j] m_j / (1 - E(1-B)^p).

    Returns [m_2, ..., m_{p_max}].  All arithmetic stays in Fractions when
    both the stick table and the base moments are exact; otherwise terms are
    accumulated with math.fsum.
    """
    if p_max is None:
        p_max = min(sticks.p_max, base.p_max)
    if p_max > sticks.p_max or p_max > base.p_max:
        raise ValueError("p_max exceeds the available stick or base moments")
    exact = _is_exact(base.theta0, *base.central.values()) and _is_exact(
        sticks.entry(0, 0)
    )
    mu = {0: Fraction(1) if exact else 1.0, 1: Fraction(0) if exact else 0.0}
    mu.update(base.central)
    m = {0: mu[0], 1: mu[1]}
    out = []
    for p in range(2, p_max + 1):
        denom = 1 - sticks.entry(0, p)
        if denom == 0:
            raise ZeroDivisionError("degenerate stick law: E(1-B)^p == 1")
        terms = [
            math.comb(p, j) * mu[p - j] * sticks.entry(p - j, j) * m[j] for j in range(p)
        ]
        if exact:
            m[p] = sum(terms, start=Fraction(0)) / denom
        else:
            m[p] = math.fsum(float(t) for t in terms) / float(denom)
        out.append(m[p])
    return out


@dataclass(frozen=True)
class TransformCheck:
    """Both sides of the log-transform identity plus the Monte Carlo error."""

    u: float
    lhs_mc: float
    mc_se: float
    rhs_exact: float

    @property
    def within_3se(self) -> bool:
        return abs(self.lhs_mc - self.rhs_exact) <= 3.0 * self.mc_se


def transform_identity_check(
    u: float,
    params: DPParams,
    g: Callable[[np.ndarray], np.ndarray],
    n_sim: int,
    quad_points: int,
    rng: RngState,
    truncation_eps: float = 1e-10,
) -> TransformCheck:
    """Monte Carlo versus quadrature for the identity

        E (1 + u * mean_P g)^(-b)  =  exp[-b * E_P0 log(1 + u g)].

    ``g`` must be nonnegative on the support of the base.  The right side is
    a deterministic quadrature over the base; the left side averages
    stick-breaking draws, reported with its standard error.
    """
    if not u > 0:
        raise ValueError("u must be positive")
    x, w = params.base.quadrature_nodes(quad_points)
    gx = np.asarray(g(x), dtype=float)
    if np.any(gx < 0):
        raise ValueError("g must be nonnegative on the support of the base")
    rhs = math.exp(-params.b * float(np.dot(w, np.log1p(u * gx))))
    draws = np.empty(n_sim)
    for k in range(n_sim):
        meas = stick_breaking_sample(params, truncation_eps, rng)
        theta = meas.integrate(g)
        draws[k] = (1.0 + u * theta) ** (-params.b)
    lhs = float(draws.mean())
    se = float(draws.std(ddof=1) / math.sqrt(n_sim))
    return TransformCheck(u=u, lhs_mc=lhs, mc_se=se, rhs_exact=rhs)


def stochastic_chain(
    stick_a: float,
    stick_b: float,
    y_sampler,
    steps: int,
    burn_in: int,
    rng: RngState,
) -> np.ndarray:
    """Sample the random-mean law by iterating theta <- B*Y + (1-B)*theta.

    ``y_sampler`` is a :class:`BaseDistribution` or a callable
    ``(rng, size) -> array`` producing i.i.d. Y draws.  The chain starts at
    a Y draw and the post-burn-in path is returned; the stationary law is
    the distribution of the random mean with stick law Beta(stick_a, stick_b).
    """
    if not (steps > burn_in >= 0):
        raise ValueError("need steps > burn_in >= 0")
    if isinstance(y_sampler, BaseDistribution):
        ys = np.asarray(y_sampler.sample(rng, size=steps + 1), dtype=float)
    else:
        ys = np.asarray(y_sampler(rng, steps + 1), dtype=float)
    b = np.asarray(BetaLaw(stick_a, stick_b).sample(rng, size=steps), dtype=float)
    incr = (b * ys[1:]).tolist()
    keep = (1.0 - b).tolist()
    theta = float(ys[0])
    path = np.empty(steps)
    out = path
    for t in range(steps):
        theta = incr[t] + keep[t] * theta
        out[t] = theta
    return path[burn_in:]


def match_first_two_moments(samples: np.ndarray, mean: float, variance: float) -> np.ndarray:
    """Affine rescaling of chain output to the exact first two moments.

    This is an output adjustment layered on top of the chain (the exact
    mean and variance come from :func:`central_moments`), not a property of
    the chain itself; higher moments are only approximately preserved.
    """
    samples = np.asarray(samples, dtype=float)
    s = samples.std()
    if s == 0:
        return np.full_like(samples, mean)
    return mean + (samples - samples.mean()) * math.sqrt(variance) / s
