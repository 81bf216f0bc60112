"""Cumulative-damage frailty processes and the hazard structures they imply.

An individual accumulates hazard through a compound Poisson process
Z(t) = theta * sum of i.i.d. jumps up to the Poisson count at t; conditional
survival is exp(-Z(t)).  Marginalizing over the damage path thins the
Poisson rate by the constant factor 1 - L0(theta), where L0 is the Laplace
transform of the jump law, which is what produces proportional-hazards and
logistic-multiplier regression structures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from npbayes.randkit import RngState


@dataclass(frozen=True)
class CumulativeRate:
    """Poisson cumulative rate: kappa * t**power (power 1 is homogeneous)."""

    kappa: float = 1.0
    power: float = 1.0

    def __post_init__(self):
        if not (self.kappa >= 0 and self.power > 0):
            raise ValueError("need kappa >= 0 and power > 0")

    def cumulative(self, t):
        return self.kappa * np.asarray(t, dtype=float) ** self.power

    def rate(self, s):
        return self.kappa * self.power * np.asarray(s, dtype=float) ** (self.power - 1.0)

    def inverse(self, v):
        """Time at which the cumulative rate reaches v."""
        return (np.asarray(v, dtype=float) / self.kappa) ** (1.0 / self.power)


@dataclass(frozen=True)
class JumpLaw:
    """Law of one damage increment: gamma with unit rate, or a point mass."""

    kind: str = "gamma"
    shape: float = 1.0  # gamma shape, or the point-mass location

    def __post_init__(self):
        if self.kind not in ("gamma", "point"):
            raise ValueError(f"unsupported jump law {self.kind!r}")
        if self.shape < 0 or (self.kind == "gamma" and self.shape == 0):
            raise ValueError("jump-law parameter must be positive")

    def laplace(self, u: float) -> float:
        """E exp(-u G) in closed form."""
        if self.kind == "gamma":
            return (1.0 + u) ** (-self.shape)
        return math.exp(-u * self.shape)

    def sample(self, rng: RngState, size: int) -> np.ndarray:
        if self.kind == "gamma":
            return rng.generator.standard_gamma(self.shape, size=size)
        return np.full(size, self.shape)


@dataclass(frozen=True)
class FrailtySpec:
    """Damage-process parameters: multiplier, jump law, Poisson rate."""

    theta: float = 1.0
    jump_law: JumpLaw = field(default_factory=JumpLaw)
    rate: CumulativeRate = field(default_factory=CumulativeRate)

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")

    def thinning_factor(self) -> float:
        """1 - L0(theta); lies in (0, 1) for theta > 0, and is the factor by
        which the Poisson rate is thinned in the marginal hazard."""
        return 1.0 - self.jump_law.laplace(self.theta)


@dataclass(frozen=True, eq=False)
class DamagePath:
    """Jump times on [0, t_max] with the running damage total after each."""

    times: np.ndarray
    z_values: np.ndarray
    t_max: float

    def z_at(self, t: float) -> float:
        if t < 0:
            raise ValueError("t must be nonnegative")
        k = int(np.searchsorted(self.times, t, side="right"))
        return 0.0 if k == 0 else float(self.z_values[k - 1])

    def conditional_survival(self, t: float) -> float:
        """exp(-Z(t)) given this realized damage path."""
        return math.exp(-self.z_at(t))


def simulate_path(spec: FrailtySpec, t_max: float, rng: RngState) -> DamagePath:
    """Simulate the damage path on [0, t_max].

    The jump count is Poisson with mean the cumulative rate at t_max; given
    the count, jump times are i.i.d. with cdf proportional to the cumulative
    rate, obtained by inverse transform.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    total = float(spec.rate.cumulative(t_max))
    count = int(rng.generator.poisson(total))
    times = np.sort(spec.rate.inverse(rng.generator.uniform(0.0, total, size=count)))
    jumps = spec.theta * spec.jump_law.sample(rng, count)
    return DamagePath(times=times, z_values=np.cumsum(jumps), t_max=float(t_max))


def marginal_survival(spec: FrailtySpec, t) -> float:
    """E exp(-Z(t)) in closed form: exp(-Lambda(t) * (1 - L0(theta)))."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    out = np.exp(-spec.rate.cumulative(t) * spec.thinning_factor())
    return float(out) if out.ndim == 0 else out


def hazard_rate(spec: FrailtySpec, s) -> float:
    """Marginal hazard: the Poisson rate thinned by 1 - L0(theta)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    out = spec.rate.rate(s) * spec.thinning_factor()
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class IndividualHazard:
    """Per-individual hazard evaluator h(s) = baseline(s) * factor."""

    baseline: CumulativeRate
    factor: float

    def rate(self, s):
        return self.baseline.rate(s) * self.factor

    def cumulative(self, t):
        return self.baseline.cumulative(t) * self.factor

    def survival(self, t):
        return np.exp(-self.cumulative(t))


def _logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


def regression_hazards(
    covariates,
    beta,
    structure: str,
    baseline: CumulativeRate | None = None,
    theta: float = 1.0,
    jump_law: JumpLaw | None = None,
    gamma=None,
    concentration: float = 2.0,
) -> list[IndividualHazard]:
    """Per-individual hazards under the two covariate structures.

    "cox": each individual's Poisson rate is baseline * exp(beta'x) with a
    shared multiplier and jump law, so h_i(s) = baseline_rate(s) *
    exp(beta'x_i) * (1 - L0(theta)): proportional hazards.

    "beta_multiplier": unit multiplier and per-individual risk factors
    drawn Beta(c*mu(x), c - c*mu(x)) with logistic mean mu(x) =
    expit(gamma'x), so h_i(s) = baseline_rate(s) * exp(beta'x_i) * mu(x_i).
    """
    X = np.atleast_2d(np.asarray(covariates, dtype=float))
    beta = np.asarray(beta, dtype=float)
    if X.shape[1] != beta.size:
        raise ValueError("covariate dimension does not match beta")
    if baseline is None:
        baseline = CumulativeRate()
    lin = X @ beta
    if structure == "cox":
        law = jump_law if jump_law is not None else JumpLaw()
        thin = FrailtySpec(theta=theta, jump_law=law).thinning_factor()
        factors = np.exp(lin) * thin
    elif structure == "beta_multiplier":
        if gamma is None:
            raise ValueError("beta_multiplier structure needs gamma")
        gamma = np.asarray(gamma, dtype=float)
        if X.shape[1] != gamma.size:
            raise ValueError("covariate dimension does not match gamma")
        if not concentration > 0:
            raise ValueError(
                "invalid Beta risk-multiplier parameters: concentration must be positive"
            )
        mu = _logistic(X @ gamma)
        # mean of Beta(c*mu, c - c*mu) is mu exactly; with unit multiplier the
        # thinning factor is E R = mu
        factors = np.exp(lin) * mu
    else:
        raise ValueError(f"unknown structure {structure!r}")
    return [IndividualHazard(baseline=baseline, factor=float(f)) for f in factors]
