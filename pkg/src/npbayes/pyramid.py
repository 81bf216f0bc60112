"""Quantile pyramids on [0, 1]: a prior on quantile functions built by
drawing dyadic quantiles level by level inside parent brackets, two
cell-count likelihoods for data, and a tree-ordered Metropolis-within-Gibbs
posterior sampler.

Pyramid state is the full vector q[0..2^m] with q[0] = 0 and q[2^m] = 1;
interior entries are the dyadic quantiles, strictly increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as _sp

from npbayes.randkit import RngState, log_gamma

_MIN_GAP = 1e-14


@dataclass(frozen=True)
class LevelDensity:
    """Base density h on [0, 1] used at every level, rescaled to each
    parent bracket as h(x) / integral of h over the bracket.

    Families: "uniform" (default) and "beta" with positive shape parameters.
    """

    family: str = "uniform"
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.family not in ("uniform", "beta"):
            raise ValueError(f"unknown level density family {self.family!r}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("shape parameters must be positive")

    def _cdf01(self, v):
        if self.family == "uniform":
            return np.asarray(v, dtype=float)
        return _sp.betainc(self.alpha, self.beta, np.asarray(v, dtype=float))

    def _logpdf01(self, v):
        v = np.asarray(v, dtype=float)
        if self.family == "uniform":
            return np.zeros_like(v)
        lognorm = log_gamma(self.alpha) + log_gamma(self.beta) - log_gamma(self.alpha + self.beta)
        return (self.alpha - 1.0) * np.log(v) + (self.beta - 1.0) * np.log1p(-v) - lognorm

    def sample_in(self, lo: float, hi: float, rng: RngState) -> float:
        """Inverse-cdf draw from the density rescaled to (lo, hi)."""
        if hi - lo < _MIN_GAP:
            raise RuntimeError(f"bracket ({lo}, {hi}) collapsed below {_MIN_GAP}")
        u = rng.generator.uniform()
        if self.family == "uniform":
            return lo + u * (hi - lo)
        clo, chi = float(self._cdf01(lo)), float(self._cdf01(hi))
        return float(_sp.betaincinv(self.alpha, self.beta, clo + u * (chi - clo)))

    def logpdf_in(self, v, lo, hi):
        """Vectorized log density of the bracket-rescaled law; -inf outside."""
        v = np.asarray(v, dtype=float)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._logpdf01(v) - np.log(self._cdf01(hi) - self._cdf01(lo))
        return np.where((v > lo) & (v < hi), out, -np.inf)


@lru_cache(maxsize=64)
def _tree_layout(depth: int):
    """Interior-node indexing for a pyramid of the given depth.

    Returns (node_order, lo_idx, hi_idx) where ``node_order`` lists interior
    indices level by level (median first) and lo/hi give each interior
    index's bracket endpoints: index k = odd * 2^s has bracket (k - 2^s, k + 2^s).
    """
    size = 2**depth
    order = []
    for level in range(1, depth + 1):
        step = 2 ** (depth - level)
        order.extend(range(step, size, 2 * step))
    ks = np.arange(1, size)
    s = np.array([(int(k) & -int(k)).bit_length() - 1 for k in ks])
    lo = ks - 2**s
    hi = ks + 2**s
    return tuple(order), lo, hi


@lru_cache(maxsize=64)
def _subtree_blocks(depth: int):
    """For each interior index, the interior indices spanned by its bracket
    (itself plus all descendants), listed parents-first."""
    order, lo_idx, hi_idx = _tree_layout(depth)
    blocks = {}
    for k in order:
        lo, hi = lo_idx[k - 1], hi_idx[k - 1]
        blocks[k] = tuple(j for j in order if lo < j < hi)
    return blocks


def node_labels(depth: int) -> list[str]:
    """Reduced dyadic labels for the interior nodes, in index order."""
    size = 2**depth
    out = []
    for k in range(1, size):
        g = math.gcd(k, size)
        out.append(f"{k // g}/{size // g}")
    return out


class Pyramid:
    """Dyadic quantile values at depth m with fixed endpoints 0 and 1.

    ``q`` has length 2^m + 1 and is strictly increasing; linear
    interpolation between the dyadic quantiles defines the full quantile
    function and its inverse.
    """

    def __init__(self, depth: int, q: np.ndarray):
        q = np.asarray(q, dtype=float)
        if depth < 1:
            raise ValueError("depth must be >= 1")
        if q.shape != (2**depth + 1,):
            raise ValueError(f"expected {2**depth + 1} values for depth {depth}")
        if q[0] != 0.0 or q[-1] != 1.0:
            raise ValueError("endpoints must be exactly 0 and 1")
        if np.any(np.diff(q) <= 0):
            raise ValueError("quantile values must be strictly increasing")
        q.setflags(write=False)
        self.depth = depth
        self.q = q

    @property
    def values(self) -> np.ndarray:
        """Interior quantile values q_{1/2^m} .. q_{(2^m-1)/2^m}."""
        return self.q[1:-1]

    @property
    def levels(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, 2**self.depth + 1)

    def quantile(self, y):
        return np.interp(y, self.levels, self.q)

    def cdf(self, x):
        return np.interp(x, self.q, self.levels)

    def __repr__(self):
        return f"Pyramid(depth={self.depth}, median={self.q[2**(self.depth-1)]:.4f})"


def sample_prior(depth: int, level_density: LevelDensity, rng: RngState) -> Pyramid:
    """Grow one pyramid: median first, then quartiles inside its two halves,
    and so on; each new node is drawn from the level density rescaled to
    the bracket between its two already-drawn neighbours."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    order, lo_idx, hi_idx = _tree_layout(depth)
    q = np.full(2**depth + 1, np.nan)
    q[0], q[-1] = 0.0, 1.0
    for k in order:
        lo, hi = q[lo_idx[k - 1]], q[hi_idx[k - 1]]
        q[k] = level_density.sample_in(lo, hi, rng)
    return Pyramid(depth, q)


def _log_prior(q: np.ndarray, level_density: LevelDensity, lo_idx, hi_idx) -> float:
    vals = level_density.logpdf_in(q[1:-1], q[lo_idx], q[hi_idx])
    return float(vals.sum())


def _counts_q(q: np.ndarray, data: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(q[1:-1], data, side="right")
    return np.bincount(idx, minlength=q.size - 1)


def _check_data(data) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.size and (data.min() < 0.0 or data.max() > 1.0):
        raise ValueError("data must lie in [0, 1]")
    return data


def _loglik_interp_q(q: np.ndarray, data: np.ndarray) -> float:
    if data.size == 0:
        return 0.0
    counts = _counts_q(q, data)
    widths = np.diff(q)
    if np.any(widths[counts > 0] <= 0.0):
        return -np.inf
    return float(-np.dot(counts, np.log(widths)))


def _loglik_substitute_q(q: np.ndarray, data: np.ndarray) -> float:
    if data.size == 0:
        return 0.0
    counts = _counts_q(q, data)
    n = data.size
    depth = int(math.log2(q.size - 1))
    return float(
        log_gamma(n + 1.0) - log_gamma(counts + 1.0).sum() - n * depth * math.log(2.0)
    )


def cell_counts(pyr: Pyramid, data) -> np.ndarray:
    """Data counts per quantile-defined cell; cells are left-closed at their
    lower edge, and the last cell also contains the right endpoint 1."""
    return _counts_q(pyr.q, _check_data(data))


def loglik_interp(pyr: Pyramid, data) -> float:
    """Piecewise-flat-density log likelihood: each cell count weighted by
    the log reciprocal cell width (the constant dyadic factor is dropped)."""
    return _loglik_interp_q(pyr.q, _check_data(data))


def loglik_substitute(pyr: Pyramid, data) -> float:
    """Multinomial log likelihood of the cell counts with every cell
    probability fixed at 1/2^m."""
    return _loglik_substitute_q(pyr.q, _check_data(data))


_LIKELIHOODS = {"interp": _loglik_interp_q, "substitute": _loglik_substitute_q}


def posterior_sampler(
    depth: int,
    level_density: LevelDensity,
    data,
    likelihood: str,
    iterations: int,
    proposal_scale: float,
    rng: RngState,
    burn_in: int | None = None,
    thin: int = 1,
) -> list[Pyramid]:
    """Tree-ordered Metropolis-within-Gibbs over the pyramid nodes.

    Each sweep visits the nodes in tree order (median, quartiles, ...) and
    proposes a reflected uniform step of half-width
    ``proposal_scale * bracket width`` inside the node's current bracket;
    the move is accepted on the prior-times-likelihood ratio in log space.
    A proposal that crosses a descendant's value gets prior density zero
    and is rejected automatically.

    Node-at-a-time walks diffuse slowly through the order constraints, so
    each sweep ends with one subtree-regeneration move: a uniformly chosen
    node and all its descendants are redrawn from the prior inside the
    node's bracket and accepted on the likelihood ratio alone (the prior
    factors cancel exactly against the proposal).  With no data this move
    always accepts, so successive retained states decorrelate quickly.

    Returns the post-burn-in chain, thinned, as a list of valid pyramids.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not 0 < proposal_scale <= 1:
        raise ValueError("proposal_scale must lie in (0, 1]")
    if likelihood not in _LIKELIHOODS:
        raise ValueError(f"likelihood must be one of {sorted(_LIKELIHOODS)}")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    data = _check_data(data)
    if burn_in is None:
        burn_in = iterations // 10
    if not 0 <= burn_in < iterations:
        raise ValueError("need 0 <= burn_in < iterations")
    loglik_fn = _LIKELIHOODS[likelihood]
    order, lo_idx, hi_idx = _tree_layout(depth)
    blocks = _subtree_blocks(depth)
    gen = rng.generator

    pyr = sample_prior(depth, level_density, rng)
    q = pyr.q.copy()
    log_lik = loglik_fn(q, data)
    log_post = _log_prior(q, level_density, lo_idx, hi_idx) + log_lik
    kept: list[Pyramid] = []
    n_nodes = len(order)
    for sweep in range(iterations):
        # one block of uniforms per sweep: proposal offsets and accept draws
        offs = gen.uniform(-1.0, 1.0, size=n_nodes)
        logu = np.log(gen.uniform(size=n_nodes + 1))
        for j, k in enumerate(order):
            lo, hi = q[lo_idx[k - 1]], q[hi_idx[k - 1]]
            width = hi - lo
            step = proposal_scale * width * offs[j]
            t = (q[k] + step - lo) % (2.0 * width)
            cand = lo + (t if t <= width else 2.0 * width - t)
            old = q[k]
            q[k] = cand
            cand_prior = _log_prior(q, level_density, lo_idx, hi_idx)
            if not np.isfinite(cand_prior):
                q[k] = old
                continue
            cand_lik = loglik_fn(q, data)
            cand_post = cand_prior + cand_lik
            if logu[j] < cand_post - log_post:
                log_post, log_lik = cand_post, cand_lik
            else:
                q[k] = old
        # subtree regeneration from the prior, accepted on likelihood alone
        root = order[int(gen.integers(n_nodes))]
        block = blocks[root]
        saved = q[list(block)].copy()
        try:
            for k in block:
                q[k] = level_density.sample_in(q[lo_idx[k - 1]], q[hi_idx[k - 1]], rng)
        except RuntimeError:
            q[list(block)] = saved
        else:
            cand_lik = loglik_fn(q, data)
            if logu[n_nodes] < cand_lik - log_lik:
                log_lik = cand_lik
                log_post = _log_prior(q, level_density, lo_idx, hi_idx) + log_lik
            else:
                q[list(block)] = saved
        if sweep >= burn_in and (sweep - burn_in) % thin == 0:
            kept.append(Pyramid(depth, q.copy()))
    return kept
