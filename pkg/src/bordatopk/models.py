"""Partial-ranking distributions and their exact associated scores.

A model assigns, to every m-subset of the n items, a probability distribution
over the m! orderings of that subset. Tables are laid out as
``probs[s, j]`` with ``s`` indexing :func:`core.subset_table` rows and ``j``
indexing :func:`core.permutation_table` rows (both lexicographic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .aggregation import ObservationBatch, ScoreVector, top_k_from_scores, TopKSelection
from .core import (
    MAX_EXPLICIT_N,
    DimensionError,
    binomial,
    check_dimensions,
    hashed_uniforms,
    permutation_table,
    subset_table,
)

NORMALIZATION_TOL = 1e-12
MAX_TABLE_ENTRIES = 20_000_000


class GuardError(ValueError):
    """The model is too large to materialize exactly."""


def _guard(n: int, m: int) -> None:
    check_dimensions(n, m)
    if n > MAX_EXPLICIT_N:
        raise GuardError(f"explicit tables need n <= {MAX_EXPLICIT_N}, got n={n}")
    entries = math.comb(n, m) * math.factorial(m)
    if entries > MAX_TABLE_ENTRIES:
        raise GuardError(f"table would hold {entries} probabilities (limit {MAX_TABLE_ENTRIES})")


class PartialRankingModel:
    """Common interface: ``n``, ``m``, ``kind`` and an exact probability table."""

    n: int
    m: int
    kind: str

    def table(self) -> np.ndarray:
        raise NotImplementedError

    def ordered_items(self) -> np.ndarray:
        """Item at each position for every (subset, permutation): shape (S, m!, m)."""
        return subset_table(self.n, self.m)[:, permutation_table(self.m)]

    def distribution(self, subset: Sequence[int]) -> Dict[tuple, float]:
        """Map ranking -> probability for one subset."""
        subset = tuple(sorted(subset))
        subsets = subset_table(self.n, self.m)
        row = int(np.flatnonzero((subsets == subset).all(axis=1))[0])
        items = self.ordered_items()[row]
        probs = self.table()[row]
        return {tuple(int(x) for x in rk): float(pr) for rk, pr in zip(items, probs)}


@dataclass
class ExplicitModel(PartialRankingModel):
    n: int
    m: int
    probs: np.ndarray
    kind: str = "explicit"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        _guard(self.n, self.m)
        self.probs = np.asarray(self.probs, dtype=np.float64)
        shape = (math.comb(self.n, self.m), math.factorial(self.m))
        if self.probs.shape != shape:
            raise ValueError(f"probability table has shape {self.probs.shape}, expected {shape}")
        if np.any(self.probs < 0):
            raise ValueError("negative probability in table")
        worst = np.abs(self.probs.sum(axis=1) - 1.0).max()
        if worst > NORMALIZATION_TOL:
            raise ValueError(f"subset distributions do not sum to 1 (max error {worst:.3g})")

    def table(self) -> np.ndarray:
        return self.probs


@dataclass
class PlackettLuceModel(PartialRankingModel):
    weights: np.ndarray
    m: int
    kind: str = "pl"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if np.any(~(self.weights > 0)):
            raise ValueError("Plackett-Luce weights must be strictly positive")
        check_dimensions(self.n, self.m)

    @property
    def n(self) -> int:
        return len(self.weights)

    def table(self) -> np.ndarray:
        _guard(self.n, self.m)
        return _pl_table(self.weights, self.ordered_items())


def _pl_table(weights: np.ndarray, ordered: np.ndarray) -> np.ndarray:
    w = weights[ordered]
    # remaining mass at each stage: sum over positions t..m-1
    remaining = np.cumsum(w[..., ::-1], axis=-1)[..., ::-1]
    return np.prod(w / remaining, axis=-1)


def pl_probability(ranking: Sequence[int], weights) -> float:
    """Plackett-Luce probability of ``ranking`` within its own item set."""
    w = np.asarray(weights, dtype=np.float64)[list(ranking)]
    if np.any(~(w > 0)):
        raise ValueError("Plackett-Luce weights must be strictly positive")
    remaining = np.cumsum(w[::-1])[::-1]
    return float(np.prod(w / remaining))


def uniform_model(n: int, m: int) -> ExplicitModel:
    _guard(n, m)
    shape = (math.comb(n, m), math.factorial(m))
    return ExplicitModel(n, m, np.full(shape, 1.0 / shape[1]), kind="uniform")


def random_explicit_model(n: int, m: int, rng: np.random.Generator, concentration: float = 1.0) -> ExplicitModel:
    """Every subset gets an independent Dirichlet(concentration) distribution."""
    _guard(n, m)
    shape = (math.comb(n, m), math.factorial(m))
    probs = rng.dirichlet(np.full(shape[1], concentration), size=shape[0])
    probs /= probs.sum(axis=1, keepdims=True)
    return ExplicitModel(n, m, probs, kind="random")


def build_noisy_pl(weights, m: int, sigma: float, noise_seed: int) -> ExplicitModel:
    """PL table plus i.i.d. N(0, sigma^2) noise per entry, clamped at 0 and renormalized.

    Noise is drawn in table order from ``default_rng(noise_seed)``. A subset
    whose clamped mass is entirely zero falls back to uniform.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    pl = PlackettLuceModel(weights, m)
    table = pl.table()
    rng = np.random.default_rng(noise_seed)
    noisy = np.maximum(table + rng.normal(0.0, sigma, size=table.shape), 0.0)
    mass = noisy.sum(axis=1, keepdims=True)
    dead = mass[:, 0] == 0
    noisy[dead] = 1.0
    mass[dead] = table.shape[1]
    probs = noisy / mass
    return ExplicitModel(pl.n, m, probs, kind="noisy_pl",
                         params={"weights": pl.weights.tolist(), "sigma": sigma, "noise_seed": noise_seed})


def adversarial_top_set(k: int, top_item_a: int) -> frozenset:
    """{0, ..., k-2} together with ``top_item_a`` (all 0-indexed)."""
    return frozenset(range(k - 1)) | {top_item_a}


def build_adversarial(n: int, m: int, k: int, delta: float, top_item_a: int) -> ExplicitModel:
    """The hard-instance construction around the top set {0..k-2} + {a}.

    With q = max(1, m - n + k), an ordering gets (1 + delta)/m! when its first
    q entries are exactly the top-set members of the subset, (1 - delta)/m!
    when its last q entries are, and 1/m! otherwise. ``top_item_a`` is
    0-indexed and must lie in [k-1, n-1].
    """
    check_dimensions(n, m)
    if not 1 <= k or 2 * k > n:
        raise DimensionError(f"need 1 <= k and 2k <= n, got n={n}, k={k}")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must be in [0, 1], got {delta}")
    if not k - 1 <= top_item_a <= n - 1:
        raise DimensionError(f"top_item_a must be in [{k - 1}, {n - 1}], got {top_item_a}")
    _guard(n, m)
    q = max(1, m - n + k)
    top = np.zeros(n, dtype=bool)
    top[list(adversarial_top_set(k, top_item_a))] = True
    ordered = subset_table(n, m)[:, permutation_table(m)]
    in_top = top[ordered]
    c1 = in_top[..., :q].all(axis=-1) & ~in_top[..., q:].any(axis=-1)
    c2 = ~in_top[..., : m - q].any(axis=-1) & in_top[..., m - q:].all(axis=-1)
    probs = (1.0 + delta * c1 - delta * c2) / math.factorial(m)
    return ExplicitModel(n, m, probs, kind="adversarial",
                         params={"k": k, "delta": delta, "top_item_a": top_item_a, "q": q})


@dataclass
class AssociatedScores:
    tau: np.ndarray
    rho: int
    beta: ScoreVector

    def order_statistic(self, i: int) -> float:
        """The i-th largest score (1-indexed)."""
        return float(np.sort(self.tau)[::-1][i - 1])


def associated_scores(model: PartialRankingModel, beta: ScoreVector) -> AssociatedScores:
    """Exact expected normalized per-round score of every item."""
    if len(beta) != model.m:
        raise ValueError(f"score vector has length {len(beta)}, model has m={model.m}")
    _guard(model.n, model.m)
    table = model.table()
    ordered = model.ordered_items()
    weights = table[..., None] * beta.array
    totals = np.bincount(ordered.ravel(), weights=weights.ravel(), minlength=model.n)
    rho = binomial(model.n - 1, model.m - 1)
    return AssociatedScores(totals / rho, rho, beta)


def delta_gap(scores: AssociatedScores, k: int, h: int = 0) -> float:
    """tau_(k-h) - tau_(k+h+1) over the descending order statistics.

    h = 0 gives the plain top-k gap tau_(k) - tau_(k+1).
    """
    n = len(scores.tau)
    if not (1 <= k <= n - 1 and h >= 0 and k - h >= 1 and k + h + 1 <= n):
        raise DimensionError(f"invalid (k, h) = ({k}, {h}) for n={n}")
    ordered = np.sort(scores.tau)[::-1]
    return float(ordered[k - h - 1] - ordered[k + h])


def true_top_k(scores: AssociatedScores, k: int, decimals: int = 12) -> TopKSelection:
    """Top-k by associated score; float noise below 1e-12 counts as a tie."""
    return top_k_from_scores(np.round(scores.tau, decimals), k)


def sample_observations(model: PartialRankingModel, p: float, r: int, seed: int) -> ObservationBatch:
    """Draw one batch: every (subset, round) is observed independently w.p. p.

    Randomness for cell (s, l) comes only from ``hashed_uniforms(seed, s, l, .)``
    so the batch does not depend on evaluation order. PL models are sampled
    by sequential weighted choice without building the table.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    subsets = subset_table(model.n, model.m)
    n_sub = len(subsets)
    s_idx = np.repeat(np.arange(n_sub), r)
    rounds = np.tile(np.arange(r), n_sub)
    seen = hashed_uniforms(seed, s_idx, rounds, 0) < p
    s_idx, rounds = s_idx[seen], rounds[seen]
    if isinstance(model, PlackettLuceModel):
        rankings = _sample_pl(model.weights, subsets[s_idx], seed, s_idx, rounds)
    else:
        rankings = _sample_table(model, s_idx, seed, rounds)
    return ObservationBatch(model.n, model.m, r, p, rankings, rounds)


def _sample_pl(weights, items, seed, s_idx, rounds) -> np.ndarray:
    n_rec, m = items.shape
    remaining = weights[items].copy()
    out = np.empty_like(items)
    rows = np.arange(n_rec)
    for t in range(m - 1):
        u = hashed_uniforms(seed, s_idx, rounds, 1 + t)
        cum = np.cumsum(remaining, axis=1)
        target = u * cum[:, -1]
        pick = (cum <= target[:, None]).sum(axis=1)
        # guard against picking an exhausted slot through rounding
        pick = np.minimum(pick, m - 1)
        while True:
            bad = remaining[rows, pick] == 0
            if not bad.any():
                break
            pick[bad] -= 1
        out[:, t] = items[rows, pick]
        remaining[rows, pick] = 0.0
    last = np.argmax(remaining > 0, axis=1)
    out[:, m - 1] = items[rows, last]
    return out


def _sample_table(model, s_idx, seed, rounds) -> np.ndarray:
    table = model.table()
    ordered = model.ordered_items()
    u = hashed_uniforms(seed, s_idx, rounds, 1)
    cum = np.cumsum(table[s_idx], axis=1)
    j = (cum <= (u * cum[:, -1])[:, None]).sum(axis=1)
    j = np.minimum(j, table.shape[1] - 1)
    probs = table[s_idx, j]
    # never emit a zero-probability ordering (possible only through rounding)
    zero = probs == 0
    if zero.any():
        for i in np.flatnonzero(zero):
            j[i] = int(np.flatnonzero(table[s_idx[i]] > 0)[-1])
    return ordered[s_idx, j]
