"""Estimators: Borda counting, normalized Borda counting and rank centrality."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import ItemSet, RankingVec, subset_keys

ESTIMATORS = ("borda", "normalized", "spectral")

_BETA_TOL = 1e-12


@dataclass(frozen=True)
class ScoreVector:
    """Points awarded per position: ``1 = betas[0] >= ... >= betas[-1] >= 0``."""

    betas: Tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        object.__setattr__(self, "betas", betas)
        if len(betas) < 2:
            raise ValueError("a score vector needs at least two positions")
        if abs(betas[0] - 1.0) > _BETA_TOL:
            raise ValueError(f"first score must be 1, got {betas[0]}")
        if any(b2 > b1 + _BETA_TOL for b1, b2 in zip(betas, betas[1:])):
            raise ValueError(f"scores must be non-increasing: {betas}")
        if betas[-1] < -_BETA_TOL:
            raise ValueError(f"last score must be >= 0, got {betas[-1]}")

    @property
    def m(self) -> int:
        return len(self.betas)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.betas, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.betas)


def score_family(name: str, m: int) -> ScoreVector:
    """Named scoring systems.

    ``tilde<i>`` (top-i indicator, 1 <= i <= m-1), ``check1``, ``check2``
    (Dowdall, 1/j), ``bar1`` (uniform spacing to 0), ``bar2``, ``hat``
    (quadratic).
    """
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    key = name.strip().lower().replace("(", "").replace(")", "")
    j = np.arange(1, m + 1, dtype=np.float64)
    if key.startswith("tilde"):
        try:
            i = int(key[5:])
        except ValueError:
            raise ValueError(f"unknown score family {name!r}") from None
        if not 1 <= i <= m - 1:
            raise ValueError(f"tilde index must be in [1, {m - 1}], got {i}")
        betas = (j <= i).astype(np.float64)
    elif key == "check1":
        betas = (2 * m - 2) / (j + m - 2) - 1
    elif key == "check2":
        betas = 1.0 / j
    elif key == "bar1":
        betas = 1 - (j - 1) / (m - 1)
    elif key == "bar2":
        betas = 1 - (j - 1) / m
    elif key == "hat":
        betas = (m * m - j * j) / (m * m - 1)
    else:
        raise ValueError(f"unknown score family {name!r}")
    return ScoreVector(tuple(betas), name=key)


def family_names(m: int) -> List[str]:
    """Every family name valid for group size m."""
    return [f"tilde{i}" for i in range(1, m)] + ["check1", "check2", "bar1", "bar2", "hat"]


def parse_beta(spec: str, m: int) -> ScoreVector:
    """A family name, or an explicit comma-separated score list."""
    if "," in spec:
        values = tuple(float(v) for v in spec.split(","))
        if len(values) != m:
            raise ValueError(f"score list has {len(values)} entries, expected m={m}")
        return ScoreVector(values)
    return score_family(spec, m)


@dataclass
class ObservationBatch:
    """Observed rankings, one row per record.

    ``rankings[i]`` is the order observed for the subset ``sorted(rankings[i])``
    in round ``rounds[i]``. ``p`` is None for data that did not come from the
    per-round observation process (e.g. PrefLib extractions).
    """

    n: int
    m: int
    r: int
    p: Optional[float]
    rankings: np.ndarray
    rounds: np.ndarray

    def __post_init__(self):
        self.rankings = np.asarray(self.rankings, dtype=np.int64).reshape(-1, self.m)
        self.rounds = np.asarray(self.rounds, dtype=np.int64).reshape(-1)
        if len(self.rounds) != len(self.rankings):
            raise ValueError("rankings and rounds differ in length")
        if self.rankings.size and (self.rankings.min() < 0 or self.rankings.max() >= self.n):
            raise ValueError("ranking entries out of range")
        if self.rounds.size and (self.rounds.min() < 0 or self.rounds.max() >= self.r):
            raise ValueError("round index out of range")

    def __len__(self) -> int:
        return len(self.rankings)

    @property
    def subsets(self) -> np.ndarray:
        return np.sort(self.rankings, axis=1)

    @property
    def records(self) -> List[Tuple[ItemSet, int, RankingVec]]:
        return [
            (tuple(sorted(row)), int(rnd), tuple(row))
            for row, rnd in zip(self.rankings.tolist(), self.rounds.tolist())
        ]

    def validate(self) -> None:
        """Full check: rankings permute distinct items, one record per cell."""
        subsets = self.subsets
        if self.m > 1 and np.any(subsets[:, 1:] == subsets[:, :-1]):
            raise ValueError("a ranking repeats an item")
        cells = np.stack([subset_keys(subsets), self.rounds], axis=1)
        if len(np.unique(cells, axis=0)) != len(cells):
            raise ValueError("more than one record for a (subset, round) cell")

    @classmethod
    def from_records(cls, n, m, r, p, records: Sequence[Tuple[int, Sequence[int]]]):
        """Build from ``(round, ranking)`` pairs."""
        rounds = [rnd for rnd, _ in records]
        rankings = [list(rk) for _, rk in records]
        return cls(n, m, r, p, np.array(rankings, dtype=np.int64).reshape(-1, m), rounds)


@dataclass
class TallyResult:
    scores: np.ndarray
    normalized: bool
    beta: Optional[ScoreVector]

    @property
    def n(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class TopKSelection:
    items: FrozenSet[int]
    order: Tuple[int, ...]
    tie_broken: bool
    tally: Optional[TallyResult] = field(default=None, compare=False, repr=False)

    @property
    def k(self) -> int:
        return len(self.items)


def _check_beta(batch: ObservationBatch, beta: ScoreVector) -> np.ndarray:
    if len(beta) != batch.m:
        raise ValueError(f"score vector has length {len(beta)}, batch has m={batch.m}")
    return beta.array


def borda_tally(batch: ObservationBatch, beta: ScoreVector) -> TallyResult:
    """Cumulative Borda score of every item."""
    b = _check_beta(batch, beta)
    weights = np.broadcast_to(b, batch.rankings.shape).ravel()
    scores = np.bincount(batch.rankings.ravel(), weights=weights, minlength=batch.n)
    return TallyResult(scores.astype(np.float64), False, beta)


def normalized_borda_tally(batch: ObservationBatch, beta: ScoreVector) -> TallyResult:
    """Borda scores where each subset's contribution is divided by Z + 1.

    Z is the number of records observed for that subset.
    """
    b = _check_beta(batch, beta)
    if len(batch) == 0:
        return TallyResult(np.zeros(batch.n), True, beta)
    _, inverse, counts = np.unique(
        subset_keys(batch.rankings), return_inverse=True, return_counts=True
    )
    scale = 1.0 / (counts[inverse] + 1.0)
    weights = (scale[:, None] * b[None, :]).ravel()
    scores = np.bincount(batch.rankings.ravel(), weights=weights, minlength=batch.n)
    return TallyResult(scores, True, beta)


def top_k_from_scores(scores, k: int) -> TopKSelection:
    scores = np.asarray(scores, dtype=np.float64)
    n = len(scores)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    order = np.argsort(-scores, kind="stable")
    tie = k < n and scores[order[k - 1]] == scores[order[k]]
    return TopKSelection(frozenset(order[:k].tolist()), tuple(order.tolist()), bool(tie))


def top_k(tally: TallyResult, k: int) -> TopKSelection:
    """The k highest-scoring items; ties go to the lowest index."""
    sel = top_k_from_scores(tally.scores, k)
    return TopKSelection(sel.items, sel.order, sel.tie_broken, tally)


def hamming_distance(a, b) -> int:
    """Size of the symmetric difference of two item sets."""
    return len(set(a) ^ set(b))


def rank_break_pairwise(batch: ObservationBatch) -> np.ndarray:
    """Win counts from full rank breaking: ``wins[i, j]`` = times i beat j."""
    wins = np.zeros((batch.n, batch.n), dtype=np.int64)
    for i in range(batch.m):
        for j in range(i + 1, batch.m):
            np.add.at(wins, (batch.rankings[:, i], batch.rankings[:, j]), 1)
    return wins


class DisconnectedGraphError(RuntimeError):
    def __init__(self, components: List[List[int]]):
        self.components = components
        super().__init__(f"comparison graph has {len(components)} components: {components}")


class ConvergenceError(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"power iteration did not converge in {iterations} steps (residual {residual:.3g})")


def rank_centrality_scores(wins, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """Stationary distribution of the rank-centrality random walk.

    From item i the walk moves to j with probability (fraction of i-vs-j
    comparisons that i lost) / d_max, where d_max is the largest number of
    distinct opponents of any item; the rest of the mass stays at i.
    """
    wins = np.asarray(wins, dtype=np.float64)
    n = wins.shape[0]
    totals = wins + wins.T
    adjacency = totals > 0
    n_comp, labels = connected_components(csr_matrix(adjacency), directed=False)
    if n_comp > 1:
        components = [np.flatnonzero(labels == c).tolist() for c in range(n_comp)]
        raise DisconnectedGraphError(components)
    d_max = adjacency.sum(axis=1).max()
    with np.errstate(invalid="ignore", divide="ignore"):
        lose_frac = np.where(adjacency, wins.T / totals, 0.0)
    transition = lose_frac / d_max
    transition[np.diag_indices(n)] = 1.0 - transition.sum(axis=1)
    pi = np.full(n, 1.0 / n)
    residual = np.inf
    for it in range(1, max_iter + 1):
        nxt = pi @ transition
        residual = np.abs(nxt - pi).sum()
        pi = nxt
        if residual < tol:
            return pi / pi.sum()
    raise ConvergenceError(max_iter, residual)


def estimate_top_k(batch: ObservationBatch, beta: ScoreVector, k: int, estimator: str) -> TopKSelection:
    """Run one of ``ESTIMATORS`` on a batch and return its top-k."""
    if estimator == "borda":
        return top_k(borda_tally(batch, beta), k)
    if estimator == "normalized":
        return top_k(normalized_borda_tally(batch, beta), k)
    if estimator == "spectral":
        scores = rank_centrality_scores(rank_break_pairwise(batch))
        return top_k(TallyResult(scores, False, None), k)
    raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")
