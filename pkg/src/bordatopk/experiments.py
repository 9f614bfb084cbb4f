"""Seeded Monte Carlo harness for the three top-k estimators."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .aggregation import (
    ESTIMATORS,
    DisconnectedGraphError,
    ObservationBatch,
    ScoreVector,
    estimate_top_k,
    hamming_distance,
    score_family,
)
from .bounds import f_k_membership, gap_threshold, theorem1_upper
from .core import mix
from .models import (
    PartialRankingModel,
    PlackettLuceModel,
    associated_scores,
    build_noisy_pl,
    sample_observations,
    true_top_k,
)

__all__ = [
    "ModelSpec", "ExperimentConfig", "PointResult", "ExperimentResult", "SweepResult",
    "MembershipError", "canonical_estimator", "build_model", "ground_truth_topk", "selection_error",
    "run_point", "sweep", "theorem1_empirical_check", "Theorem1Check", "score_family",
    "w1", "w2", "with_overrides", "RAW_HEADER", "AGGREGATE_HEADER",
]

RAW_HEADER = ["p", "estimator", "run", "error_rate"]
AGGREGATE_HEADER = ["p", "estimator", "mean_error", "std_error", "relative_error"]

_ALIASES = {
    "borda": "borda",
    "normalized": "normalized",
    "normalizedborda": "normalized",
    "normalized_borda": "normalized",
    "spectral": "spectral",
    "rankcentrality": "spectral",
}


def canonical_estimator(name: str) -> str:
    key = name.strip().lower().replace("-", "")
    if key not in _ALIASES:
        raise ValueError(f"unknown estimator {name!r}; expected one of {ESTIMATORS}")
    return _ALIASES[key]


def w1(n: int) -> np.ndarray:
    """Linear weights 15 + i, i = 1..n."""
    return 15.0 + np.arange(1, n + 1, dtype=np.float64)


def w2(n: int) -> np.ndarray:
    """Geometric weights 1.1^i, i = 1..n."""
    return 1.1 ** np.arange(1, n + 1, dtype=np.float64)


class MembershipError(ValueError):
    """The model's gap does not clear the F_k(alpha) threshold."""


@dataclass(frozen=True)
class ModelSpec:
    """``kind`` is "PL" or "NoisyPL"; noisy models also need ``sigma``."""

    kind: str
    weights: Tuple[float, ...]
    sigma: float = 0.0
    noise_seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.kind not in ("PL", "NoisyPL"):
            raise ValueError(f"model kind must be PL or NoisyPL, got {self.kind!r}")
        if self.kind == "NoisyPL" and self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @property
    def n(self) -> int:
        return len(self.weights)


@dataclass
class ExperimentConfig:
    n: int
    m: int
    k: int
    r: int
    p_grid: List[float]
    model_spec: ModelSpec
    beta_spec: str = "bar1"
    estimators: Tuple[str, ...] = ESTIMATORS
    trials_per_point: int = 50
    runs: int = 20
    root_seed: int = 0
    hamming_h: Optional[int] = None

    def __post_init__(self):
        self.p_grid = [float(p) for p in self.p_grid]
        self.estimators = tuple(canonical_estimator(e) for e in self.estimators)
        if self.trials_per_point < 1 or self.runs < 1:
            raise ValueError("trials_per_point and runs must be >= 1")
        if not self.p_grid or any(not 0.0 < p <= 1.0 for p in self.p_grid):
            raise ValueError(f"p_grid values must lie in (0, 1], got {self.p_grid}")
        if self.model_spec.n != self.n:
            raise ValueError(f"model has {self.model_spec.n} weights, config has n={self.n}")
        if not 2 <= self.m <= self.n or not 1 <= self.k < self.n or self.r < 1:
            raise ValueError(f"invalid dimensions n={self.n}, m={self.m}, k={self.k}, r={self.r}")

    @property
    def beta(self) -> ScoreVector:
        return score_family(self.beta_spec, self.m)


@dataclass(frozen=True)
class PointResult:
    """One (p, estimator, run) cell: ``errors`` out of ``trials``."""

    p: float
    estimator: str
    run: int
    errors: int
    trials: int
    spectral_failures: int = 0

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials


@dataclass(frozen=True)
class ExperimentResult:
    p: float
    estimator: str
    error_rate: float
    std_error: float
    trial_count: int
    relative_error_rate: Optional[float] = None
    spectral_failures: int = 0


@dataclass
class SweepResult:
    raw: List[PointResult]
    aggregate: List[ExperimentResult]

    def raw_csv(self) -> str:
        return _csv(RAW_HEADER, ([r.p, r.estimator, r.run, r.error_rate] for r in self.raw))

    def aggregate_csv(self) -> str:
        return _csv(AGGREGATE_HEADER, (
            [a.p, a.estimator, a.error_rate, a.std_error, a.relative_error_rate] for a in self.aggregate
        ))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def build_model(spec: ModelSpec, m: int, root_seed: int = 0) -> PartialRankingModel:
    weights = np.asarray(spec.weights)
    if spec.kind == "PL":
        return PlackettLuceModel(weights, m)
    noise_seed = spec.noise_seed if spec.noise_seed is not None else mix(root_seed, 0x4E015E)
    return build_noisy_pl(weights, m, spec.sigma, noise_seed)


def ground_truth_topk(model, beta: ScoreVector, k: int):
    """Top-k of the exact associated scores. Accepts a model or a ModelSpec."""
    if isinstance(model, ModelSpec):
        model = build_model(model, beta.m)
    return true_top_k(associated_scores(model, beta), k)


def selection_error(estimate, truth, hamming_h: Optional[int] = None) -> bool:
    if hamming_h is None:
        return set(estimate) != set(truth)
    return hamming_distance(estimate, truth) > 2 * hamming_h


def _p_index(config: ExperimentConfig, p: float) -> int:
    if p in config.p_grid:
        return config.p_grid.index(p)
    # off-grid points get a stable key from the float's bit pattern
    return int(np.float64(p).view(np.int64)) & 0x7FFFFFFFFFFFFFFF


def _trial_errors(model, batch_seeds, beta, k, truth, estimator, hamming_h) -> Tuple[int, int]:
    errors = failures = 0
    for seed in batch_seeds:
        batch = model.sample(seed)
        try:
            estimate = estimate_top_k(batch, beta, k, estimator).items
        except DisconnectedGraphError:
            errors += 1
            failures += 1
            continue
        errors += selection_error(estimate, truth, hamming_h)
    return errors, failures


class _Sampler:
    def __init__(self, model, p, r):
        self.model, self.p, self.r = model, p, r

    def sample(self, seed: int) -> ObservationBatch:
        return sample_observations(self.model, self.p, self.r, seed)


def run_point(config: ExperimentConfig, p: float, estimator: str, run_index: int,
              _cache: Optional[dict] = None) -> PointResult:
    """``trials_per_point`` independent batches at a single (p, estimator, run).

    Trial t uses seed mix(root_seed, p_index, estimator_id, run, t). A
    disconnected comparison graph counts as an error and is also tallied in
    ``spectral_failures``.
    """
    estimator = canonical_estimator(estimator)
    if _cache is None:
        _cache = {}
    if "model" not in _cache:
        beta = config.beta
        model = build_model(config.model_spec, config.m, config.root_seed)
        _cache["beta"] = beta
        _cache["model"] = model
        _cache["truth"] = ground_truth_topk(model, beta, config.k).items
    p_idx = _p_index(config, p)
    est_id = ESTIMATORS.index(estimator)
    seeds = [mix(config.root_seed, p_idx, est_id, run_index, t) for t in range(config.trials_per_point)]
    errors, failures = _trial_errors(
        _Sampler(_cache["model"], p, config.r), seeds, _cache["beta"], config.k,
        _cache["truth"], estimator, config.hamming_h,
    )
    return PointResult(p, estimator, run_index, errors, config.trials_per_point, failures)


def _aggregate(points: Sequence[PointResult]) -> Tuple[float, float, int, int]:
    rates = np.array([pt.error_rate for pt in points])
    trials = sum(pt.trials for pt in points)
    errors = sum(pt.errors for pt in points)
    std = float(np.std(rates, ddof=1) / math.sqrt(len(rates))) if len(rates) > 1 else 0.0
    return errors / trials, std, trials, sum(pt.spectral_failures for pt in points)


def sweep(config: ExperimentConfig) -> SweepResult:
    """Every (p, estimator, run) point plus per-(p, estimator) summaries.

    For noisy-PL models with the spectral estimator present, each summary
    carries ``relative_error_rate`` = its mean error minus the spectral mean
    error at the same p.
    """
    cache: dict = {}
    raw: List[PointResult] = []
    for p in config.p_grid:
        for est in config.estimators:
            for run in range(config.runs):
                raw.append(run_point(config, p, est, run, cache))
    grouped: Dict[Tuple[float, str], List[PointResult]] = {}
    for pt in raw:
        grouped.setdefault((pt.p, pt.estimator), []).append(pt)
    means = {key: _aggregate(pts) for key, pts in grouped.items()}
    relative = config.model_spec.kind == "NoisyPL" and "spectral" in config.estimators
    aggregate = []
    for (p, est), (mean, std, trials, fails) in means.items():
        rel = mean - means[(p, "spectral")][0] if relative else None
        aggregate.append(ExperimentResult(p, est, mean, std, trials, rel, fails))
    return SweepResult(raw, aggregate)


class Theorem1Check(NamedTuple):
    empirical_rate: float
    bound: float
    passed: bool


def theorem1_empirical_check(n: int, m: int, k: int, r: int, p: float, alpha: float, beta: ScoreVector,
                             model: PartialRankingModel, trials: int = 10_000, seed: int = 0,
                             estimator: str = "borda") -> Theorem1Check:
    """Monte Carlo error of top-k selection against the closed-form bound.

    Passes when the empirical rate is at most the bound (clamped to [0, 1])
    plus three binomial standard deviations. Bounds at or above 1 pass
    trivially.
    """
    if (model.n, model.m) != (n, m):
        raise ValueError(f"model dimensions ({model.n}, {model.m}) differ from ({n}, {m})")
    scores = associated_scores(model, beta)
    if not f_k_membership(scores, k, 0, alpha, r, p):
        raise MembershipError(
            f"gap {scores.order_statistic(k) - scores.order_statistic(k + 1):.6g} is below "
            f"threshold {gap_threshold(n, m, r, p, alpha):.6g} for alpha={alpha}"
        )
    truth = true_top_k(scores, k).items
    _, bound = theorem1_upper(n, m, k, p, alpha, beta.betas[-1])
    clamped = min(max(bound, 0.0), 1.0)
    seeds = [mix(seed, t) for t in range(trials)]
    errors, _ = _trial_errors(_Sampler(model, p, r), seeds, beta, k, truth,
                              canonical_estimator(estimator), None)
    rate = errors / trials
    sigma = math.sqrt(clamped * (1.0 - clamped) / trials)
    return Theorem1Check(rate, bound, rate <= clamped + 3.0 * sigma)


def with_overrides(config: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(config, **changes)
