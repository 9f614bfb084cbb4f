"""Strict-order-complete preference files and the mini-batch real-data pipeline.

Grammar (one statement per line)::

    file      := { metadata | blank } { body }
    metadata  := "#" text            # "# NUMBER ALTERNATIVES: n" is required,
                                     # "# ALTERNATIVE NAME i: label" optional
    body      := count ":" item { "," item }      # items are 1-based

Every body line must list all n alternatives exactly once. Tied or partial
orders (``{...}`` groups, short lines) are rejected.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .aggregation import (
    ESTIMATORS,
    DisconnectedGraphError,
    ObservationBatch,
    estimate_top_k,
    score_family,
    top_k_from_scores,
)
from .core import mix

_META = re.compile(r"#\s*([A-Za-z][A-Za-z ]*?)\s*(\d+)?\s*:\s*(.*)$")


class PreflibParseError(ValueError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class IncompleteRankingError(PreflibParseError):
    """A body line is a partial or tied order."""


@dataclass
class PreflibDataset:
    """Distinct complete rankings (0-indexed rows) with their multiplicities."""

    n: int
    item_names: List[str]
    rankings: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.rankings = np.asarray(self.rankings, dtype=np.int64).reshape(-1, self.n)
        self.counts = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if len(self.rankings) != len(self.counts):
            raise ValueError("rankings and counts differ in length")
        if np.any(self.counts < 1):
            raise ValueError("multiplicities must be >= 1")
        if np.any(np.sort(self.rankings, axis=1) != np.arange(self.n)):
            raise ValueError("every ranking must be a permutation of all items")
        if len(self.item_names) != self.n:
            raise ValueError("one name per item is required")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def expanded(self) -> np.ndarray:
        """All rankings with multiplicity, in file order: shape (total, n)."""
        return np.repeat(self.rankings, self.counts, axis=0)

    def multiset(self) -> Dict[Tuple[int, ...], int]:
        out: Dict[Tuple[int, ...], int] = {}
        for row, c in zip(self.rankings.tolist(), self.counts.tolist()):
            out[tuple(row)] = out.get(tuple(row), 0) + c
        return out


def parse_preflib_soc(text: str) -> PreflibDataset:
    n: Optional[int] = None
    names: Dict[int, str] = {}
    rows: List[List[int]] = []
    counts: List[int] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            meta = _META.match(line)
            if meta is None:
                continue
            key, index, value = meta.group(1).upper(), meta.group(2), meta.group(3).strip()
            if key == "NUMBER ALTERNATIVES":
                try:
                    n = int(value)
                except ValueError:
                    raise PreflibParseError(f"bad alternative count {value!r}", number) from None
            elif key == "ALTERNATIVE NAME" and index is not None:
                names[int(index)] = value
            continue
        if n is None:
            raise PreflibParseError("ranking before '# NUMBER ALTERNATIVES'", number)
        count_part, sep, order_part = line.partition(":")
        if not sep:
            raise PreflibParseError("expected 'count: ranking'", number)
        if "{" in order_part or "}" in order_part:
            raise IncompleteRankingError("tied orders are not supported", number)
        try:
            count = int(count_part)
            items = [int(tok) for tok in order_part.split(",")]
        except ValueError:
            raise PreflibParseError(f"malformed line {line!r}", number) from None
        if count < 1:
            raise PreflibParseError(f"multiplicity must be >= 1, got {count}", number)
        if any(not 1 <= i <= n for i in items):
            raise PreflibParseError(f"item outside 1..{n}", number)
        if len(set(items)) != len(items):
            raise PreflibParseError("ranking repeats an item", number)
        if len(items) != n:
            raise IncompleteRankingError(f"ranking lists {len(items)} of {n} items", number)
        rows.append([i - 1 for i in items])
        counts.append(count)
    if n is None:
        raise PreflibParseError("missing '# NUMBER ALTERNATIVES'")
    if not rows:
        raise PreflibParseError("no rankings")
    labels = [names.get(i + 1, str(i + 1)) for i in range(n)]
    return PreflibDataset(n, labels, np.array(rows), np.array(counts))


def format_preflib_soc(dataset: PreflibDataset, title: str = "") -> str:
    out = []
    if title:
        out.append(f"# TITLE: {title}")
    out.append("# DATA TYPE: soc")
    out.append(f"# NUMBER ALTERNATIVES: {dataset.n}")
    out.append(f"# NUMBER VOTERS: {dataset.total}")
    out.append(f"# NUMBER UNIQUE ORDERS: {len(dataset.rankings)}")
    for i, name in enumerate(dataset.item_names, start=1):
        out.append(f"# ALTERNATIVE NAME {i}: {name}")
    for row, count in zip(dataset.rankings.tolist(), dataset.counts.tolist()):
        out.append(f"{count}: " + ",".join(str(i + 1) for i in row))
    return "\n".join(out) + "\n"


def load_fixture(name: str) -> str:
    """Text of a file bundled in ``bordatopk/data``."""
    return resources.files("bordatopk").joinpath("data", name).read_text()


@dataclass(frozen=True)
class GroundTruth:
    ranking: Tuple[int, ...]
    tie: bool
    scores: Tuple[float, ...]

    def top(self, k: int) -> frozenset:
        return frozenset(self.ranking[:k])


def full_tally(dataset: PreflibDataset, beta_full) -> np.ndarray:
    betas = np.asarray(getattr(beta_full, "betas", beta_full), dtype=np.float64)
    if len(betas) != dataset.n:
        raise ValueError(f"score vector has length {len(betas)}, dataset has n={dataset.n}")
    weights = dataset.counts[:, None] * betas[None, :]
    return np.bincount(dataset.rankings.ravel(), weights=weights.ravel(), minlength=dataset.n)


def preflib_ground_truth(dataset: PreflibDataset, beta_full) -> GroundTruth:
    """Borda order of the whole dataset; ties go to the lower index.

    ``tie`` is set when any two items share a score.
    """
    scores = full_tally(dataset, beta_full)
    sel = top_k_from_scores(scores, dataset.n)
    tie = len(np.unique(scores)) < dataset.n
    return GroundTruth(sel.order, bool(tie), tuple(float(s) for s in scores))


def extract_mwise(dataset: PreflibDataset, m: int, batch_size: int, seed: int) -> ObservationBatch:
    """Sample ``batch_size`` rankings without replacement and keep one random m-group of each.

    Record i is stored in round i, so the batch has r = batch_size and no
    observation probability.
    """
    n = dataset.n
    if not 2 <= m <= n:
        raise ValueError(f"need 2 <= m <= n={n}, got m={m}")
    if not 1 <= batch_size <= dataset.total:
        raise ValueError(f"batch_size must be in [1, {dataset.total}], got {batch_size}")
    rng = np.random.default_rng(seed)
    pool = dataset.expanded()
    chosen = pool[rng.choice(len(pool), size=batch_size, replace=False)]
    subsets = np.sort(np.argsort(rng.random((batch_size, n)), axis=1)[:, :m], axis=1)
    position = np.argsort(chosen, axis=1)  # position[i, item]
    sub_pos = np.take_along_axis(position, subsets, axis=1)
    ordered = np.take_along_axis(subsets, np.argsort(sub_pos, axis=1), axis=1)
    return ObservationBatch(n, m, batch_size, None, ordered, np.arange(batch_size))


@dataclass
class RealDataConfig:
    m: int
    k: int
    batch_sizes: List[int]
    beta_spec: str = "bar1"
    estimators: Tuple[str, ...] = ESTIMATORS
    trials: int = 50
    runs: int = 20
    root_seed: int = 0

    def __post_init__(self):
        if self.trials < 1 or self.runs < 1:
            raise ValueError("trials and runs must be >= 1")
        if not self.batch_sizes:
            raise ValueError("batch_sizes is empty")


@dataclass(frozen=True)
class RealDataRow:
    batch_size: int
    estimator: str
    mean_error: float
    std_error: float
    trial_count: int
    spectral_failures: int = 0


@dataclass
class RealDataResult:
    raw: List[Tuple[int, str, int, float]]
    aggregate: List[RealDataRow]
    truth: GroundTruth

    def raw_csv(self) -> str:
        return _csv(["batch_size", "estimator", "run", "error_rate"], self.raw)

    def aggregate_csv(self) -> str:
        return _csv(["batch_size", "estimator", "mean_error", "std_error"],
                    [(a.batch_size, a.estimator, a.mean_error, a.std_error) for a in self.aggregate])


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def real_data_experiment(dataset: PreflibDataset, config: RealDataConfig) -> RealDataResult:
    """Error of each estimator against the full-data Borda top-k, per batch size.

    The ground truth uses the configured score family at length n; the
    estimators use it at length m. Trial t of run j at batch-size index b
    draws with seed mix(root_seed, b, estimator_id, j, t).
    """
    n = dataset.n
    if not 2 <= config.m <= n or not 1 <= config.k < n:
        raise ValueError(f"need 2 <= m <= {n} and 1 <= k < {n}")
    truth = preflib_ground_truth(dataset, score_family(config.beta_spec, n))
    target = truth.top(config.k)
    beta = score_family(config.beta_spec, config.m)
    raw: List[Tuple[int, str, int, float]] = []
    aggregate: List[RealDataRow] = []
    for b_idx, size in enumerate(config.batch_sizes):
        for est in config.estimators:
            est_id = ESTIMATORS.index(est)
            rates, failures = [], 0
            for run in range(config.runs):
                errors = 0
                for t in range(config.trials):
                    batch = extract_mwise(dataset, config.m, size, mix(config.root_seed, b_idx, est_id, run, t))
                    try:
                        est_items = estimate_top_k(batch, beta, config.k, est).items
                    except DisconnectedGraphError:
                        errors += 1
                        failures += 1
                        continue
                    errors += est_items != target
                rate = errors / config.trials
                rates.append(rate)
                raw.append((size, est, run, rate))
            arr = np.array(rates)
            std = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
            aggregate.append(RealDataRow(size, est, float(arr.mean()), std,
                                         config.runs * config.trials, failures))
    return RealDataResult(raw, aggregate, truth)
