"""Line-oriented text formats for models, batches, tallies and configs.

All files are 1-indexed on disk and 0-indexed in memory. Blank lines and
lines starting with ``#`` are ignored.

Model file::

    n m
    <subset items> : <ranking> : <probability>

Batch file (``p`` may be ``synthetic`` for data with no observation
probability)::

    n m r p
    <round> <subset items> : <ranking>
"""

from __future__ import annotations

from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from .aggregation import ObservationBatch, TallyResult
from .core import permutation_table, subset_table
from .models import ExplicitModel, PartialRankingModel


class FormatError(ValueError):
    """Malformed input; ``line`` is 1-based (0 when not line specific)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _content_lines(text: str) -> Iterator[Tuple[int, str]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield number, line


def _ints(chunk: str, number: int) -> List[int]:
    try:
        return [int(tok) for tok in chunk.replace(",", " ").split()]
    except ValueError:
        raise FormatError(f"expected integers, got {chunk.strip()!r}", number) from None


# -- models -----------------------------------------------------------------


def format_model(model: PartialRankingModel) -> str:
    subsets = subset_table(model.n, model.m)
    perms = permutation_table(model.m)
    table = model.table()
    out = [f"{model.n} {model.m}"]
    for s, subset in enumerate(subsets):
        items = " ".join(str(i + 1) for i in subset)
        for j, perm in enumerate(perms):
            ranking = " ".join(str(int(subset[t]) + 1) for t in perm)
            out.append(f"{items} : {ranking} : {float(table[s, j])!r}")
    return "\n".join(out) + "\n"


def parse_model(text: str) -> ExplicitModel:
    """Read a model file. Every (subset, ordering) must appear exactly once."""
    lines = _content_lines(text)
    try:
        number, header = next(lines)
    except StopIteration:
        raise FormatError("empty model file") from None
    dims = _ints(header, number)
    if len(dims) != 2:
        raise FormatError("header must be 'n m'", number)
    n, m = dims
    subsets = subset_table(n, m)
    row_of = {tuple(s): i for i, s in enumerate(subsets.tolist())}
    col_of = {tuple(p): j for j, p in enumerate(permutation_table(m).tolist())}
    probs = np.full((len(subsets), len(col_of)), np.nan)
    for number, line in lines:
        parts = line.split(":")
        if len(parts) != 3:
            raise FormatError("expected 'subset : ranking : probability'", number)
        subset = tuple(i - 1 for i in _ints(parts[0], number))
        ranking = [i - 1 for i in _ints(parts[1], number)]
        try:
            prob = float(parts[2])
        except ValueError:
            raise FormatError(f"bad probability {parts[2].strip()!r}", number) from None
        if subset not in row_of:
            raise FormatError(f"{[i + 1 for i in subset]} is not an increasing {m}-subset of 1..{n}", number)
        if sorted(ranking) != list(subset):
            raise FormatError("ranking is not an ordering of the subset", number)
        s = row_of[subset]
        j = col_of[tuple(subset.index(i) for i in ranking)]
        if not np.isnan(probs[s, j]):
            raise FormatError("duplicate (subset, ranking) entry", number)
        probs[s, j] = prob
    if np.isnan(probs).any():
        raise FormatError(f"{int(np.isnan(probs).sum())} (subset, ranking) entries are missing")
    return ExplicitModel(n, m, probs, kind="file")


# -- batches ----------------------------------------------------------------


def format_batch(batch: ObservationBatch) -> str:
    p = "synthetic" if batch.p is None else repr(float(batch.p))
    out = [f"{batch.n} {batch.m} {batch.r} {p}"]
    for rnd, ranking in zip(batch.rounds.tolist(), batch.rankings.tolist()):
        items = " ".join(str(i + 1) for i in sorted(ranking))
        out.append(f"{rnd + 1} {items} : {' '.join(str(i + 1) for i in ranking)}")
    return "\n".join(out) + "\n"


def parse_batch(text: str) -> ObservationBatch:
    lines = _content_lines(text)
    try:
        number, header = next(lines)
    except StopIteration:
        raise FormatError("empty batch file") from None
    fields = header.split()
    if len(fields) != 4:
        raise FormatError("header must be 'n m r p'", number)
    try:
        n, m, r = (int(v) for v in fields[:3])
        p: Optional[float] = None if fields[3] == "synthetic" else float(fields[3])
    except ValueError:
        raise FormatError(f"bad header {header!r}", number) from None
    rounds, rankings = [], []
    for number, line in lines:
        left, sep, right = line.partition(":")
        if not sep:
            raise FormatError("expected 'round subset : ranking'", number)
        head = _ints(left, number)
        ranking = [i - 1 for i in _ints(right, number)]
        if len(head) != m + 1 or len(ranking) != m:
            raise FormatError(f"expected a round, {m} subset items and {m} ranked items", number)
        subset = [i - 1 for i in head[1:]]
        if sorted(ranking) != sorted(subset) or len(set(ranking)) != m:
            raise FormatError("ranking is not an ordering of the subset", number)
        if not all(0 <= i < n for i in ranking):
            raise FormatError(f"item out of range 1..{n}", number)
        if not 1 <= head[0] <= r:
            raise FormatError(f"round {head[0]} outside 1..{r}", number)
        rounds.append(head[0] - 1)
        rankings.append(ranking)
    batch = ObservationBatch(n, m, r, p, np.array(rankings, dtype=np.int64).reshape(-1, m), rounds)
    batch.validate()
    return batch


# -- tallies and configs ----------------------------------------------------


def tally_csv(tally: TallyResult) -> str:
    rows = ["item,score"] + [f"{i + 1},{float(s)!r}" for i, s in enumerate(tally.scores)]
    return "\n".join(rows) + "\n"


def parse_key_values(text: str) -> Dict[str, str]:
    """Flat ``key = value`` (or ``key: value``) lines."""
    out: Dict[str, str] = {}
    for number, line in _content_lines(text):
        for sep in ("=", ":"):
            if sep in line:
                key, value = line.split(sep, 1)
                break
        else:
            raise FormatError("expected 'key = value'", number)
        key = key.strip().replace("-", "_")
        if not key:
            raise FormatError("empty key", number)
        out[key] = value.strip()
    return out


def float_list(value: str) -> List[float]:
    return [float(v) for v in value.replace(",", " ").split()]


def is_close_model(a: PartialRankingModel, b: PartialRankingModel, tol: float = 0.0) -> bool:
    return (a.n, a.m) == (b.n, b.m) and bool(np.all(np.abs(a.table() - b.table()) <= tol))

