"""Combinatorial primitives and the seeding contract.

Items are 0-indexed everywhere inside the library. Subsets are tuples of
strictly increasing indices; rankings are tuples whose first entry is the
best item.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterator, Sequence, Tuple

import numpy as np

ItemSet = Tuple[int, ...]
RankingVec = Tuple[int, ...]

# Largest value returned by the exact integer helpers.
MAX_EXACT = 2**63 - 1

# Explicit models materialize C(n, m) * m! probabilities; refuse beyond this.
MAX_EXPLICIT_N = 20

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


class DimensionError(ValueError):
    """Raised when (n, m, k, ...) violate an operation's preconditions."""


def check_dimensions(n: int, m: int) -> None:
    if not (2 <= m <= n):
        raise DimensionError(f"need 2 <= m <= n, got n={n}, m={m}")


def enumerate_subsets(n: int, m: int) -> Iterator[ItemSet]:
    """Yield all m-subsets of range(n) in lexicographic order."""
    check_dimensions(n, m)
    return itertools.combinations(range(n), m)


def enumerate_permutations(items: Sequence[int]) -> Iterator[RankingVec]:
    """Yield every ordering of ``items`` in lexicographic order."""
    return itertools.permutations(tuple(items))


def falling_factorial(n: int, k: int) -> int:
    """n! / (n - k)!, exactly. Raises OverflowError past int64."""
    if not (0 <= k <= n):
        raise DimensionError(f"need 0 <= k <= n, got n={n}, k={k}")
    value = math.perm(n, k)
    if value > MAX_EXACT:
        raise OverflowError(f"A({n},{k}) exceeds the int64 range")
    return value


def binomial(n: int, k: int) -> int:
    """C(n, k), exactly. Raises OverflowError past int64."""
    if not (0 <= k <= n):
        raise DimensionError(f"need 0 <= k <= n, got n={n}, k={k}")
    value = math.comb(n, k)
    if value > MAX_EXACT:
        raise OverflowError(f"C({n},{k}) exceeds the int64 range")
    return value


def log_falling_factorial(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(n - k + 1)


def log_binomial(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def subset_table(n: int, m: int) -> np.ndarray:
    """All m-subsets as an int array of shape (C(n, m), m)."""
    check_dimensions(n, m)
    return np.array(list(itertools.combinations(range(n), m)), dtype=np.int64).reshape(-1, m)


def permutation_table(m: int) -> np.ndarray:
    """All orderings of positions 0..m-1, shape (m!, m), lexicographic."""
    return np.array(list(itertools.permutations(range(m))), dtype=np.int64).reshape(-1, m)


def subset_keys(subsets: np.ndarray) -> np.ndarray:
    """Bitmask key per row of item indices (n <= 63)."""
    subsets = np.asarray(subsets, dtype=np.int64)
    return np.bitwise_or.reduce(np.left_shift(np.int64(1), subsets), axis=-1)


# -- seeding ----------------------------------------------------------------
#
# Streams are counter based: every uniform is a pure function of
# (seed, subset_rank, round, slot), so results never depend on the order in
# which (subset, round) cells are visited.


def _splitmix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _as_u64(value) -> np.ndarray:
    return np.asarray(value, dtype=np.int64).astype(np.uint64)


def mix(*parts) -> int:
    """Combine integers into a single 64-bit seed (splitmix64 chaining)."""
    acc = np.uint64(0x6A09E667F3BCC909)
    for part in parts:
        acc = _splitmix(acc ^ np.uint64(int(part) & 0xFFFFFFFFFFFFFFFF))
    return int(acc)


def hashed_uniforms(seed: int, subset_rank, round_index, slot: int) -> np.ndarray:
    """Uniform(0, 1) doubles keyed by (seed, subset_rank, round, slot).

    ``subset_rank`` and ``round_index`` broadcast against each other.
    """
    s = np.uint64(mix(seed, slot))
    a = _as_u64(subset_rank)
    b = _as_u64(round_index)
    with np.errstate(over="ignore"):
        h = _splitmix(s ^ a)
        h = _splitmix(h ^ (b * np.uint64(0xD1B54A32D192ED03)))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def rng_from(*parts) -> np.random.Generator:
    """A numpy Generator seeded from mixed integer parts."""
    return np.random.default_rng(mix(*parts))
