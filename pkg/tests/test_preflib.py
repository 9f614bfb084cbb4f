import math
from itertools import combinations

import numpy as np
import pytest

from bordatopk.aggregation import score_family
from bordatopk.preflib import (
    IncompleteRankingError,
    PreflibDataset,
    PreflibParseError,
    RealDataConfig,
    extract_mwise,
    format_preflib_soc,
    load_fixture,
    parse_preflib_soc,
    preflib_ground_truth,
    real_data_experiment,
)


def test_tiny_fixture():
    ds = parse_preflib_soc(load_fixture("tiny.soc"))
    assert ds.n == 3 and ds.total == 3
    assert ds.item_names == ["a", "b", "c"]
    assert ds.expanded().tolist() == [[0, 1, 2], [0, 1, 2], [2, 1, 0]]


def test_synthetic_fixture():
    ds = parse_preflib_soc(load_fixture("synthetic10.soc"))
    assert ds.n == 10 and ds.total == 5000


def test_round_trip_preserves_multiset():
    for name in ("tiny.soc", "synthetic10.soc"):
        ds = parse_preflib_soc(load_fixture(name))
        back = parse_preflib_soc(format_preflib_soc(ds))
        assert back.multiset() == ds.multiset()
        assert back.item_names == ds.item_names


@pytest.mark.parametrize("body,exc,line", [
    ("2: 1,2,2", PreflibParseError, 2),
    ("2: 1,2", IncompleteRankingError, 2),
    ("1: {1,2},3", IncompleteRankingError, 2),
    ("x: 1,2,3", PreflibParseError, 2),
    ("0: 1,2,3", PreflibParseError, 2),
    ("1: 1,2,4", PreflibParseError, 2),
    ("1 1,2,3", PreflibParseError, 2),
])
def test_parse_errors(body, exc, line):
    with pytest.raises(exc) as info:
        parse_preflib_soc("# NUMBER ALTERNATIVES: 3\n" + body + "\n")
    assert info.value.line == line


def test_missing_header():
    with pytest.raises(PreflibParseError):
        parse_preflib_soc("1: 1,2,3\n")
    with pytest.raises(PreflibParseError):
        parse_preflib_soc("# NUMBER ALTERNATIVES: 3\n")


def _dataset(rows, counts=None):
    rows = np.asarray(rows)
    counts = counts or [1] * len(rows)
    return PreflibDataset(rows.shape[1], [str(i) for i in range(rows.shape[1])], rows, counts)


def test_ground_truth_identical_and_reversed():
    ds = _dataset([[2, 0, 3, 1]], [5])
    gt = preflib_ground_truth(ds, score_family("bar1", 4))
    assert gt.ranking == (2, 0, 3, 1) and not gt.tie
    assert gt.top(2) == {0, 2}
    rev = preflib_ground_truth(_dataset([[0, 1, 2, 3], [3, 2, 1, 0]]), score_family("bar1", 4))
    assert rev.ranking == (0, 1, 2, 3) and rev.tie


def test_ground_truth_matches_position_count_oracle(rng):
    rows = [rng.permutation(6) for _ in range(40)]
    ds = _dataset(rows, list(rng.integers(1, 4, size=40)))
    beta = score_family("check2", 6)
    counts = np.zeros((6, 6))
    for row, c in zip(ds.rankings, ds.counts):
        for pos, item in enumerate(row):
            counts[item, pos] += c
    oracle = counts @ np.array(beta.betas)
    gt = preflib_ground_truth(ds, beta)
    assert np.allclose(gt.scores, oracle)
    assert gt.ranking == tuple(sorted(range(6), key=lambda i: (-oracle[i], i)))
    assert gt == preflib_ground_truth(ds, beta)


def test_extract_full_and_pairs():
    ds = parse_preflib_soc(load_fixture("synthetic10.soc"))
    full = extract_mwise(ds, 10, 50, seed=1)
    pool = {tuple(r) for r in ds.expanded().tolist()}
    assert all(tuple(r) in pool for r in full.rankings.tolist())
    assert full.p is None and full.r == 50
    pairs = extract_mwise(ds, 2, 200, seed=2)
    assert pairs.rankings.shape == (200, 2)
    pairs.validate()
    assert np.array_equal(pairs.rankings, extract_mwise(ds, 2, 200, seed=2).rankings)
    with pytest.raises(ValueError):
        extract_mwise(ds, 11, 5, 0)
    with pytest.raises(ValueError):
        extract_mwise(ds, 3, 5001, 0)


def test_extract_subsets_are_uniform():
    ds = _dataset([list(range(5))], [10_000])
    batch = extract_mwise(ds, 2, 10_000, seed=3)
    keys = [tuple(s) for s in np.sort(batch.rankings, axis=1).tolist()]
    p = 1 / math.comb(5, 2)
    for subset in combinations(range(5), 2):
        freq = keys.count(subset) / 10_000
        assert abs(freq - p) < 3 * math.sqrt(p * (1 - p) / 10_000)
    # the induced order is the one in the source ranking
    assert np.all(batch.rankings[:, 0] < batch.rankings[:, 1])


def test_extract_pairwise_marginals_follow_data():
    ds = parse_preflib_soc(load_fixture("synthetic10.soc"))
    pool = ds.expanded()
    pos = np.argsort(pool, axis=1)
    target = np.mean(pos[:, 9] < pos[:, 0])  # item 10 ahead of item 1
    hits = total = 0
    for seed in range(10):
        batch = extract_mwise(ds, 2, 5000, seed)
        sel = np.all(np.sort(batch.rankings, axis=1) == [0, 9], axis=1)
        hits += np.sum(batch.rankings[sel, 0] == 9)
        total += sel.sum()
    assert abs(hits / total - target) < 3 * math.sqrt(target * (1 - target) / total)


def test_real_data_self_consistency():
    ds = parse_preflib_soc(load_fixture("synthetic10.soc"))
    cfg = RealDataConfig(m=10, k=3, batch_sizes=[5000], trials=3, runs=2)
    res = real_data_experiment(ds, cfg)
    assert all(row.mean_error == 0 for row in res.aggregate)


def test_real_data_trend_and_determinism():
    ds = parse_preflib_soc(load_fixture("synthetic10.soc"))
    cfg = RealDataConfig(m=7, k=3, batch_sizes=[10, 1000], estimators=("borda",), trials=20, runs=3, root_seed=4)
    res = real_data_experiment(ds, cfg)
    small, large = res.aggregate
    assert large.mean_error <= small.mean_error
    assert res.aggregate_csv() == real_data_experiment(ds, cfg).aggregate_csv()
    assert res.raw_csv().splitlines()[0] == "batch_size,estimator,run,error_rate"
