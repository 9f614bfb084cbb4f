import numpy as np
import pytest

from bordatopk.aggregation import ObservationBatch, borda_tally, score_family
from bordatopk.formats import (
    FormatError,
    format_batch,
    format_model,
    is_close_model,
    parse_batch,
    parse_key_values,
    parse_model,
    tally_csv,
)
from bordatopk.models import PlackettLuceModel, build_adversarial, sample_observations


def test_example2_fixture_parses(example2_batch):
    assert (example2_batch.n, example2_batch.m, example2_batch.r, example2_batch.p) == (4, 3, 2, 0.5)
    assert example2_batch.rankings.tolist()[0] == [1, 0, 2]
    assert example2_batch.rounds.tolist() == [0, 1, 0, 0, 0]


def test_batch_round_trip():
    batch = sample_observations(PlackettLuceModel(np.arange(1.0, 7.0), 3), 0.4, 3, seed=9)
    back = parse_batch(format_batch(batch))
    assert np.array_equal(back.rankings, batch.rankings)
    assert np.array_equal(back.rounds, batch.rounds)
    assert (back.n, back.m, back.r, back.p) == (6, 3, 3, 0.4)
    synthetic = ObservationBatch(3, 2, 1, None, [[2, 0]], [0])
    assert parse_batch(format_batch(synthetic)).p is None


@pytest.mark.parametrize("text,line", [
    ("4 3 2\n", 1),
    ("4 3 2 0.5\n1 1 2 3 2 1 3\n", 2),
    ("4 3 2 0.5\n1 1 2 3 : 2 1 4\n", 2),
    ("4 3 2 0.5\n# c\n3 1 2 3 : 2 1 3\n", 3),
    ("4 3 2 0.5\n1 1 2 x : 2 1 3\n", 2),
    ("4 3 2 0.5\n1 1 2 3 : 2 2 3\n", 2),
])
def test_batch_errors_carry_line_numbers(text, line):
    with pytest.raises(FormatError) as info:
        parse_batch(text)
    assert info.value.line == line


def test_duplicate_cell_rejected():
    with pytest.raises(ValueError):
        parse_batch("3 2 1 0.5\n1 1 2 : 1 2\n1 1 2 : 2 1\n")


def test_model_round_trip():
    model = build_adversarial(6, 3, 2, 0.3, 4)
    text = format_model(model)
    assert text.splitlines()[0] == "6 3"
    assert text.splitlines()[1].startswith("1 2 3 : 1 2 3 : ")
    assert is_close_model(parse_model(text), model)
    pl = PlackettLuceModel(np.array([1.0, 2.0, 3.0, 4.0]), 2)
    assert is_close_model(parse_model(format_model(pl)), pl)


def test_model_errors():
    good = format_model(build_adversarial(4, 2, 2, 0.1, 2)).splitlines()
    with pytest.raises(FormatError):
        parse_model("\n".join(good[:-1]))
    with pytest.raises(FormatError):
        parse_model("\n".join(good + [good[-1]]))
    with pytest.raises(FormatError) as info:
        parse_model("\n".join(good[:2] + ["1 2 : 1 3 : 0.5"] + good[3:]))
    assert info.value.line == 3
    with pytest.raises(FormatError):
        parse_model("")


def test_tally_csv(example2_batch):
    text = tally_csv(borda_tally(example2_batch, score_family("bar1", 3)))
    assert text.splitlines() == ["item,score", "1,1.5", "2,3.0", "3,2.5", "4,0.5"]


def test_key_values():
    parsed = parse_key_values("# experiment\nn = 10\np-grid: 0.2, 0.4\nbeta=bar1\n")
    assert parsed == {"n": "10", "p_grid": "0.2, 0.4", "beta": "bar1"}
    with pytest.raises(FormatError):
        parse_key_values("n 10\n")
