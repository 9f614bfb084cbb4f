import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bordatopk import bounds as bd
from bordatopk.aggregation import ScoreVector, family_names, score_family
from bordatopk.core import DimensionError
from bordatopk.models import (
    associated_scores,
    build_adversarial,
    delta_gap,
    random_explicit_model,
    true_top_k,
)


def test_m2_alpha_bar_closed_form():
    for n in range(4, 101):
        k = 2
        got = bd.theorem2_alpha_bar(n, 2, k, score_family("bar1", 2))
        assert got == pytest.approx(math.sqrt(n / (n - 1)) / 7, abs=1e-12)


def test_p_zero_m2():
    assert bd.p_zero(2, 2, 0.0) == 0.5
    for n in range(3, 60):
        assert bd.p_zero(n, 2, 0.0) == pytest.approx(1 - math.sqrt(1 - n / (2 * (n - 1))), abs=1e-12)


def test_p_zero_is_capped_and_validates():
    assert bd.p_zero(10, 10, 0.0) == 0.5
    with pytest.raises(ValueError):
        bd.p_zero(10, 3, 1.5)


def test_regimes_and_crossing():
    n, m, beta_m = 20, 4, 0.0
    p0 = bd.p_zero(n, m, beta_m)
    assert bd.theorem1_upper(n, m, 3, p0, 2.0, beta_m)[0] == bd.LOW_P
    assert bd.theorem1_upper(n, m, 3, min(1.0, p0 + 1e-9), 2.0, beta_m)[0] == bd.HIGH_P
    if bd.crossing_root(n, m, beta_m) <= 0.5:
        assert bd.low_p_exponent(p0, 3.0) == pytest.approx(bd.high_p_exponent(n, m, p0, 3.0, beta_m), rel=1e-10)


def test_theorem1_examples():
    regime, bound = bd.theorem1_upper(10, 2, 3, 0.5, 8.0, 0.0)
    assert bound <= 21 * 10.0**-14
    assert bd.theorem1_upper(10, 2, 3, 0.5, 0.0, 0.0)[1] == 21
    with pytest.raises(ValueError):
        bd.theorem1_upper(10, 2, 3, 0.0, 1.0, 0.0)
    with pytest.raises(DimensionError):
        bd.theorem1_upper(10, 2, 10, 0.5, 1.0, 0.0)


def test_theorem3_reduces_to_theorem1():
    for p in (0.1, 0.5, 1.0):
        assert bd.theorem3_upper(12, 4, 3, 0, p, 2.0, 0.2) == bd.theorem1_upper(12, 4, 3, p, 2.0, 0.2)
    assert bd.theorem3_upper(12, 4, 3, 1, 0.5, 2.0, 0.0)[1] < bd.theorem1_upper(12, 4, 3, 0.5, 2.0, 0.0)[1]


@pytest.mark.parametrize("n,m,k", [(6, 3, 2), (8, 4, 3), (8, 3, 2), (7, 6, 3), (8, 7, 4), (6, 2, 3)])
def test_h_forms_agree(n, m, k):
    beta = score_family("bar1", m)
    q, g, h = bd.gh_parameters(n, m, k, beta, exact=True)
    assert h == bd.h_alternative(n, m, k)
    _, g_log, h_log = bd.gh_parameters(n, m, k, beta, exact=False)
    assert g_log == pytest.approx(float(g), rel=1e-12)
    assert h_log == pytest.approx(float(h), rel=1e-12)
    assert q == max(1, m - n + k)
    if q == 1:
        assert bd.gh_simplified(n, m, k, beta) == (g, h)
    else:
        with pytest.raises(DimensionError):
            bd.gh_simplified(n, m, k, beta)


def test_adversarial_gap_identity_wide():
    for n, m, k in [(6, 2, 3), (7, 5, 3), (8, 7, 4), (6, 6, 3)]:
        for name in family_names(m):
            beta = score_family(name, m)
            _, g, _ = bd.gh_parameters(n, m, k, beta)
            for a in range(k - 1, n):
                scores = associated_scores(build_adversarial(n, m, k, 0.25, a), beta)
                assert delta_gap(scores, k) == pytest.approx(float(g) * 0.25 / bd.rho(n, m), abs=1e-10)


def test_converse_preconditions():
    with pytest.raises(DimensionError):
        bd.gh_parameters(6, 3, 4, score_family("bar1", 3))
    with pytest.raises(ValueError):
        bd.gh_parameters(6, 3, 2, score_family("bar1", 4))


def test_theorem4():
    beta = score_family("bar1", 3)
    full = bd.theorem2_alpha_bar(100, 3, 20, beta)
    approx = bd.theorem4_alpha_bar(100, 3, 20, 2, beta, 0.5, 0.5)
    assert approx == pytest.approx(full / 2 * math.sqrt(0.25), rel=1e-12)
    with pytest.raises(bd.HypothesisError):
        bd.theorem4_alpha_bar(100, 3, 20, 4, beta, 0.5, 0.5)
    with pytest.raises(bd.HypothesisError):
        bd.theorem4_hypothesis(100, 20, 1, 1.0, 0.5)


def test_membership_and_max_alpha():
    beta = score_family("bar1", 3)
    n, m, k, r, p = 8, 3, 2, 200, 0.8
    alpha = 0.7
    _, g, _ = bd.gh_parameters(n, m, k, beta)
    delta = alpha * math.sqrt(math.log(n) / (r * p * bd.rho(n, m))) * bd.rho(n, m) / float(g)
    scores = associated_scores(build_adversarial(n, m, k, delta, k - 1), beta)
    assert bd.f_k_membership(scores, k, 0, alpha, r, p)
    assert not bd.f_k_membership(scores, k, 0, alpha * 1.001, r, p)
    assert bd.max_alpha(scores, k, r, p) == pytest.approx(alpha, rel=1e-10)


def test_kl_bound_on_grid():
    for n in (6, 8):
        for m in (2, 3, 4):
            for k in range(1, n // 2 + 1):
                _, _, h = bd.gh_parameters(n, m, k, score_family("bar1", m))
                for delta in (0.1, 0.3):
                    base = build_adversarial(n, m, k, delta, k - 1)
                    for b in range(k, n):
                        other = build_adversarial(n, m, k, delta, b)
                        kl = bd.exact_kl_between(base, other, 5, 0.4)
                        assert 0 <= kl <= bd.kl_bound(5, 0.4, float(h), delta)


def test_exact_kl_basics():
    a = build_adversarial(6, 3, 2, 0.2, 1)
    assert bd.exact_kl_between(a, a, 3, 0.5) == 0
    b = build_adversarial(6, 3, 2, 0.2, 4)
    assert bd.exact_kl_between(a, b, 2, 0.5) == pytest.approx(2 * bd.exact_kl_between(a, b, 1, 0.5))
    with pytest.raises(ValueError):
        bd.exact_kl_between(a, build_adversarial(6, 3, 2, 1.0, 4), 1, 0.5)


def _variance_monte_carlo_oracle(model, beta, a, b, p):
    # per-subset Bernoulli(p) mixture variance, computed from the distribution dicts
    from bordatopk.core import subset_table
    total = 0.0
    for subset in subset_table(model.n, model.m):
        if a not in subset and b not in subset:
            continue
        ev = ev2 = 0.0
        for ranking, prob in model.distribution(subset).items():
            xa = beta.betas[ranking.index(a)] if a in ranking else 0.0
            xb = beta.betas[ranking.index(b)] if b in ranking else 0.0
            x = xa - xb
            ev += p * prob * x
            ev2 += p * prob * x * x
        total += ev2 - ev * ev
    return total


def test_variance_sum_oracle(rng):
    model = random_explicit_model(5, 3, rng)
    beta = score_family("check2", 3)
    for a, b in [(0, 1), (2, 4), (3, 0)]:
        assert bd.exact_variance_sum(model, beta, a, b, 0.3) == pytest.approx(
            _variance_monte_carlo_oracle(model, beta, a, b, 0.3), rel=1e-12)
    with pytest.raises(ValueError):
        bd.exact_variance_sum(model, beta, 1, 1, 0.3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([(5, 2), (6, 3), (6, 4), (4, 3)]),
       st.sampled_from([0.1, 0.2, 0.3, 0.4, 0.5]))
def test_variance_bound_property(seed, dims, p):
    n, m = dims
    rng = np.random.default_rng(seed)
    model = random_explicit_model(n, m, rng)
    for name in family_names(m):
        beta = score_family(name, m)
        scores = associated_scores(model, beta)
        for k in range(1, n):
            top = true_top_k(scores, k).items
            a = max(top, key=lambda i: scores.tau[i])
            b = min(set(range(n)) - top, key=lambda i: scores.tau[i])
            var = bd.exact_variance_sum(model, beta, a, b, p)
            assert var <= bd.variance_bound(n, m, p, delta_gap(scores, k)) + 1e-12


def test_gap_curve_rows():
    rows = bd.bound_gap_curve(15, 3, 0.4, "bar1", range(2, 16))
    assert [row["m"] for row in rows] == list(range(2, 16))
    assert all(row["q"] == 1 for row in rows if row["m"] <= 13)
    assert [row["q"] for row in rows if row["m"] > 13] == [2, 3]
    assert all(row["gap"] == pytest.approx(row["alpha_upper"] - row["alpha_bar"]) for row in rows)
    first = rows[0]
    assert first["alpha_bar"] == pytest.approx(math.sqrt(15 / 14) / 7, abs=1e-12)
    csv_text = bd.rows_to_csv(rows)
    assert csv_text.splitlines()[0] == ",".join(bd.GAP_CURVE_HEADER)
    assert len(csv_text.splitlines()) == 15
    with pytest.raises(DimensionError):
        bd.bound_gap_curve(6, 4, 0.4)


def test_alpha_upper_hits_target():
    for p in (0.2, 0.4, 1.0):
        for m in (2, 4, 6):
            alpha = bd.alpha_upper(12, m, 3, p, 0.0)
            _, bound = bd.theorem1_upper(12, m, 3, p, alpha, 0.0)
            assert bound == pytest.approx(27 * 12.0**-14, rel=1e-9)
            target = 1e-3
            alpha_t = bd.alpha_upper(12, m, 3, p, 0.0, target)
            assert bd.theorem1_upper(12, m, 3, p, alpha_t, 0.0)[1] == pytest.approx(target, rel=1e-9)
    assert bd.alpha_upper(12, 3, 3, 0.5, 0.0, target=1e6) == 0.0


def test_asymptotic_threshold_makes_bound_small():
    n, m, k = 50, 4, 3
    for p in (0.05, 0.5, 1.0):
        alpha = bd.asymptotic_alpha_threshold(n, m, p, 0.0, gamma=1.0)
        _, bound = bd.theorem1_upper(n, m, k, p, alpha, 0.0)
        assert bound <= n**-1.0 + 1e-15


def test_reports():
    rep = bd.bound_report(10, 3, 3, 0.5, 4.0, score_family("bar1", 3), r=20)
    assert rep.regime in (bd.LOW_P, bd.HIGH_P)
    assert rep.upper_bound_clamped == min(rep.upper_bound, 1.0)
    assert rep.rho == 36 and rep.q == 1
    assert bd.report_dict(rep)["r"] == 20
    assert bd.bound_report(10, 3, 6, 0.5, 4.0, score_family("bar1", 3)).alpha_bar is None
    approx = bd.approx_bound_report(40, 3, 10, 1, 0.5, 4.0, score_family("bar1", 3))
    assert approx.alpha_bar_approx < approx.alpha_bar
