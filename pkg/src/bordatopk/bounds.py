"""Closed-form error-probability bounds and the exact quantities behind them.

All logarithms are natural; ``n ** -x`` is evaluated as ``exp(-x * ln n)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .aggregation import ScoreVector, score_family
from .core import (
    DimensionError,
    binomial,
    check_dimensions,
    falling_factorial,
    log_binomial,
    log_falling_factorial,
    subset_table,
)
from .models import AssociatedScores, PartialRankingModel, _guard, delta_gap

LOW_P = "LowP"
HIGH_P = "HighP"

# n * m above which g and h are evaluated in log space instead of exactly.
LOG_SPACE_THRESHOLD = 400

GAP_CURVE_HEADER = ["m", "alpha_upper", "alpha_bar", "gap", "regime", "p0", "q", "g", "h"]


class HypothesisError(ValueError):
    """A theorem's hypothesis on its parameters does not hold."""


def _hoeffding_denominator(n: int, m: int, beta_m: float) -> float:
    return 2.0 * (1.0 - beta_m) ** 2 * (m - 1) / (n - 1) + (n - m) / (n - 1)


def p_zero(n: int, m: int, beta_m: float) -> float:
    """Observation probability separating the low-p and high-p regimes."""
    check_dimensions(n, m)
    if not 0.0 <= beta_m <= 1.0:
        raise ValueError(f"beta_m must be in [0, 1], got {beta_m}")
    radicand = 1.0 - (1.0 - beta_m) ** 2 * (m - 1) / (n - 1) - 0.5 * (n - m) / (n - 1)
    if radicand < -1e-15:
        raise ArithmeticError(f"negative radicand {radicand} in p0 for n={n}, m={m}")
    return min(0.5, 1.0 - math.sqrt(max(radicand, 0.0)))


def crossing_root(n: int, m: int, beta_m: float) -> float:
    """Smaller root of p^2 - 2p + D/2, where both regime exponents agree."""
    d = _hoeffding_denominator(n, m, beta_m)
    return 1.0 - math.sqrt(max(1.0 - d / 2.0, 0.0))


def low_p_exponent(p: float, alpha: float) -> float:
    return alpha**2 / (4.0 - 2.0 * p)


def high_p_exponent(n: int, m: int, p: float, alpha: float, beta_m: float) -> float:
    return alpha**2 * p / _hoeffding_denominator(n, m, beta_m)


def _regime_bound(prefactor, n, m, p, alpha, beta_m) -> Tuple[str, float]:
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if p <= p_zero(n, m, beta_m):
        return LOW_P, prefactor * math.exp(-low_p_exponent(p, alpha) * math.log(n))
    return HIGH_P, prefactor * math.exp(-high_p_exponent(n, m, p, alpha, beta_m) * math.log(n))


def theorem1_upper(n: int, m: int, k: int, p: float, alpha: float, beta_m: float) -> Tuple[str, float]:
    """(regime, bound) on the exact top-k error probability of Borda counting.

    The bound is returned raw and may exceed 1.
    """
    check_dimensions(n, m)
    if not 1 <= k <= n - 1:
        raise DimensionError(f"k must be in [1, {n - 1}], got {k}")
    return _regime_bound(k * (n - k), n, m, p, alpha, beta_m)


def theorem3_upper(n: int, m: int, k: int, h_radius: int, p: float, alpha: float,
                   beta_m: float) -> Tuple[str, float]:
    """Bound on P[D_H(estimate, truth) > 2h]; h_radius = 0 recovers theorem1_upper."""
    check_dimensions(n, m)
    if h_radius < 0 or k - h_radius < 1 or k + h_radius > n:
        raise DimensionError(f"need k-h >= 1 and k+h <= n, got k={k}, h={h_radius}, n={n}")
    return _regime_bound((k - h_radius) * (n - k - h_radius), n, m, p, alpha, beta_m)


def _q(n: int, m: int, k: int) -> int:
    return max(1, m - n + k)


def _check_converse(n: int, m: int, k: int, beta: ScoreVector) -> None:
    check_dimensions(n, m)
    if k < 1 or 2 * k > n:
        raise DimensionError(f"need 1 <= k and 2k <= n, got n={n}, k={k}")
    if len(beta) != m:
        raise ValueError(f"score vector has length {len(beta)}, expected m={m}")


def gh_parameters(n: int, m: int, k: int, beta: ScoreVector, exact: Optional[bool] = None):
    """(q, g, h) of the converse bound.

    With ``exact=True`` g and h are Fractions computed in integer
    arithmetic (the betas are converted exactly). By default exact
    arithmetic is used while n*m <= LOG_SPACE_THRESHOLD and a log-space
    float evaluation otherwise.
    """
    _check_converse(n, m, k, beta)
    q = _q(n, m, k)
    if exact is None:
        exact = n * m <= LOG_SPACE_THRESHOLD
    spread = [(beta.betas[t], beta.betas[m - q + t]) for t in range(q)]
    if exact:
        a_term = falling_factorial(k - 1, q - 1) * falling_factorial(n - k - 1, m - q - 1)
        diff = sum((Fraction(b1) - Fraction(b2) for b1, b2 in spread), Fraction(0))
        g = Fraction(n, math.factorial(m)) * diff * a_term
        h = Fraction(
            binomial(k - 1, q - 1) * binomial(n - k, m - q)
            + binomial(k, q) * binomial(n - k - 1, m - q - 1),
            binomial(m, q),
        )
        return q, g, h
    log_a = log_falling_factorial(k - 1, q - 1) + log_falling_factorial(n - k - 1, m - q - 1)
    diff = sum(b1 - b2 for b1, b2 in spread)
    g = diff * math.exp(math.log(n) - math.lgamma(m + 1) + log_a)
    log_h = np.logaddexp(
        log_binomial(k - 1, q - 1) + log_binomial(n - k, m - q),
        log_binomial(k, q) + log_binomial(n - k - 1, m - q - 1),
    ) - log_binomial(m, q)
    return q, g, math.exp(log_h)


def h_alternative(n: int, m: int, k: int) -> Fraction:
    """h(n, m) through its (nq + k(m - 2q)) / m! product form."""
    q = _q(n, m, k)
    return Fraction(
        (n * q + k * (m - 2 * q)) * falling_factorial(k - 1, q - 1) * falling_factorial(n - k - 1, m - q - 1),
        math.factorial(m),
    )


def gh_simplified(n: int, m: int, k: int, beta: ScoreVector) -> Tuple[Fraction, Fraction]:
    """The q = 1 forms of g and h; only valid when m - n + k <= 1."""
    _check_converse(n, m, k, beta)
    if _q(n, m, k) != 1:
        raise DimensionError("simplified forms need q = 1")
    a = falling_factorial(n - k - 1, m - 2)
    g = Fraction(n, math.factorial(m)) * (Fraction(beta.betas[0]) - Fraction(beta.betas[-1])) * a
    h = Fraction((n + k * (m - 2)) * a, math.factorial(m))
    return g, h


def rho(n: int, m: int) -> int:
    return binomial(n - 1, m - 1)


def theorem2_alpha_bar(n: int, m: int, k: int, beta: ScoreVector) -> float:
    """Largest alpha covered by the converse bound: (sqrt2/7) g / sqrt(h rho)."""
    _, g, h = gh_parameters(n, m, k, beta)
    return math.sqrt(2.0) / 7.0 * float(g) / math.sqrt(float(h) * rho(n, m))


def theorem4_hypothesis(n: int, k: int, h_radius: int, nu1: float, nu2: float) -> None:
    if not (0.0 < nu1 < 1.0 and 0.0 < nu2 < 1.0):
        raise HypothesisError(f"nu1 and nu2 must lie in (0, 1), got {nu1}, {nu2}")
    limit = min(n - k, k, n ** (1.0 - nu1)) / (1.0 + nu2)
    if 2 * h_radius > limit:
        raise HypothesisError(
            f"2h <= min(n-k, k, n^(1-nu1)) / (1+nu2) fails: 2h={2 * h_radius}, bound={limit:.6g}"
        )


def theorem4_alpha_bar(n: int, m: int, k: int, h_radius: int, beta: ScoreVector,
                       nu1: float = 0.5, nu2: float = 0.5) -> float:
    """Approximate-recovery converse threshold (sqrt2/14) g sqrt(nu1 nu2 / (h rho)).

    The result additionally needs n above an unspecified (nu1, nu2)
    constant; that part of the hypothesis cannot be checked.
    """
    theorem4_hypothesis(n, k, h_radius, nu1, nu2)
    _, g, h = gh_parameters(n, m, k, beta)
    return math.sqrt(2.0) / 14.0 * float(g) * math.sqrt(nu1 * nu2 / (float(h) * rho(n, m)))


def gap_threshold(n: int, m: int, r: int, p: float, alpha: float) -> float:
    """alpha * sqrt(log n / (r p rho))."""
    return alpha * math.sqrt(math.log(n) / (r * p * rho(n, m)))


def f_k_membership(scores: AssociatedScores, k: int, h_radius: int, alpha: float, r: int, p: float,
                   rtol: float = 1e-12) -> bool:
    """Whether the model's gap clears alpha * sqrt(log n / (r p rho)).

    The comparison is inclusive; ``rtol`` absorbs floating-point error when
    the gap sits exactly on the threshold.
    """
    n = len(scores.tau)
    m = scores.beta.m
    gap = delta_gap(scores, k, h_radius)
    threshold = gap_threshold(n, m, r, p, alpha)
    return gap >= threshold - rtol * max(threshold, 1e-300)


def max_alpha(scores: AssociatedScores, k: int, r: int, p: float, h_radius: int = 0) -> float:
    """Largest alpha for which the model belongs to F_k(alpha)."""
    n = len(scores.tau)
    return delta_gap(scores, k, h_radius) / math.sqrt(math.log(n) / (r * p * rho(n, scores.beta.m)))


def asymptotic_alpha_threshold(n: int, m: int, p: float, beta_m: float, gamma: float = 0.0) -> float:
    """Smallest alpha making the error-probability bound at most n^(-gamma) (prefactor <= n^2)."""
    if p <= p_zero(n, m, beta_m):
        return math.sqrt((2.0 + gamma) * (4.0 - 2.0 * p))
    return math.sqrt((2.0 + gamma) / p * _hoeffding_denominator(n, m, beta_m))


def kl_bound(r: int, p: float, h: float, delta: float) -> float:
    return r * p * float(h) * 4.0 * delta**2 / (1.0 - delta**2)


def exact_kl_between(model_a: PartialRankingModel, model_b: PartialRankingModel, r: int, p: float) -> float:
    """KL divergence between the observation laws of two models over r rounds.

    An unobserved cell has the same probability under both models, so the
    divergence is r * p * sum over subsets of the per-subset KL.
    """
    if (model_a.n, model_a.m) != (model_b.n, model_b.m):
        raise ValueError("models differ in (n, m)")
    pa, pb = model_a.table(), model_b.table()
    support = pa > 0
    if np.any(support & (pb <= 0)):
        raise ValueError("model_a puts mass where model_b has none; KL is infinite")
    terms = np.zeros_like(pa)
    terms[support] = pa[support] * np.log(pa[support] / pb[support])
    return float(r * p * terms.sum())


def exact_variance_sum(model: PartialRankingModel, beta: ScoreVector, a: int, b: int, p: float) -> float:
    """Sum of the per-round variances of the centred scores entering W_b - W_a.

    Subsets holding exactly one of a, b contribute Var(X_a) or Var(X_b);
    subsets holding both contribute Var(X_a - X_b).
    """
    if a == b:
        raise ValueError("a and b must differ")
    _guard(model.n, model.m)
    table = model.table()
    subsets = subset_table(model.n, model.m)
    ordered = model.ordered_items()
    bvec = beta.array
    score_a = ((ordered == a) * bvec).sum(axis=-1)
    score_b = ((ordered == b) * bvec).sum(axis=-1)
    has_a = (subsets == a).any(axis=1)
    has_b = (subsets == b).any(axis=1)

    def variance(values, rows):
        t = table[rows]
        v = values[rows]
        mean = p * (t * v).sum(axis=1)
        second = p * (t * v * v).sum(axis=1)
        return float((second - mean**2).sum())

    return (
        variance(score_a, has_a & ~has_b)
        + variance(score_b, has_b & ~has_a)
        + variance(score_a - score_b, has_a & has_b)
    )


def variance_bound(n: int, m: int, p: float, delta_k: float) -> float:
    """(2p - p^2) rho - p rho Delta_k."""
    rh = rho(n, m)
    return (2 * p - p * p) * rh - p * rh * delta_k


@dataclass
class BoundReport:
    n: int
    m: int
    k: int
    r: Optional[int]
    p: float
    alpha: float
    regime: str
    p0: float
    upper_bound: float
    upper_bound_clamped: float
    q: Optional[int]
    g: Optional[float]
    h: Optional[float]
    alpha_bar: Optional[float]
    rho: int


@dataclass
class ApproxBoundReport(BoundReport):
    h_radius: int = 0
    nu1: float = 0.5
    nu2: float = 0.5
    alpha_bar_approx: Optional[float] = None


def bound_report(n: int, m: int, k: int, p: float, alpha: float, beta: ScoreVector,
                 r: Optional[int] = None) -> BoundReport:
    """Error-probability bound plus, when 2k <= n, the converse parameters."""
    beta_m = beta.betas[-1]
    regime, bound = theorem1_upper(n, m, k, p, alpha, beta_m)
    q = g = h = alpha_bar = None
    if 2 * k <= n:
        q, g, h = gh_parameters(n, m, k, beta)
        g, h = float(g), float(h)
        alpha_bar = theorem2_alpha_bar(n, m, k, beta)
    return BoundReport(n, m, k, r, p, alpha, regime, p_zero(n, m, beta_m), bound, min(bound, 1.0),
                       q, g, h, alpha_bar, rho(n, m))


def approx_bound_report(n: int, m: int, k: int, h_radius: int, p: float, alpha: float, beta: ScoreVector,
                        nu1: float = 0.5, nu2: float = 0.5, r: Optional[int] = None) -> ApproxBoundReport:
    beta_m = beta.betas[-1]
    regime, bound = theorem3_upper(n, m, k, h_radius, p, alpha, beta_m)
    q, g, h = gh_parameters(n, m, k, beta)
    return ApproxBoundReport(
        n, m, k, r, p, alpha, regime, p_zero(n, m, beta_m), bound, min(bound, 1.0),
        q, float(g), float(h), theorem2_alpha_bar(n, m, k, beta), rho(n, m),
        h_radius=h_radius, nu1=nu1, nu2=nu2,
        alpha_bar_approx=theorem4_alpha_bar(n, m, k, h_radius, beta, nu1, nu2),
    )


def alpha_upper(n: int, m: int, k: int, p: float, beta_m: float, target: Optional[float] = None) -> float:
    """Smallest alpha whose error-probability bound is <= target.

    The default target is k(n-k) n^-14, i.e. the bound's exponent equals 14.
    """
    if target is None:
        gamma = 14.0
    else:
        gamma = math.log(k * (n - k) / target) / math.log(n)
    if gamma <= 0:
        return 0.0
    if p <= p_zero(n, m, beta_m):
        return math.sqrt(gamma * (4.0 - 2.0 * p))
    return math.sqrt(gamma * _hoeffding_denominator(n, m, beta_m) / p)


def bound_gap_curve(n: int, k: int, p: float, beta_family: str = "bar1",
                    m_range: Optional[Iterable[int]] = None, target: Optional[float] = None) -> List[dict]:
    """One row per m: upper alpha, converse alpha_bar and their gap."""
    if 2 * k > n:
        raise DimensionError(f"need 2k <= n, got n={n}, k={k}")
    ms = list(m_range) if m_range is not None else list(range(2, n - k + 1))
    rows = []
    for m in ms:
        if not 2 <= m <= n:
            raise DimensionError(f"m={m} outside [2, {n}]")
        beta = score_family(beta_family, m)
        beta_m = beta.betas[-1]
        q, g, h = gh_parameters(n, m, k, beta)
        up = alpha_upper(n, m, k, p, beta_m, target)
        bar = theorem2_alpha_bar(n, m, k, beta)
        p0 = p_zero(n, m, beta_m)
        rows.append({
            "m": m, "alpha_upper": up, "alpha_bar": bar, "gap": up - bar,
            "regime": LOW_P if p <= p0 else HIGH_P, "p0": p0, "q": q, "g": float(g), "h": float(h),
        })
    return rows


def rows_to_csv(rows: Sequence[dict], header: Sequence[str] = GAP_CURVE_HEADER) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(header), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _fmt(row.get(key)) for key in header})
    return buf.getvalue()


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else value


def report_dict(report: BoundReport) -> dict:
    return asdict(report)
