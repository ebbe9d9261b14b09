"""Chi-square tests and distances used by the statistical checks.

The chi-square tail is computed from the regularized incomplete gamma
function implemented here, so the checks do not depend on scipy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, NamedTuple, Sequence

import numpy as np

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 10_000


def _series_P(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _contfrac_Q(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammainc_P(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _series_P(a, x)
    return 1.0 - _contfrac_Q(a, x)


def gammainc_Q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _series_P(a, x)
    return _contfrac_Q(a, x)


def chi2_sf(stat: float, dof: int) -> float:
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if stat <= 0:
        return 1.0
    return min(1.0, max(0.0, gammainc_Q(dof / 2.0, stat / 2.0)))


@dataclass(frozen=True)
class CountTable:
    labels: tuple
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.counts):
            raise ValueError("one count per label")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative")

    @property
    def total(self) -> int:
        return sum(self.counts)

    @classmethod
    def from_samples(cls, samples: Iterable[Hashable], labels: Sequence[Hashable]) -> CountTable:
        pos = {lab: i for i, lab in enumerate(labels)}
        counts = [0] * len(labels)
        for s in samples:
            counts[pos[s]] += 1
        return cls(tuple(labels), tuple(counts))


class ChiSquareResult(NamedTuple):
    stat: float
    dof: int
    pvalue: float
    pooled: tuple = ()


def _pool(observed: list[float], expected: list[float], min_expected: float):
    """Merge the smallest-expectation cells until every cell reaches ``min_expected``."""
    order = sorted(range(len(expected)), key=lambda i: (expected[i], i))
    k = 0
    acc = 0.0
    while k < len(order) and (expected[order[k]] < min_expected or (k and acc < min_expected)):
        acc += expected[order[k]]
        k += 1
    group, keep = sorted(order[:k]), sorted(order[k:])
    obs = [observed[i] for i in keep]
    exp = [expected[i] for i in keep]
    if group:
        obs.append(math.fsum(observed[i] for i in group))
        exp.append(acc)
    return obs, exp, tuple(group) if len(group) > 1 else ()


def chisq_gof(observed, expected_probs: Sequence[float], min_expected: float = 5.0,
              ddof: int = 0) -> ChiSquareResult:
    """Pearson goodness of fit; cells with expected count < ``min_expected`` are pooled.

    ``ddof`` is the number of parameters estimated from the same counts.
    """
    counts = list(observed.counts if isinstance(observed, CountTable) else observed)
    probs = [float(p) for p in expected_probs]
    if len(counts) != len(probs):
        raise ValueError("one expected probability per cell")
    if any(p < 0 for p in probs) or abs(math.fsum(probs) - 1.0) > 1e-9:
        raise ValueError("expected probabilities must be >= 0 and sum to 1")
    n = sum(counts)
    if n == 0:
        raise ValueError("empty table")
    exp = [p * n for p in probs]
    obs, exp, pooled = _pool([float(c) for c in counts], exp, min_expected)
    dof = len(obs) - 1 - ddof
    if len(obs) < 2 or dof < 1:
        raise ValueError("degenerate table: too few cells after pooling")
    if any(e == 0 and o > 0 for o, e in zip(obs, exp)):
        return ChiSquareResult(math.inf, dof, 0.0, pooled)
    stat = math.fsum((o - e) ** 2 / e for o, e in zip(obs, exp) if e > 0)
    return ChiSquareResult(stat, dof, chi2_sf(stat, dof), pooled)


def chisq_independence(joint) -> ChiSquareResult:
    """Pearson test of independence on an r x c contingency table."""
    table = np.asarray(joint, dtype=np.float64)
    if table.ndim != 2 or min(table.shape) < 2:
        raise ValueError("need at least a 2 x 2 table")
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    if (rows <= 0).any() or (cols <= 0).any():
        raise ValueError("degenerate margins: every row and column needs a positive sum")
    expected = np.outer(rows, cols) / table.sum()
    stat = float(math.fsum(((table - expected) ** 2 / expected).ravel()))
    dof = (table.shape[0] - 1) * (table.shape[1] - 1)
    return ChiSquareResult(stat, dof, chi2_sf(stat, dof))


def chisq_homogeneity(a: Sequence[int], b: Sequence[int], min_total: int = 10) -> ChiSquareResult:
    """Two-sample test that histograms ``a`` and ``b`` share one distribution.

    Columns with fewer than ``min_total`` combined counts are pooled into one.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    tot = a + b
    big = tot >= min_total
    cols_a = list(a[big])
    cols_b = list(b[big])
    if (~big).any() and tot[~big].sum() > 0:
        cols_a.append(a[~big].sum())
        cols_b.append(b[~big].sum())
    if len(cols_a) < 2:
        return ChiSquareResult(0.0, 0, 1.0)
    return chisq_independence([cols_a, cols_b])


def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    if len(p) != len(q):
        raise ValueError("length mismatch")
    return 0.5 * math.fsum(abs(float(x) - float(y)) for x, y in zip(p, q))
