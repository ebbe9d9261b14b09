"""Moments of the environment law from V, and CDF values from the moments.

Rearranging V_e(n) = E[nu_e nu^n] / E[nu^n] gives E[nu^(n + e)] = V_e(n) E[nu^n],
so the whole moment table telescopes from E[nu^0] = 1. CDF values then
follow from the multinomial (Bernstein) sum

    P(U_1 < a_1, ..., U_l < a_l)
        = lim_n  sum_{k : k_i / n < a_i}  n! / (k_0! ... k_l!)  E[(1 - sum U)^k_0  prod U_i^k_i].
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import DomainError, InsufficientTable, NoObservations, ImpossibleHistory
from .estimator import EstimatorState, empirical_oracle
from .lattice import GroupElement, JumpSet, MultiIndex, as_element

COMPLETE = "complete"
MOMENTS_ONLY = "moments-only"


@dataclass
class MomentTable:
    """Estimates of E[prod_g nu_g^{n_g}] keyed by multi-index."""

    jumps: JumpSet
    entries: dict[MultiIndex, float]
    source: str = "empirical"
    terminal: set[MultiIndex] = field(default_factory=set)
    truncated: list[MultiIndex] = field(default_factory=list)

    @property
    def max_total(self) -> int:
        return max((n.total for n in self.entries), default=0)

    def __getitem__(self, n) -> float:
        n = MultiIndex(n)
        try:
            return self.entries[n]
        except KeyError:
            raise InsufficientTable(str(n)) from None

    def __contains__(self, n) -> bool:
        return MultiIndex(n) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["multi_index", "value"])
        for n in sorted(self.entries, key=MultiIndex.sort_key):
            w.writerow([str(n), repr(self.entries[n])])
        return buf.getvalue()


def canonical_decrement(n: MultiIndex) -> GroupElement:
    """The lexicographically largest jump with a positive count."""
    return max(n)


def multi_indices(jumps: Sequence[GroupElement], max_total: int) -> list[MultiIndex]:
    """All multi-indices over ``jumps`` with total <= max_total, in (total, lexicographic) order."""
    jumps = list(jumps)
    out = []
    for total in range(max_total + 1):
        for combo in itertools.combinations_with_replacement(range(len(jumps)), total):
            out.append(MultiIndex((jumps[i], 1) for i in combo))
    return sorted(out, key=MultiIndex.sort_key)


def build_moment_table(V: Callable, histories: Iterable[MultiIndex], jumps_T: Iterable = (),
                       jumps: JumpSet | None = None, source: str = "empirical",
                       decrement: Callable[[MultiIndex], GroupElement] = canonical_decrement,
                       path: str = "canonical") -> MomentTable:
    """Telescope V into moments.

    ``histories`` are the multi-indices (over R) to fill. With
    ``path="canonical"`` each entry is extended from its predecessor
    n - e, e = ``decrement(n)``. With ``path="average"`` it is the mean of
    V_e(n - e) M(n - e) over every e in the support of n whose predecessor
    is available; for an exact V all these agree, for an estimated V the
    mean has a smaller variance. An entry with no usable predecessor is
    dropped and listed in ``truncated``. For each t in ``jumps_T`` the
    terminal moments E[nu^n nu_t] = V_t(n) M(n) are added; those are never
    extended.
    """
    if path not in ("canonical", "average"):
        raise ValueError(f"unknown path {path!r}")
    cache: dict[MultiIndex, object] = {}

    def v_at(n):
        if n not in cache:
            try:
                cache[n] = V(n)
            except (NoObservations, ImpossibleHistory, KeyError):
                cache[n] = None
        return cache[n]

    targets = sorted(set(MultiIndex(n) for n in histories) | {MultiIndex()}, key=MultiIndex.sort_key)
    entries = {MultiIndex(): 1.0}
    truncated = []
    for n in targets[1:]:
        steps = list(n) if path == "average" else [decrement(n)]
        values = []
        for e in steps:
            pred = n.minus(e)
            law = v_at(pred) if pred in entries else None
            if law is not None:
                values.append(law[e] * entries[pred])
        if not values:
            truncated.append(n)
            continue
        entries[n] = values[0] if len(values) == 1 else math.fsum(values) / len(values)
    terminal = set()
    for t in (as_element(t) for t in jumps_T):
        for n in [k for k in entries if k not in terminal]:
            law = v_at(n)
            if law is None:
                continue
            entries[n.plus(t)] = law[t] * entries[n]
            terminal.add(n.plus(t))
    if jumps is None:
        support = {e for n in entries for e in n}
        jumps = JumpSet(support) if support else JumpSet([GroupElement.zero(1)])
    return MomentTable(jumps, entries, source, terminal, truncated)


def _check_point(a: Sequence[float], l: int) -> list[Fraction]:
    if len(a) != l:
        raise DomainError(f"need {l} coordinates, got {len(a)}")
    out = []
    for x in a:
        if not 0.0 < float(x) <= 1.0:
            raise DomainError(f"grid coordinate {x} outside (0, 1]")
        out.append(Fraction(float(x)))
    return out


def _compositions(limits: list[int], degree: int):
    """k = (k_1..k_l) with 0 <= k_i <= limits[i] and sum k <= degree."""
    def rec(i, left):
        if i == len(limits):
            yield ()
            return
        for k in range(min(limits[i], left) + 1):
            for rest in rec(i + 1, left - k):
                yield (k,) + rest
    return rec(0, degree)


def _multinomial(n: int, parts: Sequence[int]) -> int:
    out = 1
    left = n
    for k in parts:
        out *= math.comb(left, k)
        left -= k
    return out


def cdf_bernstein(M: MomentTable, variables: Sequence, a: Sequence[float], degree: int,
                  complement=None) -> float:
    """Degree-``degree`` multinomial sum approximating P(nu_v < a_v for every variable v).

    With ``complement`` (a jump whose nu equals 1 - sum of the variables)
    the terms are read directly from the table. Without it, the powers of
    1 - sum U are expanded into moments of the variables alone; that
    alternating sum is evaluated in exact rational arithmetic but is
    ill-conditioned for noisy moments at high degree.
    """
    if degree < 1:
        raise DomainError("degree must be >= 1")
    variables = [as_element(v) for v in variables]
    l = len(variables)
    if l == 0:
        raise DomainError("need at least one variable")
    point = _check_point(a, l)
    limits = [min(degree, math.ceil(x * degree) - 1) for x in point]
    if any(k < 0 for k in limits):
        return 0.0
    if complement is not None:
        complement = as_element(complement)
        terms = []
        for ks in _compositions(limits, degree):
            k0 = degree - sum(ks)
            key = MultiIndex([(complement, k0)] + list(zip(variables, ks)))
            m = M[key]
            if m:
                terms.append(float(_multinomial(degree, (k0,) + ks)) * m)
        return math.fsum(terms)

    exact: dict[tuple, Fraction] = {}

    def moment(ks):
        if ks not in exact:
            exact[ks] = Fraction(M[MultiIndex(zip(variables, ks))])
        return exact[ks]

    total = Fraction(0)
    for ks in _compositions(limits, degree):
        k0 = degree - sum(ks)
        inner = Fraction(0)
        for js in _compositions([k0] * l, k0):
            coef = _multinomial(k0, (k0 - sum(js),) + js)
            term = coef * moment(tuple(k + j for k, j in zip(ks, js)))
            inner += -term if sum(js) % 2 else term
        total += _multinomial(degree, (k0,) + ks) * inner
    return float(total)


@dataclass
class CdfGrid:
    variables: tuple[GroupElement, ...]
    degree: int
    values: dict[tuple[float, ...], float]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"a_{i + 1}" for i in range(len(self.variables))] + ["cdf"])
        for pt in sorted(self.values):
            w.writerow([repr(x) for x in pt] + [repr(self.values[pt])])
        return buf.getvalue()

    def is_monotone(self, tol: float = 1e-12) -> bool:
        pts = sorted(self.values)
        for p in pts:
            for q in pts:
                if p != q and all(x <= y for x, y in zip(p, q)) and self.values[p] > self.values[q] + tol:
                    return False
        return True


@dataclass
class Reconstruction:
    verdict: str
    moments: MomentTable
    cdf: CdfGrid | None
    variables: tuple[GroupElement, ...]
    complement: GroupElement | None
    notes: list[str] = field(default_factory=list)
    degree: int | None = None


def default_grid(l: int, points: int = 9) -> list[tuple[float, ...]]:
    """Grid off the dyadic rationals: (i + 0.0137) / (points + 1) per axis."""
    axis = [round((i + 0.0137) / (points + 1), 6) for i in range(1, points + 1)]
    return [tuple(p) for p in itertools.product(axis, repeat=l)]


def choose_variables(R: Sequence, T: Sequence) -> tuple[list[GroupElement], GroupElement | None]:
    """CDF variables and the complement jump (if its powers are in the table)."""
    R = sorted(as_element(r) for r in R)
    T = sorted(as_element(t) for t in T)
    if not T:
        return R[1:], (R[0] if R else None)
    return R, None


def reconstruct_from_oracle(V: Callable, R: Sequence, T: Sequence, max_total: int, degree: int,
                            grid: Sequence[Sequence[float]] | None = None,
                            variables: Sequence | None = None, jumps: JumpSet | None = None,
                            source: str = "empirical", fit_degree: bool = False,
                            path: str = "canonical") -> Reconstruction:
    """Moment table and CDF grid from a reinforcement oracle.

    With ``fit_degree`` a degree the table cannot support is lowered to the
    largest one it can, and the change is noted; otherwise the missing
    moment is raised as ``InsufficientTable``.
    """
    R = tuple(sorted(as_element(r) for r in R))
    T = tuple(sorted(as_element(t) for t in T))
    table = build_moment_table(V, multi_indices(R, max_total), T, jumps=jumps, source=source, path=path)
    notes = []
    if table.truncated:
        notes.append(f"moment table truncated at {len(table.truncated)} multi-indices "
                     f"(first: {table.truncated[0]})")
    if len(T) > 1:
        notes.append("more than one non-returning jump: the environment law is not identifiable "
                     "in general; only the moment table is reported")
        return Reconstruction(MOMENTS_ONLY, table, None, (), None, notes)
    if variables is None:
        variables, complement = choose_variables(R, T)
    else:
        variables = [as_element(v) for v in variables]
        rest = [e for e in R if e not in variables]
        complement = rest[0] if (not T and len(rest) == 1) else None
    variables = tuple(variables)
    if not variables:
        notes.append("single reachable jump: the site law is a point mass")
        return Reconstruction(COMPLETE, table, None, (), complement, notes)
    if len(variables) > 2:
        raise DomainError(f"CDF grids are limited to 2 variables, got {len(variables)}")
    grid = list(grid) if grid is not None else default_grid(len(variables))

    def evaluate(n):
        return {tuple(float(x) for x in pt): cdf_bernstein(table, variables, pt, n, complement)
                for pt in grid}

    used = degree
    while True:
        try:
            values = evaluate(used)
            break
        except InsufficientTable as exc:
            if not fit_degree or used == 1:
                raise
            missing = exc
            used -= 1
    if used != degree:
        notes.append(f"degree lowered from {degree} to {used}: table lacks {missing.index}")
    return Reconstruction(COMPLETE, table, CdfGrid(variables, used, values), variables, complement,
                          notes, used)


def reconstruct_environment_law(state: EstimatorState, classification, max_total: int, degree: int,
                                grid: Sequence[Sequence[float]] | None = None, min_count: int = 30,
                                variables: Sequence | None = None, fit_degree: bool = False,
                                path: str = "average") -> Reconstruction:
    """Empirical V -> moment table -> CDF grid, with an identifiability verdict."""
    R, T = classification[0], classification[1]
    return reconstruct_from_oracle(empirical_oracle(state, min_count), R, T, max_total, degree, grid,
                                   variables, jumps=state.jumpset, fit_degree=fit_degree, path=path)
