import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import make_law
from rwre.environment import analytic_V_law, classify_R_T_analytic, law_from_spec, mixed_moment
from rwre.errors import DomainError, InsufficientTable
from rwre.lattice import GroupElement, JumpSet, MultiIndex
from rwre.reconstruction import (COMPLETE, MOMENTS_ONLY, MomentTable, build_moment_table,
                                 canonical_decrement, cdf_bernstein, choose_variables,
                                 default_grid, multi_indices, reconstruct_from_oracle)

P, M, P2, Z = GroupElement.of(1), GroupElement.of(-1), GroupElement.of(2), GroupElement.of(0)


def analytic_oracle(law):
    return lambda n: analytic_V_law(law, n)


def exact_table(law, max_total, jumps_T=()):
    R = classify_R_T_analytic(law.jumps).R
    return build_moment_table(analytic_oracle(law), multi_indices(R, max_total), jumps_T,
                              jumps=law.jumps, source="analytic")


def beta_binomial_cdf(a, n, alpha, beta):
    """Bernstein sum with exact Beta(alpha, beta) moments = P(BetaBinomial(n) < a n)."""
    k = math.ceil(a * n) - 1
    return float(stats.betabinom(n, alpha, beta).cdf(k)) if k >= 0 else 0.0


def test_constant_V_telescopes_to_powers():
    half = {P: 0.5, P2: 0.5}
    table = build_moment_table(lambda n: half, [MultiIndex({P: 1}), MultiIndex({P: 2})])
    assert table[{P: 2}] == 0.25 and table[MultiIndex()] == 1.0


def test_dirichlet_second_moment():
    table = exact_table(make_law("dirichlet21"), 2)
    assert table[{P: 2}] == pytest.approx(0.5, abs=1e-15)


def test_mixture_second_moment():
    table = exact_table(make_law("mixture"), 2)
    assert table[{P: 2}] == pytest.approx(0.41, abs=1e-15)


@pytest.mark.parametrize("name", ["mixture", "dirichlet21"])
def test_oracle_equality(name):
    law = make_law(name)
    table = exact_table(law, 6)
    assert len(table) == len(multi_indices(law.jumps, 6))
    for n, v in table.entries.items():
        assert v == pytest.approx(mixed_moment(law, n), abs=1e-10)


@pytest.mark.parametrize("name", ["mixture", "dirichlet21"])
def test_path_independence(name):
    law = make_law(name)
    targets = multi_indices(law.jumps, 6)
    ref = build_moment_table(analytic_oracle(law), targets)
    rng = random.Random(7)
    for _ in range(10):
        table = build_moment_table(analytic_oracle(law), targets,
                                   decrement=lambda n: rng.choice(list(n)))
        for n, v in table.entries.items():
            assert abs(v - ref.entries[n]) <= 1e-12


def test_average_path_agrees_with_exact_V():
    law = make_law("dirichlet21")
    targets = multi_indices(law.jumps, 6)
    a = build_moment_table(analytic_oracle(law), targets)
    b = build_moment_table(analytic_oracle(law), targets, path="average")
    assert all(abs(a.entries[n] - b.entries[n]) <= 1e-12 for n in a.entries)


def test_canonical_decrement_is_largest_jump():
    assert canonical_decrement(MultiIndex({M: 3, P: 1})) == P


def test_multi_indices_order():
    out = multi_indices([M, P], 2)
    assert [str(n) for n in out] == ["{}", "{[-1]:1}", "{[1]:1}", "{[-1]:1,[1]:1}", "{[-1]:2}", "{[1]:2}"]


def test_terminal_entries_for_one_non_returning_jump():
    law = law_from_spec([[0], [1]], {"kind": "dirichlet", "alphas": [2, 1]})
    table = exact_table(law, 3, jumps_T=[P])
    for k in range(4):
        n = MultiIndex({Z: k, P: 1})
        assert n in table.terminal
        assert table[n] == pytest.approx(mixed_moment(law, n), abs=1e-14)
    assert MultiIndex({Z: 1, P: 2}) not in table


def test_missing_V_truncates():
    def V(n):
        if n.total >= 2:
            raise KeyError(n)
        return {P: 0.5, M: 0.5}
    table = build_moment_table(V, multi_indices([M, P], 4))
    assert MultiIndex({P: 3}) in table.truncated and MultiIndex({P: 2}) in table
    with pytest.raises(InsufficientTable, match=r"\{\[1\]:3\}"):
        table[{P: 3}]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.2, 5.0), min_size=2, max_size=3), st.integers(1, 5))
def test_exact_tables_are_bounded_and_monotone(alphas, top):
    jumps = [[-1], [1], [2]][: len(alphas)]
    law = law_from_spec(jumps, {"kind": "dirichlet", "alphas": alphas})
    table = exact_table(law, top)
    assert table[MultiIndex()] == 1.0
    for n, v in table.entries.items():
        assert 0.0 <= v <= 1.0
        for e in law.jumps:
            up = n.plus(e)
            if up in table:
                assert table[up] <= v * (1 + 1e-12)


# -- Bernstein inversion --------------------------------------------------------------

def half_table(degree):
    # U = nu_{+1} = 0.5 exactly, complement nu_{-1} = 0.5
    law = law_from_spec([[1], [-1]], {"kind": "mixture", "atoms": [{"w": 1, "p": [0.5, 0.5]}]})
    return exact_table(law, degree)


@pytest.mark.parametrize("a, want", [(0.75, Fraction(11, 16)), (0.25, Fraction(1, 16))])
def test_footnote_sum_degree4(a, want):
    table = half_table(4)
    assert cdf_bernstein(table, [P], [a], 4, complement=M) == float(want)
    assert cdf_bernstein(table, [P], [a], 4) == float(want)


def test_two_atom_degree200():
    law = make_law("mixture")
    table = exact_table(law, 200)
    got = cdf_bernstein(table, [P], [0.5], 200, complement=M)
    assert abs(got - 0.5) <= 0.02
    oracle = 0.5 * stats.binom(200, 0.9).cdf(99) + 0.5 * stats.binom(200, 0.1).cdf(99)
    assert got == pytest.approx(oracle, abs=1e-12)


@pytest.mark.parametrize("degree", [10, 50, 60])
def test_beta_matches_beta_binomial(degree):
    table = exact_table(make_law("dirichlet21"), degree)
    for (a,) in default_grid(1):
        got = cdf_bernstein(table, [P], [a], degree, complement=M)
        assert got == pytest.approx(beta_binomial_cdf(a, degree, 2, 1), abs=1e-12)


def test_beta_error_shrinks_with_degree():
    table = exact_table(make_law("dirichlet21"), 200)
    grid = [a for (a,) in default_grid(1)]

    def sup_error(n):
        return max(abs(cdf_bernstein(table, [P], [a], n, complement=M) - a * a) for a in grid)

    e50, e100, e200 = sup_error(50), sup_error(100), sup_error(200)
    assert sup_error(60) <= 0.08
    assert e50 / e100 >= 1.3 and e100 / e200 >= 1.3
    assert e50 / e200 >= 1.3


def test_expansion_mode_for_one_non_returning_jump():
    # nu_0 ~ Beta(2, 1) with the jump to +1 never returning
    law = law_from_spec([[0], [1]], {"kind": "dirichlet", "alphas": [2, 1]})
    rec = reconstruct_from_oracle(analytic_oracle(law), [Z], [P], 20, 20, jumps=law.jumps)
    assert rec.verdict == COMPLETE and rec.complement is None and rec.variables == (Z,)
    for (a,), v in rec.cdf.values.items():
        assert v == pytest.approx(beta_binomial_cdf(a, 20, 2, 1), abs=1e-9)


def dirichlet_multinomial_cdf(a, n, alphas):
    """P(K_1 < a_1 n, K_2 < a_2 n) for K ~ DirichletMultinomial(n, alphas); alphas[0] is the complement."""
    A = sum(alphas)
    lim = [math.ceil(x * n) - 1 for x in a]
    total = 0.0
    for k1 in range(0, min(lim[0], n) + 1):
        for k2 in range(0, min(lim[1], n - k1) + 1):
            ks = (n - k1 - k2, k1, k2)
            lp = math.lgamma(n + 1) + math.lgamma(A) - math.lgamma(n + A)
            lp += sum(math.lgamma(k + al) - math.lgamma(k + 1) - math.lgamma(al) for k, al in zip(ks, alphas))
            total += math.exp(lp)
    return total


def test_two_variable_grid():
    alphas = [1.5, 2.0, 1.0]
    law = law_from_spec([[-1], [1], [2]], {"kind": "dirichlet", "alphas": alphas})
    grid = [(0.3137, 0.4137), (0.6137, 0.2137), (1.0, 1.0)]
    rec = reconstruct_from_oracle(analytic_oracle(law), law.jumps, [], 24, 24, grid=grid, jumps=law.jumps)
    assert rec.variables == (P, P2) and rec.complement == M
    for pt, v in rec.cdf.values.items():
        assert v == pytest.approx(dirichlet_multinomial_cdf(pt, 24, alphas), abs=1e-12)
    # the strict inequality drops k_i = n even at a_i = 1
    assert rec.cdf.values[(1.0, 1.0)] < 1.0


def test_default_grid_is_monotone_and_in_range():
    rec = reconstruct_from_oracle(analytic_oracle(make_law("mixture")), [M, P], [], 40, 40,
                                  jumps=make_law("mixture").jumps)
    assert rec.cdf.is_monotone()
    assert all(0.0 <= v <= 1.0 for v in rec.cdf.values.values())
    assert len(rec.cdf.values) == 9


def test_point_mass_is_a_step():
    law = law_from_spec([[1], [-1]], {"kind": "mixture", "atoms": [{"w": 1, "p": [0.3, 0.7]}]})
    rec = reconstruct_from_oracle(analytic_oracle(law), [M, P], [], 200, 200,
                                  grid=[(0.2,), (0.4,)], jumps=law.jumps)
    assert rec.cdf.values[(0.2,)] <= 0.01 and rec.cdf.values[(0.4,)] >= 0.99


def test_two_non_returning_jumps_give_moments_only():
    law = make_law("fixed12")
    cls = classify_R_T_analytic(law.jumps)
    rec = reconstruct_from_oracle(analytic_oracle(law), cls.R, cls.T, 4, 4, jumps=law.jumps)
    assert rec.verdict == MOMENTS_ONLY and rec.cdf is None
    assert rec.moments[MultiIndex()] == 1.0 and rec.moments[{P: 1}] == 0.5
    assert any("not identifiable" in note for note in rec.notes)


def test_single_returning_jump_is_point_mass():
    # only the stay jump returns and nothing leaves: nu_0 = 1
    law = law_from_spec([[0]], {"kind": "mixture", "atoms": [{"w": 1, "p": [1.0]}]})
    rec = reconstruct_from_oracle(analytic_oracle(law), [Z], [], 3, 3, jumps=law.jumps)
    assert rec.verdict == COMPLETE and rec.cdf is None and "point mass" in rec.notes[0]


def test_choose_variables():
    assert choose_variables([P, M], []) == ([P], M)
    assert choose_variables([Z], [P]) == ([Z], None)


@pytest.mark.parametrize("a", [[0.0], [1.5], [-0.1]])
def test_domain_errors(a):
    with pytest.raises(DomainError):
        cdf_bernstein(half_table(4), [P], a, 4, complement=M)


def test_domain_error_on_arity_and_degree():
    with pytest.raises(DomainError):
        cdf_bernstein(half_table(4), [P], [0.5, 0.5], 4, complement=M)
    with pytest.raises(DomainError):
        cdf_bernstein(half_table(4), [P], [0.5], 0, complement=M)


def test_insufficient_table_names_the_index():
    with pytest.raises(InsufficientTable, match=r"\[-1\]:5"):
        cdf_bernstein(half_table(4), [P], [0.9], 5, complement=M)


def test_fit_degree_lowers_and_notes():
    law = make_law("dirichlet21")

    def V(n):
        if n.total >= 8:
            raise KeyError(n)
        return analytic_V_law(law, n)

    with pytest.raises(InsufficientTable):
        reconstruct_from_oracle(V, [M, P], [], 20, 20, jumps=law.jumps)
    rec = reconstruct_from_oracle(V, [M, P], [], 20, 20, jumps=law.jumps, fit_degree=True)
    assert rec.degree == 8 and any("degree lowered from 20 to 8" in note for note in rec.notes)


def test_csv_formats():
    table = half_table(1)
    assert table.to_csv() == 'multi_index,value\n{},1.0\n{[-1]:1},0.5\n{[1]:1},0.5\n'
    rec = reconstruct_from_oracle(analytic_oracle(make_law("dirichlet21")), [M, P], [], 4, 4,
                                  grid=[(0.5,), (0.25,)], jumps=make_law("dirichlet21").jumps)
    lines = rec.cdf.to_csv().splitlines()
    assert lines[0] == "a_1,cdf" and lines[1].startswith("0.25,") and len(lines) == 3


def test_moment_table_is_a_mapping_by_multi_index():
    t = MomentTable(JumpSet([P, M]), {MultiIndex(): 1.0})
    assert MultiIndex() in t and {P: 1} not in t and len(t) == 1 and t.max_total == 0


def test_default_grid_avoids_dyadics():
    for pt in default_grid(2):
        for x in pt:
            assert all(Fraction(x).denominator != 2**k for k in range(0, 8))
    assert len(default_grid(2)) == 81 and list(itertools.chain(*default_grid(1)))[0] == 0.10137
