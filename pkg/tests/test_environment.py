import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_law
from rwre import _pykernels
from rwre._backend import available, get
from rwre.environment import (
    DirichletLaw,
    Environment,
    MixtureLaw,
    SiteLaw,
    analytic_V,
    analytic_V_law,
    classify_R_T_analytic,
    law_from_spec,
    mixed_moment,
    sample_site_law,
)
from rwre.errors import ConfigError, ImpossibleHistory
from rwre.lattice import GroupElement, JumpSet, MultiIndex

G = GroupElement.of
P, M = G(1), G(-1)


def rising(a, k):
    out = Fraction(1)
    for i in range(k):
        out *= a + i
    return out


def dirichlet_moment_exact(alphas, counts):
    num = Fraction(1)
    for a, k in zip(alphas, counts):
        num *= rising(Fraction(a), k)
    return num / rising(Fraction(sum(alphas)), sum(counts))


def test_site_law_validation():
    js = JumpSet([P, M])
    with pytest.raises(ValueError):
        SiteLaw(js, (0.5, 0.6))
    with pytest.raises(ValueError):
        SiteLaw(js, (1.5, -0.5))
    law = SiteLaw.from_mapping(js, {"[1]": 1.0})
    assert law[P] == 1.0 and law[M] == 0.0 and law[G(5)] == 0.0


def test_degenerate_law_sample():
    law = law_from_spec([[1]], {"kind": "mixture", "atoms": [{"w": 1, "p": [1]}]})
    env = Environment(law, 17)
    for x in range(-3, 4):
        assert dict(sample_site_law(env, G(x))) == {P: 1.0}


def test_sample_is_deterministic(backend):
    law = make_law("dirichlet21")
    a, b = Environment(law, 99, backend), Environment(law, 99, backend)
    for x in [G(0), G(7), G(-123456789)]:
        assert sample_site_law(a, x) == sample_site_law(a, x) == sample_site_law(b, x)
    assert sample_site_law(a, G(0)) != sample_site_law(Environment(law, 100, backend), G(0))


def test_coin_tossed_atom_frequency():
    coin = law_from_spec([[1], [2]], {"kind": "mixture",
                                     "atoms": [{"w": 0.5, "p": [1, 0]}, {"w": 0.5, "p": [0, 1]}]})
    env = Environment(coin, 2024)
    draws = env.site_matrix([G(x) for x in range(10_000)])
    assert set(np.unique(draws)) <= {0.0, 1.0}
    assert abs(draws[:, 0].mean() - 0.5) <= 0.02


@pytest.mark.skipif(len(available()) < 2, reason="compiled kernels not built")
def test_site_draws_identical_across_backends():
    for name in ["mixture", "dirichlet21"]:
        law = make_law(name)
        small = DirichletLaw(JumpSet([M, G(0), P]), (0.3, 0.7, 2.5))
        for lw in (law, small):
            kl = lw.kernel_law()
            for x in range(-50, 50):
                a = get("cython").site_law(*kl, 5, (x,))
                b = get("python").site_law(*kl, 5, (x,))
                assert list(a[0]) == list(b[0]) and a[1] == b[1]


def test_mixed_moment_examples():
    fixed = make_law("fixed12")
    assert mixed_moment(fixed, MultiIndex({P: 3})) == pytest.approx(0.125, abs=1e-15)
    assert mixed_moment(make_law("mixture"), MultiIndex({P: 2})) == pytest.approx(0.41, abs=1e-15)
    assert mixed_moment(make_law("dirichlet21"), MultiIndex({P: 2})) == pytest.approx(0.5, abs=1e-15)
    assert mixed_moment(fixed, MultiIndex({M: 1})) == 0.0
    assert mixed_moment(fixed, MultiIndex()) == 1.0


@given(st.integers(0, 12), st.integers(0, 12))
def test_dirichlet_moment_matches_rising_factorials(a, b):
    law = make_law("dirichlet21")
    exact = dirichlet_moment_exact([2, 1], [a, b])
    assert mixed_moment(law, MultiIndex({P: a, M: b})) == pytest.approx(float(exact), rel=1e-12)


def test_analytic_V_examples():
    assert analytic_V(make_law("fixed12"), MultiIndex({G(2): 4}), P) == pytest.approx(0.5)
    mix = make_law("mixture")
    assert analytic_V(mix, MultiIndex(), P) == pytest.approx(0.5)
    assert analytic_V(mix, MultiIndex({P: 1}), P) == pytest.approx(0.82)
    d = make_law("dirichlet21")
    assert analytic_V(d, MultiIndex(), P) == pytest.approx(2 / 3)
    assert analytic_V(d, MultiIndex({P: 1}), P) == pytest.approx(3 / 4)


def test_impossible_history():
    coin = law_from_spec([[1], [2]], {"kind": "mixture",
                                     "atoms": [{"w": 0.5, "p": [1, 0]}, {"w": 0.5, "p": [0, 1]}]})
    with pytest.raises(ImpossibleHistory):
        analytic_V(coin, MultiIndex({P: 1, G(2): 1}), P)
    with pytest.raises(ImpossibleHistory):
        analytic_V_law(coin, MultiIndex({P: 1, G(2): 1}))


histories = st.dictionaries(st.sampled_from([P, M]), st.integers(0, 8)).map(MultiIndex)


@given(histories)
def test_V_sums_to_one(n):
    for name in ["mixture", "dirichlet21"]:
        law = make_law(name)
        assert math.fsum(analytic_V(law, n, e) for e in law.jumps) == pytest.approx(1.0, abs=1e-12)


@given(histories, st.sampled_from([P, M]))
def test_dirichlet_V_closed_form(n, e):
    law = make_law("dirichlet21")
    alpha = {P: 2, M: 1}
    expected = Fraction(alpha[e] + n[e], 3 + n.total)
    assert analytic_V(law, n, e) == pytest.approx(float(expected), rel=1e-12)


@pytest.mark.slow
@settings(max_examples=60)
@given(st.integers(0, 6), st.integers(0, 6))
def test_V_matches_moment_ratio(a, b):
    n = MultiIndex({P: a, M: b})
    for name in ("mixture", "dirichlet21"):
        law = make_law(name)
        for e in law.jumps:
            ratio = mixed_moment(law, n.plus(e)) / mixed_moment(law, n)
            assert analytic_V(law, n, e) == pytest.approx(ratio, rel=1e-12)


@pytest.mark.parametrize("name", ["mixture", "dirichlet21"])
def test_V_finite_at_high_degree(name):
    law = make_law(name)
    n = MultiIndex({P: 788, M: 384})
    assert mixed_moment(law, n) < 1e-300
    v = analytic_V_law(law, n)
    assert math.isclose(math.fsum(v.probs), 1.0) and all(0 < p < 1 for p in v.probs)
    if name == "mixture":
        assert v[P] == pytest.approx(0.9, abs=1e-12)
    else:
        assert v[P] == pytest.approx((2 + 788) / (3 + 1172), rel=1e-14)


def test_moments_match_monte_carlo():
    rng = np.random.default_rng(11)
    for name in ["mixture", "dirichlet21"]:
        law = make_law(name)
        draws = Environment(law, 3).site_matrix([G(x) for x in range(10**6)])
        for _ in range(20):
            total = int(rng.integers(1, 5))
            k = int(rng.integers(0, total + 1))
            n = MultiIndex({P: k, M: total - k})
            vals = np.prod([draws[:, law.jumps.index(g)] ** c for g, c in n.items()], axis=0)
            se = vals.std(ddof=1) / math.sqrt(len(vals))
            assert abs(vals.mean() - mixed_moment(law, n)) <= 3 * se + 1e-12, (name, n)


@pytest.mark.parametrize("jumps, R, T", [
    ([[1], [-1]], ["[-1]", "[1]"], []),
    ([[1], [2]], [], ["[1]", "[2]"]),
    ([[0], [1], [2]], ["[0]"], ["[1]", "[2]"]),
    ([[2], [-3]], ["[-3]", "[2]"], []),
    ([[1, 0], [0, 1], [-1, -1]], ["[-1,-1]", "[0,1]", "[1,0]"], []),
    ([[1, 0], [-1, 0], [0, 1]], ["[-1,0]", "[1,0]"], ["[0,1]"]),
])
def test_classify_analytic(jumps, R, T):
    cls = classify_R_T_analytic([GroupElement(tuple(j)) for j in jumps])
    assert [str(r) for r in cls.R] == R
    assert [str(t) for t in cls.T] == T
    assert cls.saturated


def test_classify_monotone_in_bound():
    E = [G(5), G(-3)]
    previous = set()
    for b in range(1, 12):
        R = set(classify_R_T_analytic(E, b).R)
        assert previous <= R
        previous = R
    assert previous == {G(5), G(-3)}
    assert classify_R_T_analytic(E, 1).R == ()


def test_law_spec_alignment_and_errors():
    law = law_from_spec([[1], [-1]], {"kind": "dirichlet", "alphas": [2, 1]})
    assert dict(zip(law.jumps, law.alphas)) == {P: 2.0, M: 1.0}
    with pytest.raises(ConfigError):
        law_from_spec([[1], [-1]], {"kind": "dirichlet", "alphas": [2]})
    with pytest.raises(ValueError):
        MixtureLaw(JumpSet([P, M]), (0.5, 0.6), ((1.0, 0.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        DirichletLaw(JumpSet([P, M]), (0.0, 1.0))
    with pytest.raises(ConfigError):
        law_from_spec([[1]], {"kind": "beta"})
