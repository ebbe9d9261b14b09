"""Two walks on Z with jumps in {1, 2}, and one with jumps in {0, 1, 2}, whose
environment laws are (respectively are not) identifiable from one path."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import thread_map
from .environment import MixtureLaw
from .estimator import classify_R_T_empirical, ingest, same_site_successions
from .lattice import GroupElement, JumpSet, MultiIndex
from .seeding import substream_seed
from .statlab import chisq_gof, chisq_homogeneity, tv_distance
from .walker import Trajectory, simulate_quenched

FIXTURES = ("example1", "example2")

ONE_TWO = JumpSet([GroupElement.of(1), GroupElement.of(2)])
ZERO_ONE_TWO = JumpSet([GroupElement.of(0), GroupElement.of(1), GroupElement.of(2)])

ALPHA = 0.001


def example1_laws() -> tuple[MixtureLaw, MixtureLaw]:
    """Fixed (1/2, 1/2) at every site, and a fair coin between always-1 and always-2."""
    fixed = MixtureLaw(ONE_TWO, (1.0,), ((0.5, 0.5),))
    coin = MixtureLaw(ONE_TWO, (0.5, 0.5), ((1.0, 0.0), (0.0, 1.0)))
    return fixed, coin


def example2_law() -> MixtureLaw:
    """Half the sites: stay or step 1 with probability 1/2 each; the rest: step 2."""
    return MixtureLaw(ZERO_ONE_TWO, (0.5, 0.5), ((0.5, 0.5, 0.0), (0.0, 0.0, 1.0)))


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class FixtureResult:
    name: str
    steps: int
    seed: int
    checks: list[Check] = field(default_factory=list)
    estimates: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, passed, detail: str) -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def to_dict(self) -> dict:
        return {
            "fixture": self.name,
            "steps": self.steps,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "estimates": self.estimates,
        }


def _names(elems) -> list[str]:
    return [str(e) for e in elems]


def run_example1(steps: int = 10**6, seed: int = 0) -> FixtureResult:
    res = FixtureResult("example1", steps, seed)
    laws = example1_laws()
    seeds = [substream_seed(seed, "example1-fixed"), substream_seed(seed, "example1-coin")]
    trajs = thread_map(lambda pair: simulate_quenched(pair[0], pair[1], steps), list(zip(laws, seeds)))

    counts = []
    for label, traj in zip(("fixed", "coin"), trajs):
        cls = classify_R_T_empirical(traj)
        res.check(f"{label}: R-hat empty, T-hat = {{1,2}}",
                  not cls.R and set(cls.T) == set(ONE_TWO),
                  f"R-hat={_names(cls.R)} T-hat={_names(cls.T)}")
        stream = ingest(traj).stream_index(MultiIndex())
        c = np.bincount(stream, minlength=len(ONE_TWO))
        counts.append(c)
        res.estimates[label] = {
            "V_empty": {str(e): float(k) / max(1, int(c.sum())) for e, k in zip(ONE_TWO, c)},
            "count": int(c.sum()),
        }
    hom = chisq_homogeneity(counts[0], counts[1])
    res.check("V-hat at the empty history agrees (chi-square)", hom.pvalue >= ALPHA,
              f"stat={hom.stat:.4f} dof={hom.dof} p={hom.pvalue:.4g}")
    tv = tv_distance(*(c / max(1, c.sum()) for c in counts))
    res.check("TV distance of first-step laws <= 0.01", tv <= 0.01, f"tv={tv:.5f}")
    res.estimates["tv"] = tv
    res.estimates["chisq"] = {"stat": hom.stat, "dof": hom.dof, "pvalue": hom.pvalue}
    return res


def site_runs(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Per departed site with a nonzero exit: the number of 0-jumps and the exit jump index.

    Assumes every nonzero jump leaves the site for good, as it does when all
    jumps are nonnegative on Z.
    """
    sid, n_sites = traj.site_ids()
    dep = sid[:-1]
    zero = traj.jumpset.index(GroupElement.zero(traj.dim))
    jumps = traj.index
    zeros = np.bincount(dep, weights=(jumps == zero), minlength=n_sites).astype(np.int64)
    exit_jump = np.full(n_sites, -1, dtype=np.int64)
    moving = jumps != zero
    exit_jump[dep[moving]] = jumps[moving]
    done = exit_jump >= 0
    return zeros[done], exit_jump[done]


def _geometric_table(k: np.ndarray, a: float) -> tuple[list[int], list[float]]:
    """Observed counts of k = 0, 1, ..., and P(K = k) = a^k (1 - a), with an open tail cell."""
    top = int(k.max()) if len(k) else 0
    obs = np.bincount(k, minlength=top + 2)[: top + 1].tolist()
    probs = [a**i * (1 - a) for i in range(top + 1)]
    obs.append(0)
    probs.append(a ** (top + 1))
    return obs, probs


def _safe_test(run):
    """A chi-square result, or None when the sample is too small to test."""
    try:
        return run()
    except ValueError:
        return None


def _describe(test) -> str:
    if test is None:
        return "too few observations to test"
    return f"stat={test.stat:.3f} dof={test.dof} p={test.pvalue:.4g}"


def run_example2(steps: int = 10**6, seed: int = 0) -> FixtureResult:
    res = FixtureResult("example2", steps, seed)
    traj = simulate_quenched(example2_law(), substream_seed(seed, "example2"), steps)
    js = ZERO_ONE_TWO
    zero, one, two = (js.index(GroupElement.of(i)) for i in (0, 1, 2))

    cls = classify_R_T_empirical(traj)
    res.check("R-hat = {0}, T-hat = {1,2}",
              _names(cls.R) == ["[0]"] and set(cls.T) == {js[one], js[two]},
              f"R-hat={_names(cls.R)} T-hat={_names(cls.T)}")

    succ = same_site_successions(traj)
    zero_two = int(succ[zero, two])
    res.check("no 0-jump is followed by a 2-jump from the same site", zero_two == 0,
              f"0->2 successions={zero_two}")

    k, exits = site_runs(traj)
    k1 = k[exits == one]
    n1, n2 = len(k1), int((exits == two).sum())
    k2_zeros = int(k[exits == two].sum())
    res.check("sites left by a 2-jump never stay first", k2_zeros == 0, f"0-jumps there={k2_zeros}")

    # geometric number of stays at sites that can stay; MLE a = sum K / (sum K + #sites)
    a_hat = float(k1.sum()) / float(k1.sum() + n1) if n1 else float("nan")
    gof = _safe_test(lambda: chisq_gof(*_geometric_table(k1, a_hat), ddof=1)) if n1 else None
    res.check("stays per site are geometric (chi-square)", gof is not None and gof.pvalue >= ALPHA,
              f"a-hat={a_hat:.5f} " + _describe(gof))

    # the sites that stayed at least once fix a on their own; the share of
    # staying-capable sites that left at once must then be 1 - a
    stayed = k1[k1 >= 1]
    a_stayed = float((stayed - 1).sum()) / float((stayed - 1).sum() + len(stayed)) if len(stayed) else float("nan")
    n_left_at_once = int((k1 == 0).sum())
    ok = len(stayed) > 0 and 0.0 < a_stayed < 1.0
    predicted = len(stayed) * (1 - a_stayed) / a_stayed if ok else float("nan")
    prop = _safe_test(lambda: chisq_gof([n_left_at_once, len(stayed)], [1 - a_stayed, a_stayed])) if ok else None
    res.check("immediate 1-exits match the geometric prediction", prop is not None and prop.pvalue >= ALPHA,
              f"observed={n_left_at_once} predicted={predicted:.1f} " + _describe(prop))

    w1 = n1 / (n1 + n2) if n1 + n2 else float("nan")
    w2 = 1.0 - w1
    res.check("a-hat = 0.5 +- 0.02", abs(a_hat - 0.5) <= 0.02, f"a-hat={a_hat:.5f}")
    res.check("weights = 0.5 +- 0.03", abs(w1 - 0.5) <= 0.03 and abs(w2 - 0.5) <= 0.03,
              f"w=({w1:.5f}, {w2:.5f})")
    res.estimates = {
        "a": a_hat,
        "weights": [w1, w2],
        "components": [
            {"w": w1, "p": {"[0]": a_hat, "[1]": 1 - a_hat, "[2]": 0.0}},
            {"w": w2, "p": {"[0]": 0.0, "[1]": 0.0, "[2]": 1.0}},
        ],
        "sites": {"one_exit": n1, "two_exit": n2},
        "zero_two_successions": zero_two,
        "geometric_gof": None if gof is None else {"stat": gof.stat, "dof": gof.dof, "pvalue": gof.pvalue},
        "immediate_exits": {"observed": n_left_at_once, "predicted": predicted,
                            "pvalue": None if prop is None else prop.pvalue},
    }
    return res


def run_fixture(name: str, steps: int = 10**6, seed: int = 0) -> FixtureResult:
    if name == "example1":
        return run_example1(steps, seed)
    if name == "example2":
        return run_example2(steps, seed)
    raise ValueError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
