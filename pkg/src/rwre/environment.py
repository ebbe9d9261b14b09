"""Site-environment laws, seeded iid environments and exact mixed moments.

Two families are supported because both have closed-form mixed moments
E[prod_g nu_g^{n_g}]: finite mixtures of fixed site laws, and Dirichlet
laws. The exact moments give the reinforcement function of the annealed
walk, which every statistical test downstream uses as its oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import _backend
from ._pykernels import DIRICHLET, MIXTURE, cumulate
from .errors import ConfigError, ImpossibleHistory
from .lattice import GroupElement, JumpSet, MultiIndex, UnorderedHistory, as_element

__all__ = [
    "SiteLaw", "EnvironmentLaw", "MixtureLaw", "DirichletLaw", "Environment",
    "MultiIndex", "UnorderedHistory", "sample_site_law", "mixed_moment", "analytic_V",
    "analytic_V_law", "classify_R_T_analytic", "RTClassification", "law_from_spec",
]

SUM_TOL = 1e-12


@dataclass(frozen=True)
class SiteLaw(Mapping):
    """Transition probabilities out of one site, aligned with ``jumps``."""

    jumps: JumpSet
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.probs) != len(self.jumps):
            raise ConfigError(f"{len(self.probs)} probabilities for {len(self.jumps)} jumps")
        if any(p < 0 or p > 1 + SUM_TOL for p in self.probs):
            raise ConfigError(f"probabilities outside [0, 1]: {self.probs}")
        if abs(math.fsum(self.probs) - 1.0) > SUM_TOL:
            raise ConfigError(f"probabilities sum to {math.fsum(self.probs)!r}, not 1")

    @classmethod
    def from_mapping(cls, jumps: JumpSet, probs: Mapping) -> SiteLaw:
        dense = [0.0] * len(jumps)
        for e, p in probs.items():
            dense[jumps.index(as_element(e))] = float(p)
        return cls(jumps, tuple(dense))

    def __getitem__(self, e) -> float:
        e = as_element(e)
        return self.probs[self.jumps.index(e)] if e in self.jumps else 0.0

    def __iter__(self):
        return iter(self.jumps)

    def __len__(self) -> int:
        return len(self.jumps)

    def cumulative(self) -> list[float]:
        return cumulate(self.probs)

    def __str__(self) -> str:
        return "{" + ",".join(f"{e}:{p:.6g}" for e, p in zip(self.jumps, self.probs)) + "}"


class EnvironmentLaw:
    """Distribution of the environment at one site."""

    kind: str
    jumps: JumpSet

    def support(self) -> tuple[GroupElement, ...]:
        """Jumps g with P(nu_g > 0) > 0."""
        raise NotImplementedError

    def moment(self, n: MultiIndex) -> float:
        raise NotImplementedError

    def reinforcement(self, n: MultiIndex) -> tuple[float, ...] | None:
        """E[nu_e nu^n] / E[nu^n] for every jump e; None when E[nu^n] = 0."""
        den = self.moment(n)
        if den <= 0.0:
            return None
        return tuple(self.moment(n.plus(e)) / den for e in self.jumps)

    def kernel_law(self) -> tuple:
        raise NotImplementedError

    def to_spec(self, order: Sequence[GroupElement] | None = None) -> dict:
        raise NotImplementedError

    def mean(self) -> dict[GroupElement, float]:
        return {e: self.moment(MultiIndex({e: 1})) for e in self.jumps}


@dataclass(frozen=True)
class MixtureLaw(EnvironmentLaw):
    """Finite mixture: with probability ``weights[k]`` the site law is ``atoms[k]``."""

    jumps: JumpSet
    weights: tuple[float, ...]
    atoms: tuple[tuple[float, ...], ...]
    kind: str = field(default="mixture", init=False)

    def __post_init__(self):
        if not self.atoms or len(self.weights) != len(self.atoms):
            raise ConfigError("mixture needs one weight per atom")
        if any(w < 0 for w in self.weights) or abs(math.fsum(self.weights) - 1.0) > SUM_TOL:
            raise ConfigError(f"mixture weights must be >= 0 and sum to 1: {self.weights}")
        for atom in self.atoms:
            SiteLaw(self.jumps, tuple(atom))

    def support(self):
        return tuple(e for j, e in enumerate(self.jumps)
                     if any(w > 0 and atom[j] > 0 for w, atom in zip(self.weights, self.atoms)))

    def moment(self, n: MultiIndex) -> float:
        dense = _dense_or_none(self.jumps, n)
        if dense is None:
            return 0.0
        terms = []
        for w, atom in zip(self.weights, self.atoms):
            t = w
            for p, k in zip(atom, dense):
                if k:
                    t *= p ** k
            terms.append(t)
        return math.fsum(terms)

    def reinforcement(self, n: MultiIndex) -> tuple[float, ...] | None:
        # posterior atom weights in log space; the raw moments underflow at high degree
        dense = _dense_or_none(self.jumps, n)
        if dense is None:
            return None
        logs, kept = [], []
        for w, atom in zip(self.weights, self.atoms):
            if w <= 0 or any(k and p <= 0 for p, k in zip(atom, dense)):
                continue
            logs.append(math.log(w) + math.fsum(k * math.log(p) for p, k in zip(atom, dense) if k))
            kept.append(atom)
        if not kept:
            return None
        top = max(logs)
        post = [math.exp(x - top) for x in logs]
        z = math.fsum(post)
        return tuple(math.fsum(q * atom[j] for q, atom in zip(post, kept)) / z
                     for j in range(len(self.jumps)))

    def kernel_law(self):
        atoms = np.array(self.atoms, dtype=np.float64)
        return (MIXTURE, np.array(cumulate(self.weights)), atoms, np.zeros(0))

    def to_spec(self, order=None):
        order = list(order or self.jumps)
        pos = [self.jumps.index(e) for e in order]
        return {"kind": "mixture",
                "atoms": [{"w": w, "p": [atom[i] for i in pos]} for w, atom in zip(self.weights, self.atoms)]}


@dataclass(frozen=True)
class DirichletLaw(EnvironmentLaw):
    """Dirichlet(alphas) site laws; alphas aligned with ``jumps``."""

    jumps: JumpSet
    alphas: tuple[float, ...]
    kind: str = field(default="dirichlet", init=False)

    def __post_init__(self):
        if len(self.alphas) != len(self.jumps):
            raise ConfigError(f"{len(self.alphas)} alphas for {len(self.jumps)} jumps")
        if any(not a > 0 for a in self.alphas):
            raise ConfigError(f"dirichlet alphas must be strictly positive: {self.alphas}")

    def support(self):
        return tuple(self.jumps)

    def moment(self, n: MultiIndex) -> float:
        # prod_g (a_g)^{(n_g)} / (A)^{(N)}: N numerator and N denominator
        # factors, multiplied pairwise so nothing overflows at high degree
        dense = _dense_or_none(self.jumps, n)
        if dense is None:
            return 0.0
        num = [a + i for a, k in zip(self.alphas, dense) for i in range(k)]
        total = math.fsum(self.alphas)
        out = 1.0
        for i, x in enumerate(num):
            out *= x / (total + i)
        return out

    def reinforcement(self, n: MultiIndex) -> tuple[float, ...] | None:
        dense = _dense_or_none(self.jumps, n)
        if dense is None:
            return None
        total = math.fsum(self.alphas) + sum(dense)
        return tuple((a + k) / total for a, k in zip(self.alphas, dense))

    def kernel_law(self):
        m = len(self.jumps)
        return (DIRICHLET, np.ones(1), np.zeros((0, m)), np.array(self.alphas, dtype=np.float64))

    def to_spec(self, order=None):
        order = list(order or self.jumps)
        return {"kind": "dirichlet", "alphas": [self.alphas[self.jumps.index(e)] for e in order]}


def _dense_or_none(jumps: JumpSet, n: MultiIndex):
    for e in n:
        if e not in jumps:
            return None
    return n.dense(jumps)


def law_from_spec(jumps_spec: Sequence, law_spec: Mapping) -> EnvironmentLaw:
    """Build a law from the config form; probabilities/alphas follow ``jumps_spec`` order."""
    given = [as_element(j) for j in jumps_spec]
    jumps = JumpSet(given)
    pos = [given.index(e) for e in jumps]
    kind = law_spec.get("kind")
    if kind == "mixture":
        weights, atoms = [], []
        for atom in law_spec["atoms"]:
            p = list(atom["p"])
            if len(p) != len(given):
                raise ConfigError(f"atom has {len(p)} probabilities for {len(given)} jumps")
            weights.append(float(atom["w"]))
            atoms.append(tuple(float(p[i]) for i in pos))
        return MixtureLaw(jumps, tuple(weights), tuple(atoms))
    if kind == "dirichlet":
        alphas = list(law_spec["alphas"])
        if len(alphas) != len(given):
            raise ConfigError(f"{len(alphas)} alphas for {len(given)} jumps")
        return DirichletLaw(jumps, tuple(float(alphas[i]) for i in pos))
    raise ConfigError(f"unknown law kind {kind!r}")


class Environment:
    """An iid environment, materialized lazily; nu(x) depends only on (master_seed, x)."""

    def __init__(self, law: EnvironmentLaw, master_seed: int, backend: str | None = None):
        self.law = law
        self.master_seed = int(master_seed)
        self._kernels = _backend.get(backend)
        self._kl = law.kernel_law()
        self.realized: dict[GroupElement, SiteLaw] = {}

    def site_law(self, site) -> SiteLaw:
        site = as_element(site)
        got = self.realized.get(site)
        if got is None:
            probs, _ = self._kernels.site_law(*self._kl, self.master_seed, site.coords)
            got = SiteLaw(self.law.jumps, tuple(probs))
            self.realized.setdefault(site, got)
        return got

    def site_matrix(self, sites: Sequence) -> np.ndarray:
        """(len(sites), m) array of site laws; bypasses the cache."""
        out = np.empty((len(sites), len(self.law.jumps)))
        for i, site in enumerate(sites):
            coords = as_element(site).coords
            out[i] = self._kernels.site_law(*self._kl, self.master_seed, coords)[0]
        return out


def sample_site_law(env: Environment, site) -> SiteLaw:
    return env.site_law(site)


def mixed_moment(law: EnvironmentLaw, n: MultiIndex) -> float:
    """E[prod_g nu_g^{n_g}]; zero when n charges a jump outside the law's jumps."""
    return law.moment(MultiIndex(n))


def analytic_V(law: EnvironmentLaw, n: MultiIndex, e) -> float:
    """Reinforcement function of the annealed walk: E[nu_e nu^n] / E[nu^n]."""
    n = MultiIndex(n)
    e = as_element(e)
    probs = law.reinforcement(n)
    if probs is None:
        raise ImpossibleHistory(n)
    return probs[law.jumps.index(e)] if e in law.jumps else 0.0


def analytic_V_law(law: EnvironmentLaw, n: MultiIndex) -> SiteLaw:
    """All of V(n) as a SiteLaw; usable directly as a reinforcement oracle."""
    n = MultiIndex(n)
    probs = law.reinforcement(n)
    if probs is None:
        raise ImpossibleHistory(n)
    s = math.fsum(probs)
    return SiteLaw(law.jumps, tuple(p / s for p in probs))


class RTClassification(NamedTuple):
    R: tuple[GroupElement, ...]
    T: tuple[GroupElement, ...]
    saturated: bool


def classify_R_T_analytic(jumps, bound: int = 64) -> RTClassification:
    """Split E into R (some nonempty sum of jumps equals -r) and T = E \\ R.

    Breadth-first search over partial sums of at most ``bound`` jumps inside
    the sup-norm box of radius (2d+1)*max|jump|. By the Steinitz lemma every
    sum reaching -r can be reordered to stay inside that box, so once the
    search saturates (no new partial sums) the answer is exact.
    """
    if bound < 1:
        raise ConfigError("bound must be >= 1")
    E = list(JumpSet(jumps)) if not isinstance(jumps, JumpSet) else list(jumps)
    d = E[0].dim
    radius = (2 * d + 1) * max(max(abs(c) for c in e.coords) for e in E)

    def inside(x):
        return all(abs(c) <= radius for c in x)

    vecs = [e.coords for e in E]
    seen = {v for v in vecs if inside(v)}
    frontier = set(seen)
    saturated = False
    for _ in range(bound - 1):
        nxt = set()
        for s in frontier:
            for v in vecs:
                t = tuple(a + b for a, b in zip(s, v))
                if t not in seen and inside(t):
                    nxt.add(t)
        if not nxt:
            saturated = True
            break
        seen |= nxt
        frontier = nxt
    else:
        saturated = not frontier or all(
            tuple(a + b for a, b in zip(s, v)) in seen or not inside(tuple(a + b for a, b in zip(s, v)))
            for s in frontier for v in vecs)
    R = tuple(e for e in E if tuple(-c for c in e.coords) in seen)
    T = tuple(e for e in E if e not in R)
    return RTClassification(R, T, saturated)
