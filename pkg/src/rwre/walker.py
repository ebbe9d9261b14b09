"""Quenched and reinforced walk simulation; trajectory files."""
from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import _backend
from ._pykernels import cumulate
from .environment import Environment, EnvironmentLaw, SiteLaw, analytic_V_law
from .errors import FormatError, ReinforcementError
from .lattice import GroupElement, JumpSet, MultiIndex, as_element
from .seeding import substream, substream_seed

HEADER = "#rwre-traj v1"

ReinforcementOracle = Callable[[MultiIndex], "SiteLaw | Mapping"]


@dataclass(eq=False)
class Trajectory:
    """Walk started at the origin, stored as jump indices into ``jumpset``."""

    jumpset: JumpSet
    index: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = np.ascontiguousarray(self.index, dtype=np.int32)
        if self.index.ndim != 1:
            raise ValueError("trajectory index must be one-dimensional")
        if len(self.index) and (self.index.min() < 0 or self.index.max() >= len(self.jumpset)):
            raise ValueError("jump index outside the jump set")

    @classmethod
    def from_jumps(cls, jumps, jumpset: JumpSet | None = None, **meta) -> Trajectory:
        elems = [as_element(j) for j in jumps]
        if jumpset is None:
            jumpset = JumpSet(set(elems)) if elems else JumpSet([GroupElement.zero(1)])
        return cls(jumpset, np.array([jumpset.index(e) for e in elems], dtype=np.int32), dict(meta))

    @property
    def dim(self) -> int:
        return self.jumpset.dim

    @property
    def start(self) -> GroupElement:
        return GroupElement.zero(self.dim)

    @property
    def jumps(self) -> list[GroupElement]:
        js = self.jumpset
        return [js[i] for i in self.index.tolist()]

    def __len__(self) -> int:
        return len(self.index)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.jumps == other.jumps

    def positions(self) -> np.ndarray:
        """(L+1, d) array X_0 .. X_L."""
        steps = self.jumpset.coords[self.index]
        out = np.zeros((len(self) + 1, self.dim), dtype=np.int64)
        np.cumsum(steps, axis=0, out=out[1:])
        return out

    def site_ids(self) -> tuple[np.ndarray, int]:
        """Dense site label of X_0 .. X_L and the number of distinct sites."""
        pos = self.positions()
        if self.dim == 1:
            _, inv = np.unique(pos[:, 0], return_inverse=True)
        else:
            _, inv = np.unique(pos, axis=0, return_inverse=True)
        inv = np.asarray(inv, dtype=np.int64).reshape(-1)
        return inv, int(inv.max()) + 1

    def prefix(self, n: int) -> Trajectory:
        return Trajectory(self.jumpset, self.index[:n].copy(), dict(self.meta))


def format_trajectory(traj: Trajectory) -> str:
    head = [HEADER, f"dim={traj.dim}"]
    for k, v in traj.meta.items():
        if isinstance(v, bool):
            v = str(v).lower()
        head.append(f"{k}={v}")
    text = [str(e) for e in traj.jumpset]
    lines = [" ".join(head)]
    lines.extend(text[i] for i in traj.index.tolist())
    return "\n".join(lines) + "\n"


def _parse_meta(value: str):
    if value in ("true", "false"):
        return value == "true"
    try:
        return int(value)
    except ValueError:
        return value


def parse_trajectory(text: str, jumpset: JumpSet | None = None) -> Trajectory:
    """Inverse of ``format_trajectory``. With ``jumpset``, jumps outside it are errors."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith(HEADER):
        raise FormatError(f"missing '{HEADER}' header", line=1)
    meta = {}
    for tok in lines[0][len(HEADER):].split():
        if "=" not in tok:
            raise FormatError(f"bad header field {tok!r}", line=1)
        k, v = tok.split("=", 1)
        meta[k] = _parse_meta(v)
    dim = meta.pop("dim", None)
    if not isinstance(dim, int) or dim < 1:
        raise FormatError("header lacks a valid dim=<d>", line=1)
    if jumpset is not None and jumpset.dim != dim:
        raise FormatError(f"file has dim={dim}, jump set has dim={jumpset.dim}", line=1)

    parsed: dict[str, GroupElement] = {}
    elems = []
    for lineno, line in enumerate(lines[1:], start=2):
        e = parsed.get(line)
        if e is None:
            try:
                e = GroupElement.parse(line)
            except FormatError as exc:
                raise FormatError(str(exc), line=lineno) from None
            if e.dim != dim:
                raise FormatError(f"jump {e} does not have dim={dim}", line=lineno)
            if jumpset is not None and e not in jumpset:
                raise FormatError(f"jump {e} is not in the declared jump set {jumpset}", line=lineno)
            parsed[line] = e
        elems.append(e)
    if jumpset is None:
        jumpset = JumpSet(set(parsed.values())) if parsed else JumpSet([GroupElement.zero(dim)])
    lookup = {e: jumpset.index(e) for e in parsed.values()}
    return Trajectory(jumpset, np.array([lookup[e] for e in elems], dtype=np.int32), meta)


def atomic_write(path, data: str | bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode() if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trajectory(path, traj: Trajectory) -> None:
    atomic_write(path, format_trajectory(traj))


def read_trajectory(path, jumpset: JumpSet | None = None) -> Trajectory:
    with open(path) as fh:
        return parse_trajectory(fh.read(), jumpset)


def quenched_environment(law: EnvironmentLaw, seed: int, backend: str | None = None) -> Environment:
    """The environment that ``simulate_quenched(law, seed, ...)`` walks in."""
    return Environment(law, substream_seed(seed, "environment"), backend)


def simulate_quenched(law: EnvironmentLaw, seed: int, steps: int, backend: str | None = None) -> Trajectory:
    """One annealed RWRE path: an environment drawn from (law, seed), then ``steps`` Markov moves."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    jc = law.jumps.coords
    us = substream(seed, "walk").random(steps)
    kern, radix = _backend.pick(jc, steps, backend)
    idx = kern.quenched_walk(law.kernel_law(), substream_seed(seed, "environment"), jc, us, radix=radix)
    return Trajectory(law.jumps, idx)


def simulate_quenched_batch(law: EnvironmentLaw, seed: int, runs: int, steps: int,
                            backend: str | None = None) -> np.ndarray:
    """(runs, steps) jump indices of independent annealed walks, each in its own environment."""
    jc = law.jumps.coords
    us = substream(seed, "walk-batch").random((runs, steps))
    kern, radix = _backend.pick(jc, steps, backend)
    return kern.quenched_batch(law.kernel_law(), substream_seed(seed, "environment"), jc, us, radix=radix)


def _oracle_filler(V: ReinforcementOracle, jumps: JumpSet, index):
    def fill(h):
        n = MultiIndex.from_dense(jumps, index.counts(h))
        try:
            law = V(n)
        except Exception as exc:
            raise ReinforcementError(n, exc) from exc
        if isinstance(law, SiteLaw) and law.jumps == jumps:
            probs = law.probs
        else:
            probs = [0.0] * len(jumps)
            for e, p in law.items():
                probs[jumps.index(as_element(e))] = float(p)
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ReinforcementError(n, f"oracle probabilities sum to {math.fsum(probs)!r}")
        return cumulate(probs)
    return fill


def simulate_reinforced(V: ReinforcementOracle, jumps: JumpSet, seed: int, steps: int,
                        backend: str | None = None) -> Trajectory:
    """Edge-oriented reinforced walk: each jump is drawn from V(local unordered history)."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    kern, radix = _backend.pick(jumps.coords, steps, backend)
    index = kern.HistoryIndex(len(jumps))
    us = substream(seed, "walk").random(steps)
    idx = kern.reinforced_walk(index, _oracle_filler(V, jumps, index), jumps.coords, us, radix=radix)
    return Trajectory(jumps, idx)


def simulate_reinforced_batch(V: ReinforcementOracle, jumps: JumpSet, seed: int, runs: int, steps: int,
                              backend: str | None = None) -> np.ndarray:
    kern, radix = _backend.pick(jumps.coords, steps, backend)
    index = kern.HistoryIndex(len(jumps))
    us = substream(seed, "walk-batch").random((runs, steps))
    return kern.reinforced_batch(index, _oracle_filler(V, jumps, index), jumps.coords, us, radix=radix)


def annealed_oracle(law: EnvironmentLaw) -> ReinforcementOracle:
    """The reinforcement function whose reinforced walk has the annealed law of ``law``."""
    return lambda n: analytic_V_law(law, n)
