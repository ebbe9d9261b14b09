"""Replica trajectories built by re-using the steps of one observed trajectory.

Replica 1 reads the odd-numbered entries of every history stream, replica
2 the even-numbered ones; each replica tracks its *own* site histories and
its own per-history occurrence count to decide which entry to read next.
No probability is ever evaluated here: the construction is a deterministic
function of the source trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import _backend
from .estimator import EstimatorState, ingest
from .lattice import MultiIndex
from .walker import Trajectory

ODD, EVEN = 1, 0


@dataclass
class Replica:
    trajectory: Trajectory
    truncated: bool
    blocking: MultiIndex | None
    consumed: dict[MultiIndex, int]

    def __len__(self) -> int:
        return len(self.trajectory)


def _replica(state: EstimatorState, parity: int, max_steps: int, backend: str | None) -> Replica:
    kern, radix = _backend.pick(state.jumpset.coords, min(max_steps, state.source_length), backend)
    index = _backend.convert_index(state.index, kern)
    jumps, blocking, occ = kern.replica_walk(
        index, state.starts, state.lengths, state.data, parity,
        state.jumpset.coords, max_steps, radix=radix)

    def key(h):
        return MultiIndex.from_dense(state.jumpset, index.counts(h))

    consumed = {}
    for h, t in sorted(occ.items()):
        used = t - 1 if h == blocking else t
        if used:
            consumed[key(h)] = used
    return Replica(Trajectory(state.jumpset, jumps), blocking >= 0,
                   key(blocking) if blocking >= 0 else None, consumed)


def extract_pair(state: EstimatorState, max_steps: int | None = None,
                 backend: str | None = None) -> tuple[Replica, Replica]:
    """(X1, X2): X1 consumes stream positions 1, 3, 5, ...; X2 positions 2, 4, 6, ...

    A replica stops at ``max_steps`` or, flagged as truncated, when the
    stream entry it needs does not exist in the finite source.
    """
    if max_steps is None:
        # every replica step consumes a distinct source entry, so this cap is never reached
        max_steps = state.source_length + 1
    return (_replica(state, ODD, max_steps, backend),
            _replica(state, EVEN, max_steps, backend))


def extract_many(traj: Trajectory, k: int, max_steps: int | None = None,
                 backend: str | None = None) -> list[Replica]:
    """k independent replicas (X1, X3, X5, ...) by repeatedly splitting the even replica."""
    if k < 1:
        raise ValueError("k must be >= 1")
    out = []
    current = traj
    for i in range(1, k + 1):
        odd, even = extract_pair(ingest(current, backend=backend), max_steps, backend)
        odd.trajectory.meta.update(replica=i, truncated=odd.truncated)
        out.append(odd)
        current = even.trajectory
    return out
