"""Single-trajectory inference.

Every step of the observed trajectory is filed under the unordered history
that its departure site had just before the move. Within one history the
filed jumps are iid with law V(history), and streams for different
histories are independent, so plain frequencies inside a stream are
unbiased for V even though naive per-site frequencies are not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _backend
from .environment import SiteLaw
from .errors import FormatError, NoObservations
from .lattice import GroupElement, JumpSet, MultiIndex, as_element
from .walker import Trajectory

DEFAULT_MIN_COUNT = 30


@dataclass(eq=False)
class EstimatorState:
    """Next-jump streams keyed by local unordered history.

    Streams are stored CSR-style: the stream of history id ``h`` is
    ``data[starts[h]:starts[h] + lengths[h]]`` (jump indices, time order).
    """

    jumpset: JumpSet
    index: object
    starts: np.ndarray
    lengths: np.ndarray
    data: np.ndarray
    source_length: int

    def key(self, h: int) -> MultiIndex:
        return MultiIndex.from_dense(self.jumpset, self.index.counts(h))

    def hid(self, n: MultiIndex) -> int:
        n = MultiIndex(n)
        if any(e not in self.jumpset for e in n):
            return -1
        h = self.index.lookup(n.dense(self.jumpset))
        return h if 0 <= h < len(self.lengths) else -1

    def stream_index(self, n: MultiIndex) -> np.ndarray:
        h = self.hid(n)
        if h < 0:
            return np.zeros(0, dtype=np.int32)
        return self.data[self.starts[h]:self.starts[h] + self.lengths[h]]

    def stream(self, n: MultiIndex) -> list[GroupElement]:
        return [self.jumpset[i] for i in self.stream_index(n).tolist()]

    def count(self, n: MultiIndex) -> int:
        h = self.hid(n)
        return int(self.lengths[h]) if h >= 0 else 0

    def histories(self) -> list[MultiIndex]:
        return sorted((self.key(h) for h in np.flatnonzero(self.lengths).tolist()), key=MultiIndex.sort_key)

    @property
    def streams(self) -> dict[MultiIndex, list[GroupElement]]:
        return {n: self.stream(n) for n in self.histories()}

    def total_observations(self) -> int:
        return int(self.lengths.sum())


def _conform(traj: Trajectory, jumpset: JumpSet | None) -> Trajectory:
    if jumpset is None or jumpset == traj.jumpset:
        return traj
    remap = np.empty(len(traj.jumpset), dtype=np.int32)
    present = np.zeros(len(traj.jumpset), dtype=bool)
    present[np.unique(traj.index)] = True
    for i, e in enumerate(traj.jumpset):
        if e in jumpset:
            remap[i] = jumpset.index(e)
        elif present[i]:
            step = int(np.flatnonzero(traj.index == i)[0])
            # file line = header + 1-based step
            raise FormatError(f"jump {e} is not in the declared jump set {jumpset}", line=step + 2)
        else:
            remap[i] = 0
    return Trajectory(jumpset, remap[traj.index], dict(traj.meta))


def _state_from_ids(jumpset, index, hist, jumps, source_length) -> EstimatorState:
    H = len(index)
    lengths = np.bincount(hist, minlength=H).astype(np.int64)
    starts = np.zeros(H, dtype=np.int64)
    np.cumsum(lengths[:-1], out=starts[1:])
    order = np.argsort(hist, kind="stable")
    data = np.ascontiguousarray(np.asarray(jumps, dtype=np.int32)[order])
    return EstimatorState(jumpset, index, starts, lengths, data, int(source_length))


def ingest(traj: Trajectory, jumpset: JumpSet | None = None, backend: str | None = None) -> EstimatorState:
    """Group the jumps of ``traj`` into streams by the departure site's unordered history."""
    traj = _conform(traj, jumpset)
    kern = _backend.get(backend)
    index = kern.HistoryIndex(len(traj.jumpset))
    if len(traj) == 0:
        return _state_from_ids(traj.jumpset, index, np.zeros(0, np.int32), traj.index, 0)
    sid, n_sites = traj.site_ids()
    hist = kern.ingest(index, traj.index, sid[:-1], n_sites)
    return _state_from_ids(traj.jumpset, index, hist, traj.index, len(traj))


def merge(states: Sequence[EstimatorState], backend: str | None = None) -> EstimatorState:
    """Concatenate streams of states built from independent trajectories of one law."""
    if not states:
        raise ValueError("nothing to merge")
    jumpset = states[0].jumpset
    if any(s.jumpset != jumpset for s in states):
        raise ValueError("cannot merge states over different jump sets")
    index = _backend.get(backend).HistoryIndex(len(jumpset))
    hist_parts, jump_parts = [], []
    for s in states:
        ids = np.array([index.intern(s.index.counts(h)) if h < len(s.lengths) else -1
                        for h in range(len(s.lengths))], dtype=np.int32)
        owner = np.repeat(np.arange(len(s.lengths), dtype=np.int64), s.lengths)
        hist_parts.append(ids[owner])
        jump_parts.append(s.data)
    hist = np.concatenate(hist_parts) if hist_parts else np.zeros(0, np.int32)
    return _state_from_ids(jumpset, index, hist, np.concatenate(jump_parts),
                           sum(s.source_length for s in states))


class VEstimate(NamedTuple):
    n: MultiIndex
    probs: SiteLaw
    count: int

    def se(self, e) -> float:
        p = self.probs[e]
        return math.sqrt(p * (1.0 - p) / self.count)


def empirical_V(state: EstimatorState, n: MultiIndex) -> VEstimate:
    """Frequencies of the next jump within the stream of history ``n``."""
    n = MultiIndex(n)
    s = state.stream_index(n)
    if len(s) == 0:
        raise NoObservations(f"no observations for history {n}")
    counts = np.bincount(s, minlength=len(state.jumpset))
    probs = tuple(float(c) / len(s) for c in counts)
    return VEstimate(n, SiteLaw(state.jumpset, probs), int(len(s)))


def empirical_oracle(state: EstimatorState, min_count: int = 1):
    """Reinforcement oracle backed by stream frequencies; histories below ``min_count`` raise."""
    def V(n):
        if state.count(n) < min_count:
            raise NoObservations(f"history {n} has {state.count(n)} < {min_count} observations")
        return empirical_V(state, n).probs
    return V


def observed_histories(state: EstimatorState, min_count: int = DEFAULT_MIN_COUNT) -> list[MultiIndex]:
    """Histories with at least ``min_count`` observations, by (total, lexicographic)."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    ids = np.flatnonzero(state.lengths >= min_count).tolist()
    return sorted((state.key(h) for h in ids), key=MultiIndex.sort_key)


class EmpiricalClassification(NamedTuple):
    R: tuple[GroupElement, ...]
    T: tuple[GroupElement, ...]
    evidence: dict[GroupElement, int]


def _last_visit(sid: np.ndarray, n_sites: int) -> np.ndarray:
    last = np.full(n_sites, -1, dtype=np.int64)
    last[sid] = np.arange(len(sid))  # fancy assignment keeps the last write
    return last


def classify_R_T_empirical(traj: Trajectory) -> EmpiricalClassification:
    """Jumps certified to allow a return: some departure by g is followed by a revisit.

    A revisit of X_n after jumping g proves -g is a sum of observed jumps, so
    R-hat is always a subset of the true R; jumps seen but never certified
    form T-hat.
    """
    if len(traj) == 0:
        return EmpiricalClassification((), (), {})
    sid, n_sites = traj.site_ids()
    last = _last_visit(sid, n_sites)
    dep = sid[:-1]
    certified = last[dep] > np.arange(len(dep))
    m = len(traj.jumpset)
    seen = np.bincount(traj.index, minlength=m)
    cert = np.bincount(traj.index[certified], minlength=m)
    R = tuple(e for i, e in enumerate(traj.jumpset) if cert[i] > 0)
    T = tuple(e for i, e in enumerate(traj.jumpset) if seen[i] > 0 and cert[i] == 0)
    evidence = {e: int(cert[i]) for i, e in enumerate(traj.jumpset) if seen[i] > 0}
    return EmpiricalClassification(R, T, evidence)


class SiteEstimate(NamedTuple):
    site: GroupElement
    probs: SiteLaw
    count: int


def estimate_site_environment(traj: Trajectory, x) -> SiteEstimate:
    """Departure frequencies from site ``x``; consistent for nu(x) only for recurrent walks."""
    x = as_element(x)
    pos = traj.positions()[:-1]
    at = np.all(pos == np.asarray(x.coords), axis=1)
    n = int(at.sum())
    if n == 0:
        raise NoObservations(f"site {x} was never departed from")
    counts = np.bincount(traj.index[at], minlength=len(traj.jumpset))
    return SiteEstimate(x, SiteLaw(traj.jumpset, tuple(float(c) / n for c in counts)), n)


def recurrence_diagnostic(traj: Trajectory) -> dict:
    """Revisit statistics; no hard recurrent/transient verdict."""
    sid, n_sites = traj.site_ids()
    visits = np.bincount(sid, minlength=n_sites)
    L = len(traj)
    return {
        "revisit_fraction": (len(sid) - n_sites) / L if L else 0.0,
        "max_visits": int(visits.max()),
        "distinct_sites": int(n_sites),
    }


def same_site_successions(traj: Trajectory) -> np.ndarray:
    """(m, m) counts of consecutive departures (a then b) from the same site."""
    m = len(traj.jumpset)
    out = np.zeros((m, m), dtype=np.int64)
    if len(traj) < 2:
        return out
    sid, _ = traj.site_ids()
    dep = sid[:-1]
    order = np.lexsort((np.arange(len(dep)), dep))
    same = dep[order[1:]] == dep[order[:-1]]
    a = traj.index[order[:-1]][same]
    b = traj.index[order[1:]][same]
    np.add.at(out, (a, b), 1)
    return out


def history_records(state: EstimatorState, min_count: int = DEFAULT_MIN_COUNT) -> list[dict]:
    out = []
    for n in observed_histories(state, min_count):
        est = empirical_V(state, n)
        out.append({
            "history": {str(e): k for e, k in n.items()},
            "count": est.count,
            "V": {str(e): p for e, p in zip(state.jumpset, est.probs.probs)},
            "se": {str(e): est.se(e) for e in state.jumpset},
        })
    return out


def estimator_report(traj: Trajectory, state: EstimatorState | None = None,
                     min_count: int = DEFAULT_MIN_COUNT) -> dict:
    """JSON-ready report: V-hat table, R/T classification, diagnostics."""
    if state is None:
        state = ingest(traj)
    cls = classify_R_T_empirical(traj)
    succ = same_site_successions(traj)
    js = [str(e) for e in traj.jumpset]
    return {
        "jumps": js,
        "source_length": state.source_length,
        "min_count": min_count,
        "histories": history_records(state, min_count),
        "classification": {
            "R": [str(e) for e in cls.R],
            "T": [str(e) for e in cls.T],
            "evidence": {str(e): k for e, k in cls.evidence.items()},
        },
        "recurrence": recurrence_diagnostic(traj),
        "successions": {a: {b: int(succ[i, j]) for j, b in enumerate(js)} for i, a in enumerate(js)},
    }


class ReportOracle:
    """Reinforcement oracle rebuilt from the ``histories`` records of a report."""

    def __init__(self, report: dict):
        self.jumpset = JumpSet(report["jumps"])
        self.table: dict[MultiIndex, tuple[SiteLaw, int]] = {}
        for rec in report["histories"]:
            n = MultiIndex({as_element(k): v for k, v in rec["history"].items()})
            law = SiteLaw.from_mapping(self.jumpset, rec["V"])
            self.table[n] = (law, int(rec["count"]))

    def histories(self) -> list[MultiIndex]:
        return sorted(self.table, key=MultiIndex.sort_key)

    def __call__(self, n: MultiIndex) -> SiteLaw:
        try:
            return self.table[MultiIndex(n)][0]
        except KeyError:
            raise NoObservations(f"report has no record for history {n}") from None


def classification_from_report(report: dict) -> EmpiricalClassification:
    cls = report["classification"]
    return EmpiricalClassification(
        tuple(as_element(e) for e in cls["R"]),
        tuple(as_element(e) for e in cls["T"]),
        {as_element(k): v for k, v in cls["evidence"].items()},
    )


def iter_streams(state: EstimatorState) -> Iterable[tuple[MultiIndex, np.ndarray]]:
    for h in np.flatnonzero(state.lengths).tolist():
        yield state.key(h), state.data[state.starts[h]:state.starts[h] + state.lengths[h]]
