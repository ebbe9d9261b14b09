"""Ordered and unordered site histories along a trajectory."""
from __future__ import annotations

import copy

from .lattice import GroupElement, MultiIndex, as_element

_EMPTY = MultiIndex()


class HistoryTracker:
    """Per-site record of the jumps taken from each site so far.

    ``unordered[x]`` is the multiset of departures from x; ``ordered[x]``
    the same jumps in time order, kept only when ``keep_ordered`` is set.
    Sites never departed from have the empty history.
    """

    def __init__(self, dim: int = 1, keep_ordered: bool = False):
        self.current_site = GroupElement.zero(dim)
        self.step_count = 0
        self.keep_ordered = keep_ordered
        self.unordered: dict[GroupElement, MultiIndex] = {}
        self.ordered: dict[GroupElement, list[GroupElement]] = {}

    def record_step(self, jump) -> HistoryTracker:
        jump = as_element(jump)
        x = self.current_site
        self.unordered[x] = self.unordered.get(x, _EMPTY).plus(jump)
        if self.keep_ordered:
            self.ordered.setdefault(x, []).append(jump)
        self.current_site = x + jump
        self.step_count += 1
        return self

    def local_unordered(self) -> MultiIndex:
        return self.unordered.get(self.current_site, _EMPTY)

    def history_of(self, site) -> MultiIndex:
        return self.unordered.get(as_element(site), _EMPTY)

    def ordered_history_of(self, site) -> tuple[GroupElement, ...]:
        if not self.keep_ordered:
            raise ValueError("tracker was created without keep_ordered=True")
        return tuple(self.ordered.get(as_element(site), ()))

    def snapshot(self) -> HistoryTracker:
        return copy.deepcopy(self)


def record_step(t: HistoryTracker, jump) -> HistoryTracker:
    return t.record_step(jump)


def local_unordered(t: HistoryTracker) -> MultiIndex:
    return t.local_unordered()
