"""Integer lattice Z^d: group elements, jump sets and sparse multi-indices."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import ConfigError, FormatError

_ELEMENT_RE = re.compile(r"^\[\s*-?\d+\s*(,\s*-?\d+\s*)*\]$")


@dataclass(frozen=True, slots=True, order=True)
class GroupElement:
    """A point (or a jump) of Z^d. Ordering is lexicographic on coordinates."""

    coords: tuple[int, ...]

    def __post_init__(self):
        if not self.coords:
            raise ConfigError("a group element needs at least one coordinate")

    @classmethod
    def of(cls, *coords: int) -> GroupElement:
        return cls(tuple(int(c) for c in coords))

    @classmethod
    def zero(cls, dim: int) -> GroupElement:
        return cls((0,) * dim)

    @classmethod
    def parse(cls, text: str) -> GroupElement:
        text = text.strip()
        if not _ELEMENT_RE.match(text):
            raise FormatError(f"not a lattice element: {text!r}")
        return cls(tuple(int(tok) for tok in text[1:-1].split(",")))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __add__(self, other: GroupElement) -> GroupElement:
        return add(self, other)

    def __neg__(self) -> GroupElement:
        return negate(self)

    def __sub__(self, other: GroupElement) -> GroupElement:
        return add(self, negate(other))

    def __str__(self) -> str:
        return "[" + ",".join(str(c) for c in self.coords) + "]"

    def __repr__(self) -> str:
        return f"GroupElement{self.coords}"


def add(a: GroupElement, b: GroupElement) -> GroupElement:
    if len(a.coords) != len(b.coords):
        raise ConfigError(f"dimension mismatch: {a} + {b}")
    return GroupElement(tuple(x + y for x, y in zip(a.coords, b.coords)))


def negate(a: GroupElement) -> GroupElement:
    return GroupElement(tuple(-x for x in a.coords))


def as_element(value) -> GroupElement:
    """Coerce an int, a coordinate sequence or a text form to a GroupElement."""
    if isinstance(value, GroupElement):
        return value
    if isinstance(value, str):
        return GroupElement.parse(value)
    if isinstance(value, (int, np.integer)):
        return GroupElement((int(value),))
    return GroupElement(tuple(int(c) for c in value))


class JumpSet:
    """Finite set of distinct jumps kept in canonical (lexicographic) order."""

    __slots__ = ("_jumps", "_pos", "_coords")

    def __init__(self, jumps: Iterable):
        elems = [as_element(j) for j in jumps]
        if not elems:
            raise ConfigError("a jump set must be nonempty")
        dims = {e.dim for e in elems}
        if len(dims) != 1:
            raise ConfigError(f"jumps of mixed dimension: {sorted(dims)}")
        ordered = sorted(elems)
        for a, b in zip(ordered, ordered[1:]):
            if a == b:
                raise ConfigError(f"duplicate jump {a}")
        self._jumps = tuple(ordered)
        self._pos = {e: i for i, e in enumerate(self._jumps)}
        self._coords = np.array([e.coords for e in self._jumps], dtype=np.int64)
        self._coords.setflags(write=False)

    @property
    def dim(self) -> int:
        return self._jumps[0].dim

    @property
    def coords(self) -> np.ndarray:
        """(m, d) int64 array of jump coordinates in canonical order."""
        return self._coords

    def index(self, e: GroupElement) -> int:
        try:
            return self._pos[e]
        except KeyError:
            raise KeyError(f"{e} is not in the jump set {self}") from None

    def __contains__(self, e) -> bool:
        return e in self._pos

    def __iter__(self) -> Iterator[GroupElement]:
        return iter(self._jumps)

    def __len__(self) -> int:
        return len(self._jumps)

    def __getitem__(self, i: int) -> GroupElement:
        return self._jumps[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, JumpSet) and self._jumps == other._jumps

    def __hash__(self) -> int:
        return hash(self._jumps)

    def __str__(self) -> str:
        return "{" + ",".join(str(e) for e in self._jumps) + "}"

    def __repr__(self) -> str:
        return f"JumpSet({[str(e) for e in self._jumps]})"

    def subset(self, elems: Iterable[GroupElement]) -> list[GroupElement]:
        keep = set(elems)
        return [e for e in self._jumps if e in keep]


class MultiIndex(Mapping):
    """Sparse multiset of jumps; the unordered history of a site.

    Zero counts are never stored, so two equal multisets compare and hash
    equal regardless of how they were built.
    """

    __slots__ = ("_items", "_hash", "_key")

    def __init__(self, counts: Mapping | Iterable = ()):
        if isinstance(counts, Mapping):
            pairs = counts.items()
        else:
            pairs = counts
        acc: dict[GroupElement, int] = {}
        for key, n in pairs:
            n = int(n)
            if n < 0:
                raise ConfigError(f"negative count {n} for {key}")
            if n:
                e = as_element(key)
                acc[e] = acc.get(e, 0) + n
        self._items = tuple(sorted(acc.items()))
        self._hash = None
        self._key = None

    @classmethod
    def _trusted(cls, items: tuple) -> MultiIndex:
        # items already sorted, positive and made of GroupElements
        self = object.__new__(cls)
        self._items = items
        self._hash = None
        self._key = None
        return self

    @classmethod
    def from_dense(cls, jumps: JumpSet, counts: Iterable[int]) -> MultiIndex:
        items = tuple((e, int(n)) for e, n in zip(jumps, counts) if n)
        if any(n < 0 for _, n in items):
            raise ConfigError(f"negative count in {list(counts)}")
        return cls._trusted(items)

    @classmethod
    def parse(cls, text: str) -> MultiIndex:
        """Inverse of ``str``: ``{[1]:2,[-1]:1}``; ``{}`` is the empty history."""
        text = text.strip()
        if not (text.startswith("{") and text.endswith("}")):
            raise FormatError(f"not a multi-index: {text!r}")
        body = text[1:-1].strip()
        if not body:
            return cls()
        pairs = []
        for m in re.finditer(r"(\[[^\]]*\])\s*:\s*(\d+)", body):
            pairs.append((GroupElement.parse(m.group(1)), int(m.group(2))))
        if not pairs:
            raise FormatError(f"not a multi-index: {text!r}")
        return cls(pairs)

    def __getitem__(self, key) -> int:
        key = as_element(key)
        for e, n in self._items:
            if e == key:
                return n
        return 0

    def __iter__(self):
        return (e for e, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiIndex):
            return self._items == other._items
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._items)
        return self._hash

    def __lt__(self, other: MultiIndex) -> bool:
        return self.sort_key() < other.sort_key()

    @property
    def total(self) -> int:
        return sum(n for _, n in self._items)

    def sort_key(self):
        """Order by total count, then lexicographically on (jump, count) pairs."""
        if self._key is None:
            self._key = (self.total, tuple((e.coords, n) for e, n in self._items))
        return self._key

    def plus(self, e: GroupElement, k: int = 1) -> MultiIndex:
        acc = dict(self._items)
        acc[e] = acc.get(e, 0) + k
        return MultiIndex(acc)

    def minus(self, e: GroupElement, k: int = 1) -> MultiIndex:
        acc = dict(self._items)
        if acc.get(e, 0) < k:
            raise ConfigError(f"cannot remove {k} x {e} from {self}")
        acc[e] -= k
        return MultiIndex(acc)

    def dense(self, jumps: JumpSet) -> tuple[int, ...]:
        out = [0] * len(jumps)
        for e, n in self._items:
            out[jumps.index(e)] = n
        return tuple(out)

    def support(self) -> tuple[GroupElement, ...]:
        return tuple(e for e, _ in self._items)

    def __str__(self) -> str:
        return "{" + ",".join(f"{e}:{n}" for e, n in self._items) + "}"

    def __repr__(self) -> str:
        return f"MultiIndex({self})"


UnorderedHistory = MultiIndex
