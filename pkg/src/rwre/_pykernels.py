"""Pure-Python kernels.

Reference implementation of the hot loops; ``_kernels.pyx`` mirrors every
function here operation for operation, so both backends produce
bit-identical trajectories, environments and history ids.
"""
from math import cos, log, sqrt

import numpy as np

NAME = "python"

M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
TWO_PI = 6.283185307179586
UNIT = 2.0 ** -52

MIXTURE = 0
DIRICHLET = 1


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


def site_hash(master, coords):
    h = mix64(master & M64)
    for c in coords:
        h = mix64((h + GOLDEN + (c & M64)) & M64)
    return h


def run_master(master, r):
    return mix64((master + (r + 1) * GOLDEN) & M64)


def unit(h, k):
    """k-th uniform of the site stream ``h``; lies in the open interval (0, 1)."""
    z = mix64((h + (k + 1) * GOLDEN) & M64)
    return ((z >> 12) + 0.5) * UNIT


def gamma_draw(alpha, h, k):
    """Marsaglia-Tsang gamma variate from the site stream; returns (value, next k)."""
    if alpha < 1.0:
        g, k = gamma_draw(alpha + 1.0, h, k)
        u = unit(h, k)
        return g * u ** (1.0 / alpha), k + 1
    d = alpha - 1.0 / 3.0
    c = 1.0 / sqrt(9.0 * d)
    while True:
        x = sqrt(-2.0 * log(unit(h, k))) * cos(TWO_PI * unit(h, k + 1))
        k += 2
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = unit(h, k)
        k += 1
        if u < 1.0 - 0.0331 * (x * x) * (x * x):
            return d * v, k
        if log(u) < 0.5 * x * x + d * (1.0 - v + log(v)):
            return d * v, k


def pick(cum, u):
    m = len(cum)
    for j in range(m):
        if u < cum[j]:
            return j
    return m - 1


def cumulate(probs):
    """Running sums with every entry from the last positive mass on pinned to 1."""
    out = []
    s = 0.0
    last = 0
    for j, p in enumerate(probs):
        s += p
        out.append(s)
        if p > 0.0:
            last = j
    for j in range(last, len(out)):
        out[j] = 1.0
    return out


def site_law(kind, wcum, atoms, alphas, master, coords):
    """Environment at one site: (probabilities, atom index or -1)."""
    h = site_hash(master, coords)
    if kind == MIXTURE:
        a = pick(wcum, unit(h, 0))
        return [float(p) for p in atoms[a]], a
    k = 0
    g = []
    s = 0.0
    for alpha in alphas:
        gj, k = gamma_draw(float(alpha), h, k)
        g.append(gj)
        s += gj
    return [gj / s for gj in g], -1


def _site_cum(law, master, coords):
    kind, wcum, atoms, alphas = law
    return cumulate(site_law(kind, wcum, atoms, alphas, master, coords)[0])


def _shift(pos, delta):
    return tuple(a + b for a, b in zip(pos, delta))


def quenched_walk(law, master, jump_coords, uniforms, radix=None):
    jc = [tuple(int(c) for c in row) for row in jump_coords]
    us = np.asarray(uniforms, dtype=np.float64).tolist()
    out = np.empty(len(us), dtype=np.int32)
    sites = {}
    pos = (0,) * len(jc[0])
    for n, u in enumerate(us):
        cum = sites.get(pos)
        if cum is None:
            cum = sites[pos] = _site_cum(law, master, pos)
        j = pick(cum, u)
        out[n] = j
        pos = _shift(pos, jc[j])
    return out


def quenched_batch(law, master, jump_coords, uniforms, radix=None):
    uniforms = np.asarray(uniforms, dtype=np.float64)
    out = np.empty(uniforms.shape, dtype=np.int32)
    for r in range(uniforms.shape[0]):
        out[r] = quenched_walk(law, run_master(master, r), jump_coords, uniforms[r])
    return out


class HistoryIndex:
    """Interns unordered histories (dense count vectors) as small integers.

    Id 0 is the empty history. ``child(h, j)`` is the id of h plus one
    j-jump; transitions are memoized so the hot path is two list lookups.
    """

    def __init__(self, m):
        self.m = int(m)
        empty = (0,) * self.m
        self._counts = [empty]
        self._child = [[-1] * self.m]
        self._lookup = {empty: 0}

    def _new(self, key):
        h = len(self._counts)
        self._counts.append(key)
        self._child.append([-1] * self.m)
        self._lookup[key] = h
        return h

    def child(self, h, j):
        c = self._child[h][j]
        if c < 0:
            key = list(self._counts[h])
            key[j] += 1
            key = tuple(key)
            c = self._lookup.get(key)
            if c is None:
                c = self._new(key)
            self._child[h][j] = c
        return c

    def intern(self, counts):
        key = tuple(int(c) for c in counts)
        if len(key) != self.m:
            raise ValueError(f"expected {self.m} counts, got {len(key)}")
        h = self._lookup.get(key)
        return self._new(key) if h is None else h

    def lookup(self, counts):
        return self._lookup.get(tuple(int(c) for c in counts), -1)

    def counts(self, h):
        return self._counts[h]

    def copy(self):
        other = HistoryIndex(self.m)
        other._counts = list(self._counts)
        other._child = [list(row) for row in self._child]
        other._lookup = dict(self._lookup)
        return other

    def __len__(self):
        return len(self._counts)


def ingest(index, jumps, site_ids, n_sites):
    js = np.asarray(jumps).tolist()
    ss = np.asarray(site_ids).tolist()
    out = np.empty(len(js), dtype=np.int32)
    site_h = [0] * int(n_sites)
    child = index.child
    for n, (j, s) in enumerate(zip(js, ss)):
        h = site_h[s]
        out[n] = h
        site_h[s] = child(h, j)
    return out


def reinforced_walk(index, fill, jump_coords, uniforms, radix=None):
    return reinforced_batch(index, fill, jump_coords, np.asarray(uniforms, dtype=np.float64)[None, :])[0]


def reinforced_batch(index, fill, jump_coords, uniforms, radix=None):
    jc = [tuple(int(c) for c in row) for row in jump_coords]
    uniforms = np.asarray(uniforms, dtype=np.float64)
    out = np.empty(uniforms.shape, dtype=np.int32)
    cache = {}
    origin = (0,) * len(jc[0])
    for r in range(uniforms.shape[0]):
        sites = {}
        pos = origin
        for n, u in enumerate(uniforms[r].tolist()):
            h = sites.get(pos, 0)
            cum = cache.get(h)
            if cum is None:
                cum = cache[h] = [float(c) for c in fill(h)]
            j = pick(cum, u)
            out[r, n] = j
            sites[pos] = index.child(h, j)
            pos = _shift(pos, jc[j])
    return out


def replica_walk(index, starts, lengths, data, parity, jump_coords, max_steps, radix=None):
    """Walk driven by the odd (parity 1) or even (parity 0) elements of the streams.

    Returns (jumps, blocking history id or -1, occurrence count per history id).
    """
    jc = [tuple(int(c) for c in row) for row in jump_coords]
    starts = np.asarray(starts).tolist()
    lengths = np.asarray(lengths).tolist()
    data = np.asarray(data).tolist()
    n_streams = len(starts)
    out = []
    occ = {}
    sites = {}
    blocking = -1
    pos = (0,) * len(jc[0])
    for _ in range(int(max_steps)):
        h = sites.get(pos, 0)
        t = occ.get(h, 0) + 1
        occ[h] = t
        p = 2 * t - 2 if parity == 1 else 2 * t - 1
        if h >= n_streams or p >= lengths[h]:
            blocking = h
            break
        j = data[starts[h] + p]
        out.append(j)
        sites[pos] = index.child(h, j)
        pos = _shift(pos, jc[j])
    return np.asarray(out, dtype=np.int32), blocking, occ
