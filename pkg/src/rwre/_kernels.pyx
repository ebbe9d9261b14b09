# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled kernels; operation-for-operation mirror of ``_pykernels``.

Sites are keyed by a packed int64 (balanced radix ``radix`` per axis);
callers pick a radix large enough that distinct reachable sites never
collide.
"""
from cython.operator cimport dereference as deref
from libc.math cimport cos, log, sqrt, pow
from libc.stdint cimport int32_t, int64_t, uint64_t
from libcpp.map cimport map as cmap
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

import numpy as np

NAME = "cython"

MIXTURE = 0
DIRICHLET = 1
cdef int _MIXTURE = 0
cdef int _DIRICHLET = 1

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_PI = 6.283185307179586
cdef double UNIT = 2.220446049250313e-16  # 2**-52


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _site_hash(uint64_t master, const int64_t* coords, int d) noexcept nogil:
    cdef uint64_t h = _mix64(master)
    cdef int i
    for i in range(d):
        h = _mix64(h + GOLDEN + <uint64_t>coords[i])
    return h


cdef inline double _unit(uint64_t h, int64_t k) noexcept nogil:
    cdef uint64_t z = _mix64(h + <uint64_t>(k + 1) * GOLDEN)
    return (<double>(z >> 12) + 0.5) * UNIT


cdef double _gamma(double alpha, uint64_t h, int64_t* k) noexcept nogil:
    cdef double g, u, d, c, x, v
    if alpha < 1.0:
        g = _gamma(alpha + 1.0, h, k)
        u = _unit(h, k[0])
        k[0] += 1
        return g * pow(u, 1.0 / alpha)
    d = alpha - 1.0 / 3.0
    c = 1.0 / sqrt(9.0 * d)
    while True:
        x = sqrt(-2.0 * log(_unit(h, k[0]))) * cos(TWO_PI * _unit(h, k[0] + 1))
        k[0] += 2
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _unit(h, k[0])
        k[0] += 1
        if u < 1.0 - 0.0331 * (x * x) * (x * x):
            return d * v
        if log(u) < 0.5 * x * x + d * (1.0 - v + log(v)):
            return d * v


cdef inline int _pick(const double* cum, int m, double u) noexcept nogil:
    cdef int j
    for j in range(m):
        if u < cum[j]:
            return j
    return m - 1


cdef void _cumulate(const double* probs, int m, double* out) noexcept nogil:
    cdef double s = 0.0
    cdef int j, last = 0
    for j in range(m):
        s += probs[j]
        out[j] = s
        if probs[j] > 0.0:
            last = j
    for j in range(last, m):
        out[j] = 1.0


cdef struct Law:
    int kind
    int n_atoms
    int m
    const double* wcum
    const double* atom_probs
    const double* alphas


cdef int _site_probs(const Law* law, uint64_t master, const int64_t* coords, int d,
                     double* probs) noexcept nogil:
    cdef uint64_t h = _site_hash(master, coords, d)
    cdef int a, j
    cdef int64_t k = 0
    cdef double s = 0.0
    if law.kind == _MIXTURE:
        a = _pick(law.wcum, law.n_atoms, _unit(h, 0))
        for j in range(law.m):
            probs[j] = law.atom_probs[a * law.m + j]
        return a
    for j in range(law.m):
        probs[j] = _gamma(law.alphas[j], h, &k)
        s += probs[j]
    for j in range(law.m):
        probs[j] = probs[j] / s
    return -1


cdef class _LawBuffers:
    """Owns contiguous arrays backing a ``Law`` struct."""
    cdef public object wcum, atoms, alphas
    cdef Law law

    def __init__(self, law_tuple):
        kind, wcum, atoms, alphas = law_tuple
        self.wcum = np.ascontiguousarray(wcum, dtype=np.float64)
        self.atoms = np.ascontiguousarray(atoms, dtype=np.float64)
        self.alphas = np.ascontiguousarray(alphas, dtype=np.float64)
        cdef double[::1] w = self.wcum
        cdef double[:, ::1] at = self.atoms
        cdef double[::1] al = self.alphas
        self.law.kind = int(kind)
        self.law.n_atoms = w.shape[0]
        self.law.m = al.shape[0] if self.law.kind == _DIRICHLET else at.shape[1]
        self.law.wcum = &w[0] if w.shape[0] else NULL
        self.law.atom_probs = &at[0, 0] if at.shape[0] else NULL
        self.law.alphas = &al[0] if al.shape[0] else NULL


def site_law(kind, wcum, atoms, alphas, master, coords):
    cdef _LawBuffers buf = _LawBuffers((kind, wcum, atoms, alphas))
    cdef int64_t[::1] c = np.ascontiguousarray(coords, dtype=np.int64)
    cdef vector[double] probs = vector[double](buf.law.m)
    a = _site_probs(&buf.law, <uint64_t>int(master), &c[0], c.shape[0], probs.data())
    return [probs[j] for j in range(buf.law.m)], a


def run_master(master, r):
    return _mix64(<uint64_t>int(master) + <uint64_t>(int(r) + 1) * GOLDEN)


cdef void _pack(const int64_t[:, :] jc, int64_t radix, int64_t* keys) noexcept nogil:
    cdef int j, i
    cdef int64_t scale
    for j in range(jc.shape[0]):
        keys[j] = 0
        scale = 1
        for i in range(jc.shape[1]):
            keys[j] += jc[j, i] * scale
            scale *= radix


cdef void _walk_quenched(const Law* law, uint64_t master, const int64_t[:, :] jc,
                         const int64_t* jkeys, const double[:] us, int32_t[:] out) noexcept nogil:
    cdef int m = law.m
    cdef int d = jc.shape[1]
    cdef int i, j
    cdef Py_ssize_t n, row
    cdef int64_t key = 0
    cdef unordered_map[int64_t, Py_ssize_t] sites
    cdef unordered_map[int64_t, Py_ssize_t].iterator it
    cdef vector[double] cums
    cdef vector[double] probs = vector[double](m)
    cdef vector[int64_t] pos = vector[int64_t](d, 0)
    for n in range(us.shape[0]):
        it = sites.find(key)
        if it == sites.end():
            row = cums.size()
            _site_probs(law, master, pos.data(), d, probs.data())
            cums.resize(row + m)
            _cumulate(probs.data(), m, cums.data() + row)
            sites[key] = row
        else:
            row = deref(it).second
        j = _pick(cums.data() + row, m, us[n])
        out[n] = j
        key += jkeys[j]
        for i in range(d):
            pos[i] += jc[j, i]


def quenched_walk(law, master, jump_coords, uniforms, radix):
    cdef _LawBuffers buf = _LawBuffers(law)
    cdef const int64_t[:, :] jc = np.ascontiguousarray(jump_coords, dtype=np.int64)
    cdef const double[:] us = np.ascontiguousarray(uniforms, dtype=np.float64)
    out = np.empty(us.shape[0], dtype=np.int32)
    cdef int32_t[:] o = out
    cdef vector[int64_t] jkeys = vector[int64_t](jc.shape[0])
    cdef uint64_t mst = <uint64_t>int(master)
    _pack(jc, radix, jkeys.data())
    with nogil:
        _walk_quenched(&buf.law, mst, jc, jkeys.data(), us, o)
    return out


def quenched_batch(law, master, jump_coords, uniforms, radix):
    cdef _LawBuffers buf = _LawBuffers(law)
    cdef const int64_t[:, :] jc = np.ascontiguousarray(jump_coords, dtype=np.int64)
    cdef const double[:, :] us = np.ascontiguousarray(uniforms, dtype=np.float64)
    out = np.empty((us.shape[0], us.shape[1]), dtype=np.int32)
    cdef int32_t[:, :] o = out
    cdef vector[int64_t] jkeys = vector[int64_t](jc.shape[0])
    cdef uint64_t mst = <uint64_t>int(master)
    cdef Py_ssize_t r
    _pack(jc, radix, jkeys.data())
    with nogil:
        for r in range(us.shape[0]):
            _walk_quenched(&buf.law, _mix64(mst + <uint64_t>(r + 1) * GOLDEN), jc, jkeys.data(),
                           us[r], o[r])
    return out


cdef class HistoryIndex:
    """Interns unordered histories (dense count vectors) as small integers.

    Id 0 is the empty history; ``child(h, j)`` is the id of h plus one j-jump.
    """
    cdef public int m
    cdef vector[int32_t] _counts
    cdef vector[int32_t] _child
    cdef cmap[vector[int32_t], int32_t] _lookup

    def __init__(self, m):
        self.m = int(m)
        cdef vector[int32_t] empty = vector[int32_t](self.m, 0)
        self._new(empty)

    cdef int32_t _new(self, const vector[int32_t]& key) noexcept nogil:
        cdef int32_t h = <int32_t>(self._counts.size() // self.m)
        cdef int i
        for i in range(self.m):
            self._counts.push_back(key[i])
            self._child.push_back(-1)
        self._lookup[key] = h
        return h

    cdef int32_t _child_of(self, int32_t h, int32_t j) noexcept nogil:
        cdef int32_t c = self._child[h * self.m + j]
        cdef vector[int32_t] key
        cdef cmap[vector[int32_t], int32_t].iterator it
        if c < 0:
            key.assign(self._counts.begin() + h * self.m, self._counts.begin() + (h + 1) * self.m)
            key[j] += 1
            it = self._lookup.find(key)
            if it == self._lookup.end():
                c = self._new(key)
            else:
                c = deref(it).second
            self._child[h * self.m + j] = c
        return c

    def child(self, int h, int j):
        if not 0 <= h < len(self) or not 0 <= j < self.m:
            raise IndexError((h, j))
        return self._child_of(h, j)

    def intern(self, counts):
        cdef vector[int32_t] key = [int(c) for c in counts]
        if <int>key.size() != self.m:
            raise ValueError(f"expected {self.m} counts, got {key.size()}")
        it = self._lookup.find(key)
        if it == self._lookup.end():
            return self._new(key)
        return deref(it).second

    def lookup(self, counts):
        cdef vector[int32_t] key = [int(c) for c in counts]
        it = self._lookup.find(key)
        if it == self._lookup.end():
            return -1
        return deref(it).second

    def counts(self, int h):
        if not 0 <= h < len(self):
            raise IndexError(h)
        return tuple(self._counts[h * self.m + i] for i in range(self.m))

    def copy(self):
        cdef HistoryIndex other = HistoryIndex.__new__(HistoryIndex)
        other.m = self.m
        other._counts = self._counts
        other._child = self._child
        other._lookup = self._lookup
        return other

    def __len__(self):
        return self._counts.size() // self.m


def ingest(HistoryIndex index, jumps, site_ids, n_sites):
    cdef const int32_t[:] js = np.ascontiguousarray(jumps, dtype=np.int32)
    cdef const int64_t[:] ss = np.ascontiguousarray(site_ids, dtype=np.int64)
    out = np.empty(js.shape[0], dtype=np.int32)
    cdef int32_t[:] o = out
    cdef vector[int32_t] site_h = vector[int32_t](<size_t>n_sites, 0)
    cdef Py_ssize_t n
    cdef int32_t h
    with nogil:
        for n in range(js.shape[0]):
            h = site_h[ss[n]]
            o[n] = h
            site_h[ss[n]] = index._child_of(h, js[n])
    return out


def reinforced_walk(HistoryIndex index, fill, jump_coords, uniforms, radix):
    us = np.ascontiguousarray(uniforms, dtype=np.float64)[None, :]
    return reinforced_batch(index, fill, jump_coords, us, radix)[0]


def reinforced_batch(HistoryIndex index, fill, jump_coords, uniforms, radix):
    cdef const int64_t[:, :] jc = np.ascontiguousarray(jump_coords, dtype=np.int64)
    cdef const double[:, :] us = np.ascontiguousarray(uniforms, dtype=np.float64)
    out = np.empty((us.shape[0], us.shape[1]), dtype=np.int32)
    cdef int32_t[:, :] o = out
    cdef int m = index.m
    cdef vector[int64_t] jkeys = vector[int64_t](jc.shape[0])
    cdef vector[double] cache
    cdef vector[char] filled
    cdef unordered_map[int64_t, int32_t] sites
    cdef unordered_map[int64_t, int32_t].iterator it
    cdef Py_ssize_t r, n
    cdef int64_t key
    cdef int32_t h
    cdef int j, i
    _pack(jc, radix, jkeys.data())
    for r in range(us.shape[0]):
        sites.clear()
        key = 0
        for n in range(us.shape[1]):
            it = sites.find(key)
            h = 0 if it == sites.end() else deref(it).second
            if <size_t>h >= filled.size() or not filled[h]:
                row = fill(h)
                if <size_t>h >= filled.size():
                    filled.resize(h + 1, 0)
                    cache.resize((h + 1) * m, 0.0)
                for i in range(m):
                    cache[h * m + i] = row[i]
                filled[h] = 1
            j = _pick(cache.data() + h * m, m, us[r, n])
            o[r, n] = j
            sites[key] = index._child_of(h, j)
            key += jkeys[j]
    return out


def replica_walk(HistoryIndex index, starts, lengths, data, int parity, jump_coords,
                 Py_ssize_t max_steps, radix):
    cdef const int64_t[:] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef const int64_t[:] ln = np.ascontiguousarray(lengths, dtype=np.int64)
    cdef const int32_t[:] dt = np.ascontiguousarray(data, dtype=np.int32)
    cdef const int64_t[:, :] jc = np.ascontiguousarray(jump_coords, dtype=np.int64)
    cdef vector[int64_t] jkeys = vector[int64_t](jc.shape[0])
    cdef vector[int32_t] out
    cdef vector[int64_t] occ
    cdef unordered_map[int64_t, int32_t] sites
    cdef unordered_map[int64_t, int32_t].iterator it
    cdef Py_ssize_t n, n_streams = st.shape[0]
    cdef int64_t key = 0, t, p
    cdef int32_t h, j
    cdef int32_t blocking = -1
    _pack(jc, radix, jkeys.data())
    with nogil:
        for n in range(max_steps):
            it = sites.find(key)
            h = 0 if it == sites.end() else deref(it).second
            if <size_t>h >= occ.size():
                occ.resize(h + 1, 0)
            occ[h] += 1
            t = occ[h]
            p = 2 * t - 2 if parity == 1 else 2 * t - 1
            if h >= n_streams or p >= ln[h]:
                blocking = h
                break
            j = dt[st[h] + p]
            out.push_back(j)
            sites[key] = index._child_of(h, j)
            key += jkeys[j]
    counts = {i: occ[i] for i in range(occ.size()) if occ[i]}
    return np.asarray(out, dtype=np.int32), blocking, counts
