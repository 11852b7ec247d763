# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of kernels.reference. Bit-identical by contract.

Keep every arithmetic expression in the same shape as the reference: the
build disables FMA contraction so plain multiply/add sequences round the
same way numpy's elementwise ops do. No transcendentals besides sqrt,
which IEEE 754 rounds correctly in both worlds.
"""

import numpy as np

from libc.math cimport INFINITY, sqrt
from libc.stdint cimport int8_t, int32_t

ALIVE = 0
WET = 1
BURNING = 2
EXTINGUISHED = 3
BURNED_OUT = 4

cdef int8_t _ALIVE = 0
cdef int8_t _WET = 1
cdef int8_t _BURNING = 2


def count_spread_candidates(int32_t[::1] edge_src, int32_t[::1] edge_dst,
                            int8_t[::1] state):
    """Number of directed edges from a burning tree into an alive tree."""
    cdef Py_ssize_t e, m = edge_src.shape[0]
    cdef long count = 0
    for e in range(m):
        if state[edge_src[e]] == _BURNING and state[edge_dst[e]] == _ALIVE:
            count += 1
    return count


def spread_ignitions(int32_t[::1] edge_src, int32_t[::1] edge_dst,
                     double[::1] edge_prob, int8_t[::1] state,
                     double[::1] draws):
    """Trees ignited this step, as a sorted unique int32 array."""
    cdef Py_ssize_t e, m = edge_src.shape[0]
    cdef Py_ssize_t n = state.shape[0]
    cdef long expected = 0
    for e in range(m):
        if state[edge_src[e]] == _BURNING and state[edge_dst[e]] == _ALIVE:
            expected += 1
    if expected != draws.shape[0]:
        raise ValueError(f"expected {expected} draws, got {draws.shape[0]}")
    if expected == 0:
        return np.empty(0, dtype=np.int32)

    hit_arr = np.zeros(n, dtype=np.int8)
    cdef int8_t[::1] hit = hit_arr
    cdef Py_ssize_t k = 0
    cdef long n_hit = 0
    cdef int32_t dst
    for e in range(m):
        if state[edge_src[e]] == _BURNING and state[edge_dst[e]] == _ALIVE:
            if draws[k] < edge_prob[e]:
                dst = edge_dst[e]
                if not hit[dst]:
                    hit[dst] = 1
                    n_hit += 1
            k += 1
    out_arr = np.empty(n_hit, dtype=np.int32)
    cdef int32_t[::1] out = out_arr
    cdef Py_ssize_t t, w = 0
    for t in range(n):
        if hit[t]:
            out[w] = <int32_t> t
            w += 1
    return out_arr


def nearest_burning(double[:, ::1] xy, int8_t[::1] state,
                    double qx, double qy):
    """Index and distance of the burning tree closest to (qx, qy)."""
    cdef Py_ssize_t t, n = state.shape[0]
    cdef Py_ssize_t best = -1
    cdef double best_d2 = INFINITY
    cdef double dx, dy, d2
    for t in range(n):
        if state[t] != _BURNING:
            continue
        dx = xy[t, 0] - qx
        dy = xy[t, 1] - qy
        d2 = dx * dx + dy * dy
        if d2 < best_d2:
            best_d2 = d2
            best = t
    if best < 0:
        return -1, float("inf")
    return int(best), float(sqrt(best_d2))


def count_burning_within(double[:, ::1] xy, int8_t[::1] state,
                         double cx, double cy, double radius):
    """Burning trees inside the closed disc of ``radius`` around (cx, cy)."""
    cdef Py_ssize_t t, n = state.shape[0]
    cdef double dx, dy, r2 = radius * radius
    cdef long count = 0
    for t in range(n):
        if state[t] != _BURNING:
            continue
        dx = xy[t, 0] - cx
        dy = xy[t, 1] - cy
        if dx * dx + dy * dy <= r2:
            count += 1
    return count


def drop_effects(double[:, ::1] xy, int8_t[::1] state,
                 double x, double y, double radius):
    """Trees a water drop at (x, y) touches: (burning, alive, wet) indices."""
    cdef Py_ssize_t t, n = state.shape[0]
    cdef double dx, dy, r2 = radius * radius
    cdef long nb = 0, na = 0, nw = 0
    cdef int8_t s
    for t in range(n):
        s = state[t]
        if s > _BURNING:
            continue
        dx = xy[t, 0] - x
        dy = xy[t, 1] - y
        if dx * dx + dy * dy <= r2:
            if s == _BURNING:
                nb += 1
            elif s == _ALIVE:
                na += 1
            else:
                nw += 1
    burning_arr = np.empty(nb, dtype=np.int32)
    alive_arr = np.empty(na, dtype=np.int32)
    wet_arr = np.empty(nw, dtype=np.int32)
    cdef int32_t[::1] burning = burning_arr
    cdef int32_t[::1] alive = alive_arr
    cdef int32_t[::1] wet = wet_arr
    cdef Py_ssize_t wb = 0, wa = 0, ww = 0
    for t in range(n):
        s = state[t]
        if s > _BURNING:
            continue
        dx = xy[t, 0] - x
        dy = xy[t, 1] - y
        if dx * dx + dy * dy <= r2:
            if s == _BURNING:
                burning[wb] = <int32_t> t
                wb += 1
            elif s == _ALIVE:
                alive[wa] = <int32_t> t
                wa += 1
            else:
                wet[ww] = <int32_t> t
                ww += 1
    return burning_arr, alive_arr, wet_arr
