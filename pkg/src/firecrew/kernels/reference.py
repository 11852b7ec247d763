"""Pure numpy implementations of the per-step world queries.

These are the reference semantics. The compiled backend in ``_speedups``
must return bit-identical results for every function here; the equivalence
suite compares both on randomized worlds. Functions are pure queries: all
state mutation happens in the caller so the two backends cannot drift.

Conventions shared by both backends:
  * distances compare as squared euclidean, radii are closed (``<=``),
  * ties in nearest-point queries resolve to the lowest tree index,
  * spread candidates enumerate in ascending edge order and consume one
    uniform draw each; a draw strictly below the edge probability ignites.
"""
from __future__ import annotations

import numpy as np

ALIVE = 0
WET = 1
BURNING = 2
EXTINGUISHED = 3
BURNED_OUT = 4


def count_spread_candidates(edge_src: np.ndarray, edge_dst: np.ndarray,
                            state: np.ndarray) -> int:
    """Number of directed edges from a burning tree into an alive tree."""
    mask = (state[edge_src] == BURNING) & (state[edge_dst] == ALIVE)
    return int(np.count_nonzero(mask))


def spread_ignitions(edge_src: np.ndarray, edge_dst: np.ndarray,
                     edge_prob: np.ndarray, state: np.ndarray,
                     draws: np.ndarray) -> np.ndarray:
    """Trees ignited this step, as a sorted unique int32 array.

    ``draws`` must hold exactly one uniform per candidate edge, in ascending
    edge order (the order ``count_spread_candidates`` implies).
    """
    cand = np.flatnonzero((state[edge_src] == BURNING) & (state[edge_dst] == ALIVE))
    if cand.size != draws.size:
        raise ValueError(f"expected {cand.size} draws, got {draws.size}")
    if cand.size == 0:
        return np.empty(0, dtype=np.int32)
    hit = cand[draws < edge_prob[cand]]
    return np.unique(edge_dst[hit]).astype(np.int32)


def nearest_burning(xy: np.ndarray, state: np.ndarray,
                    qx: float, qy: float) -> tuple[int, float]:
    """Index and distance of the burning tree closest to (qx, qy).

    Returns (-1, inf) when nothing is burning.
    """
    mask = state == BURNING
    if not mask.any():
        return -1, float("inf")
    dx = xy[:, 0] - qx
    dy = xy[:, 1] - qy
    d2 = dx * dx + dy * dy
    d2 = np.where(mask, d2, np.inf)
    i = int(np.argmin(d2))
    return i, float(np.sqrt(d2[i]))


def count_burning_within(xy: np.ndarray, state: np.ndarray,
                         cx: float, cy: float, radius: float) -> int:
    """Burning trees inside the closed disc of ``radius`` around (cx, cy)."""
    dx = xy[:, 0] - cx
    dy = xy[:, 1] - cy
    d2 = dx * dx + dy * dy
    return int(np.count_nonzero((state == BURNING) & (d2 <= radius * radius)))


def drop_effects(xy: np.ndarray, state: np.ndarray, x: float, y: float,
                 radius: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Trees a water drop at (x, y) would touch, split by current state.

    Returns (burning, alive, wet) index arrays, each ascending int32:
    burning trees get extinguished, alive trees get soaked, wet trees get
    their timer refreshed. The caller applies the transitions.
    """
    dx = xy[:, 0] - x
    dy = xy[:, 1] - y
    inside = (dx * dx + dy * dy) <= radius * radius
    burning = np.flatnonzero(inside & (state == BURNING)).astype(np.int32)
    alive = np.flatnonzero(inside & (state == ALIVE)).astype(np.int32)
    wet = np.flatnonzero(inside & (state == WET)).astype(np.int32)
    return burning, alive, wet
