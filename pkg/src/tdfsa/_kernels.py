"""Compiled inner loops for the per-frame hot path.

Pure functions over plain arrays; all protocol logic stays in the
calling modules.  Each kernel is a direct transcription of the
corresponding slot-by-slot or gain-by-gain recurrence, compiled once
per process and cached on disk.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def advance_node_ages(gen: np.ndarray, x: np.ndarray, w: int) -> int:
    """Advance node ages across a frame of ``w`` slots, in place.

    ``gen[i, s]`` flags an update generated at the start of slot offset
    ``s`` by node ``i``.  Returns the per-slot age sum over the frame:
    the age at offset ``s`` is ``s`` minus the latest generation offset
    strictly before ``s`` (the pre-frame state acts as offset ``-x``).
    """
    n = x.shape[0]
    total = 0
    for i in range(n):
        last = -x[i]
        for s in range(w):
            total += s - last
            if gen[i, s]:
                last = s
        x[i] = w - last
    return total


@numba.njit(cache=True)
def classify_slots(slots: np.ndarray, w: int) -> tuple[int, int, np.ndarray]:
    """Count singleton/empty slots and flag transmitters that were alone."""
    counts = np.zeros(w, np.int64)
    for s in slots:
        counts[s] += 1
    n_singleton = 0
    n_empty = 0
    for c in counts:
        if c == 0:
            n_empty += 1
        elif c == 1:
            n_singleton += 1
    winners = np.empty(len(slots), np.bool_)
    for idx in range(len(slots)):
        winners[idx] = counts[slots[idx]] == 1
    return n_singleton, n_empty, winners


@numba.njit(cache=True)
def decide_threshold(
    mass: np.ndarray, n_nodes: float, w_min: float, tol: float
) -> tuple[int, float]:
    """Highest gain whose expected tail reaches ``w_min``, and that tail.

    Falls back to the smallest positive supported gain; returns
    threshold 0 when no positive gain carries mass.
    """
    tail = 0.0
    threshold = 0
    tail_at_threshold = 0.0
    smallest = 0
    tail_at_smallest = 0.0
    for a in range(mass.shape[0] - 1, 0, -1):
        tail += n_nodes * mass[a]
        if mass[a] > 0.0:
            smallest = a
            tail_at_smallest = tail
            if threshold == 0 and tail >= w_min - tol:
                threshold = a
                tail_at_threshold = tail
    if threshold == 0:
        return smallest, tail_at_smallest
    return threshold, tail_at_threshold


@numba.njit(cache=True)
def propagate(
    mass: np.ndarray,
    lam: float,
    w: int,
    max_ap_age: int,
    h_cap: int,
    prune_eps: float,
) -> tuple[np.ndarray, int, int]:
    """Arrival propagation: one geometric tail per (source gain, offset) pair.

    Seeds a difference array with every tail's head and (damped) end,
    resolves all tails with one first-order scan, then prunes and
    normalizes.  Returns the dense output, its last supported index,
    and the number of source gains visited.
    """
    beta = 1.0 - lam
    top = max_ap_age + w
    out = np.zeros(top + 1)
    beta_w = beta**w
    for b in range(mass.shape[0]):
        out[b] = beta_w * mass[b]

    diff = np.zeros(top + 2)
    n_sources = 0
    for b in range(mass.shape[0]):
        fb = mass[b]
        if fb <= 0.0:
            continue
        n_sources += 1
        h_max = max_ap_age - b
        if h_cap < h_max:
            h_max = h_cap
        damp = beta**h_max
        value = fb * lam * lam / (1.0 - damp)
        p = b + w
        for _ in range(w):
            diff[p] += value
            diff[p + h_max] -= value * damp
            p -= 1
            value *= beta
    run = 0.0
    for a in range(top + 1):
        run = beta * run + diff[a]
        out[a] += run

    total = 0.0
    for a in range(top + 1):
        total += out[a]
    cutoff = prune_eps * total
    norm = 0.0
    for a in range(top + 1):
        if out[a] < cutoff:
            out[a] = 0.0
        norm += out[a]
    last = 0
    for a in range(top + 1):
        out[a] /= norm
        if out[a] > 0.0:
            last = a
    return out, last, n_sources
