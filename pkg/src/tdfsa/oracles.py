"""Brute-force verification suites for the core closed forms.

These deliberately re-derive results by exhaustive search or plain
Monte-Carlo counting, independent of the production code paths they
check, and power both the ``oracle`` CLI subcommand and the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .estimator import allocate_gain_counts
from .ideal import GainHistogram, aar, ideal_decision

__all__ = [
    "OracleReport",
    "exhaustive_decision",
    "enumerate_allocations",
    "best_allocation_value",
    "empirical_aar",
    "empirical_success_rate",
    "empirical_throughput",
    "decision_rule_suite",
    "allocation_suite",
    "channel_law_suite",
]

_TIE_TOL = 1e-12


@dataclass
class OracleReport:
    """Outcome of one verification suite."""

    name: str
    passed: bool
    checked: int
    failures: list[str]

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = f"{status} {self.name}: {self.checked} cases"
        if self.failures:
            line += f", {len(self.failures)} failures"
        return line


# ----------------------------------------------------------------------
# Known-gain decision rule vs. exhaustive search


def exhaustive_decision(hist: GainHistogram, n_nodes: int, w_max: int | None = None):
    """Grid argmax of the per-slot age-reduction rate.

    Scans every supported threshold and every frame length up to the
    population size; ties go to the larger threshold, then the smaller
    frame.
    """
    w_max = n_nodes if w_max is None else w_max
    best = None
    for threshold in sorted(hist.counts):
        for w in range(1, w_max + 1):
            value = aar(hist, threshold, w, n_nodes)
            if best is None:
                best = (value, threshold, w)
                continue
            better = value > best[0] + _TIE_TOL
            tied = abs(value - best[0]) <= _TIE_TOL
            if better or (tied and (threshold, -w) > (best[1], -best[2])):
                best = (value, threshold, w)
    return best[1], best[2], best[0]


def _random_histogram(rng: np.random.Generator, n_max: int, gain_max: int) -> GainHistogram:
    while True:
        counts: dict[int, int] = {}
        budget = int(rng.integers(1, n_max + 1))
        gains = rng.permutation(gain_max + 1)[: rng.integers(1, gain_max + 2)]
        for gain in sorted(int(g) for g in gains):
            if budget <= 0:
                break
            c = int(rng.integers(1, budget + 1))
            counts[gain] = c
            budget -= c
        if any(a > 0 and c > 0 for a, c in counts.items()):
            return GainHistogram(counts)


def decision_rule_suite(
    cases: int = 200, seed: int = 20240601, n_max: int = 30, gain_max: int = 6
) -> OracleReport:
    """Random histograms: exhaustive argmax must match the closed-form rule."""
    rng = np.random.default_rng(seed)
    failures = []
    for _ in range(cases):
        hist = _random_histogram(rng, n_max, gain_max)
        n_nodes = max(hist.total, int(rng.integers(hist.total, n_max + 1)))
        got = ideal_decision(hist)
        threshold, frame_len, _ = exhaustive_decision(hist, n_nodes)
        if (got.threshold, got.frame_len) != (threshold, frame_len):
            failures.append(
                f"hist={hist.counts} N={n_nodes}: rule gives ({got.threshold},{got.frame_len}), "
                f"search gives ({threshold},{frame_len})"
            )
    return OracleReport("known-gain decision rule", not failures, cases, failures)


# ----------------------------------------------------------------------
# Active-count allocation vs. enumeration


def enumerate_allocations(l: int, success_gains: dict[int, int]):
    """Yield every count vector >= the successes that sums to ``l``."""
    gains = sorted(success_gains)
    extra = l - sum(success_gains.values())

    def rec(i: int, left: int, acc: dict[int, int]):
        if i == len(gains) - 1:
            acc[gains[i]] = success_gains[gains[i]] + left
            yield dict(acc)
            return
        for take in range(left + 1):
            acc[gains[i]] = success_gains[gains[i]] + take
            yield from rec(i + 1, left - take, acc)

    yield from rec(0, extra, {})


def _allocation_value(counts: dict[int, int], success_gains: dict[int, int]) -> int:
    value = 1
    for a, s in success_gains.items():
        value *= comb(counts.get(a, 0), s)
    return value


def best_allocation_value(l: int, success_gains: dict[int, int]) -> int:
    """Exact integer maximum of the success-multiset likelihood numerator."""
    return max(
        _allocation_value(counts, success_gains)
        for counts in enumerate_allocations(l, success_gains)
    )


def allocation_suite(l_max: int = 12, total_max: int = 4, distinct_max: int = 3) -> OracleReport:
    """Every small instance: greedy allocation must attain the enumeration max."""
    gain_pool = (2, 5, 9)
    multisets: list[dict[int, int]] = []
    for k in range(1, distinct_max + 1):
        def build(i: int, left: int, acc: list[int]):
            if i == k:
                multisets.append({gain_pool[j]: acc[j] for j in range(k)})
                return
            for c in range(1, left - (k - i - 1) + 1):
                build(i + 1, left - c, acc + [c])

        build(0, total_max, [])
    failures = []
    checked = 0
    for success_gains in multisets:
        n_s = sum(success_gains.values())
        for l in range(n_s, l_max + 1):
            checked += 1
            alloc = allocate_gain_counts(l, success_gains)
            got = _allocation_value(alloc.counts, success_gains)
            want = best_allocation_value(l, success_gains)
            if got != want:
                failures.append(
                    f"l={l} successes={success_gains}: greedy value {got} < enumeration {want}"
                )
    return OracleReport("active-count allocation", not failures, checked, failures)


# ----------------------------------------------------------------------
# Channel law by direct counting


def empirical_aar(
    hist: GainHistogram,
    threshold: int,
    frame_len: int,
    n_nodes: int,
    frames: int,
    rng: np.random.Generator,
) -> float:
    """Monte-Carlo estimate of the per-slot AoI reduction of one frame.

    Repeats the frame from the same start state: nodes at or above the
    threshold pick uniform slots, lone transmitters deliver their gain,
    and every node ages by the frame either way.  The sample mean of
    ``sum(delivered gains) / (N * w) - 1`` estimates :func:`aar`.
    """
    gains = np.repeat(
        [a for a in sorted(hist.counts) if a >= threshold],
        [hist.counts[a] for a in sorted(hist.counts) if a >= threshold],
    ).astype(np.int64)
    n_active = len(gains)
    if n_active == 0:
        return -1.0
    delivered = 0
    block = max(1, 200_000 // n_active)
    remaining = frames
    while remaining > 0:
        f = min(block, remaining)
        slots = rng.integers(0, frame_len, size=(f, n_active))
        flat = slots + (np.arange(f) * frame_len)[:, None]
        occupancy = np.bincount(flat.ravel(), minlength=f * frame_len)
        winners = occupancy[flat] == 1
        delivered += int((winners * gains[None, :]).sum())
        remaining -= f
    return delivered / (frames * n_nodes * frame_len) - 1.0


def _singleton_counts(n: int, w: int, frames: int, rng: np.random.Generator) -> int:
    """Total transmitters that landed alone, over all frames."""
    total = 0
    block = max(1, 200_000 // max(n, 1))
    remaining = frames
    while remaining > 0:
        f = min(block, remaining)
        slots = rng.integers(0, w, size=(f, n))
        flat = slots + (np.arange(f) * w)[:, None]
        occupancy = np.bincount(flat.ravel(), minlength=f * w)
        total += int((occupancy == 1).sum())
        remaining -= f
    return total


def empirical_success_rate(n: int, w: int, frames: int, rng: np.random.Generator) -> float:
    """Fraction of transmissions delivered when ``n`` nodes share ``w`` slots."""
    return _singleton_counts(n, w, frames, rng) / (frames * n)


def empirical_throughput(n: int, w: int, frames: int, rng: np.random.Generator) -> float:
    """Delivered updates per slot when ``n`` nodes share ``w`` slots."""
    return _singleton_counts(n, w, frames, rng) / (frames * w)


def channel_law_suite(seed: int = 20240602) -> OracleReport:
    """Success probability and throughput-optimal frame length by counting."""
    rng = np.random.default_rng(seed)
    failures = []
    rate = empirical_success_rate(5, 5, 100_000, rng)
    expected = (1 - 1 / 5) ** 4
    if abs(rate - expected) > 0.005:
        failures.append(f"success rate at n=5,w=5: {rate:.5f} vs {expected:.5f} +- 0.005")
    frames_for = {2: 100_000, 5: 200_000, 10: 600_000}
    for n, frames in frames_for.items():
        curve = [empirical_throughput(n, w, frames, rng) for w in range(1, 21)]
        best_w = 1 + int(np.argmax(curve))
        if best_w != n:
            failures.append(f"throughput argmax at n={n}: w={best_w}, expected w={n}")
    return OracleReport("channel contention law", not failures, 4, failures)
