"""Closed-form age-reduction rate and the known-gain decision rule.

When the AP knows every node's age-gain, the per-slot average AoI
reduction of a frame has a closed form, and it is maximized by letting
only the highest-gain nodes contend in a frame sized to their count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["GainHistogram", "NoBacklogError", "aar", "ideal_decision", "throughput"]


class NoBacklogError(ValueError):
    """Raised when a decision is requested but no node holds an update."""


@dataclass(frozen=True)
class GainHistogram:
    """Node counts per age-gain value (the exact multiset view)."""

    counts: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for gain, count in self.counts.items():
            if gain < 0:
                raise ValueError(f"age-gain must be >= 0, got {gain}")
            if count < 0:
                raise ValueError(f"count must be >= 0, got {count} at gain {gain}")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def max_gain(self) -> int:
        """Largest gain with a positive count; raises if there is none."""
        positive = [a for a, n in self.counts.items() if n > 0 and a > 0]
        if not positive:
            raise NoBacklogError("all nodes have zero age-gain")
        return max(positive)

    def active_count(self, threshold: int) -> int:
        return sum(n for a, n in self.counts.items() if a >= threshold)

    def active_gain_sum(self, threshold: int) -> int:
        return sum(a * n for a, n in self.counts.items() if a >= threshold)


def aar(hist: GainHistogram, threshold: int, frame_len: int, n_nodes: int) -> float:
    """Per-slot average AoI reduction of one frame under known gains.

    Equals ``(1/(N*w)) * (1 - 1/w)**(n-1) * sum_{a>=threshold} a*n^a - 1``
    with ``n`` the number of contending nodes.  With nobody above the
    threshold every age grows by the full frame, the limiting value -1.
    """
    if frame_len < 1:
        raise ValueError(f"frame_len must be >= 1, got {frame_len}")
    if n_nodes < hist.total:
        raise ValueError(f"population {n_nodes} below histogram total {hist.total}")
    n_active = hist.active_count(threshold)
    if n_active == 0:
        return -1.0
    p_success = (1.0 - 1.0 / frame_len) ** (n_active - 1)
    return p_success * hist.active_gain_sum(threshold) / (n_nodes * frame_len) - 1.0


def ideal_decision(hist: GainHistogram, frame_start: int = 0):
    """Threshold and frame length that maximize :func:`aar`.

    Picks the largest present gain as threshold and sizes the frame to
    the number of nodes holding it.
    """
    from .core import FrameDecision

    top = hist.max_gain  # raises NoBacklogError when nothing is pending
    return FrameDecision(threshold=top, frame_len=hist.counts[top], frame_start=frame_start)


def throughput(n_active: int, frame_len: int) -> float:
    """Expected delivered updates per slot: ``(n/w) * (1 - 1/w)**(n-1)``."""
    if n_active < 0 or frame_len < 1:
        raise ValueError("need n_active >= 0 and frame_len >= 1")
    if n_active == 0:
        return 0.0
    return (n_active / frame_len) * (1.0 - 1.0 / frame_len) ** (n_active - 1)
