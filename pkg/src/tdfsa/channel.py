"""Uniform slot selection within a frame and slot-status classification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = ["FrameObservation", "run_frame"]


@dataclass(frozen=True)
class FrameObservation:
    """What the AP sees at the end of one frame.

    ``success_gains`` is the multiset of age-gains of the delivered
    updates, stored as ``{gain: count}``; its counts sum to
    ``n_singleton``.
    """

    n_singleton: int
    n_empty: int
    n_collision: int
    success_gains: dict[int, int] = field(default_factory=dict)
    success_node_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self) -> None:
        if min(self.n_singleton, self.n_empty, self.n_collision) < 0:
            raise ValueError("slot counts must be nonnegative")
        if sum(self.success_gains.values()) != self.n_singleton:
            raise ValueError("success_gains counts must sum to n_singleton")
        if len(self.success_node_ids) != self.n_singleton:
            raise ValueError("one delivered node per singleton slot")

    @property
    def slot_total(self) -> int:
        return self.n_singleton + self.n_empty + self.n_collision

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.n_singleton, self.n_empty, self.n_collision)


def run_frame(
    node_ids: np.ndarray | list[int],
    gains: np.ndarray | list[int],
    frame_len: int,
    rng: np.random.Generator,
) -> FrameObservation:
    """Simulate one contention frame.

    Every listed node picks one slot uniformly at random (one draw per
    node, in the given order, so a fixed seed fixes the outcome).  A slot
    with exactly one transmitter delivers that node's update; its
    age-gain is recorded in the success multiset.
    """
    if frame_len < 1:
        raise ValueError(f"frame_len must be >= 1, got {frame_len}")
    ids = np.asarray(node_ids, dtype=np.int64)
    g = np.asarray(gains, dtype=np.int64)
    if ids.shape != g.shape:
        raise ValueError("node_ids and gains must align")

    slots = rng.integers(0, frame_len, size=len(ids))
    n_singleton, n_empty, winner_mask = _kernels.classify_slots(slots, frame_len)
    n_collision = frame_len - n_singleton - n_empty

    winners = np.nonzero(winner_mask)[0]
    success_gains: dict[int, int] = {}
    for a in g[winners]:
        a = int(a)
        success_gains[a] = success_gains.get(a, 0) + 1
    return FrameObservation(
        n_singleton=n_singleton,
        n_empty=n_empty,
        n_collision=n_collision,
        success_gains=success_gains,
        success_node_ids=ids[winners],
    )
