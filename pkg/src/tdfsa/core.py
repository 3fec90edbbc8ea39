"""Ground-truth node/AP state, per-frame age recursions, and metric accumulation.

Time is slotted.  A frame occupies the slot interval ``[frame_start,
frame_start + frame_len)``.  Each node holds at most one (its freshest)
update of age ``x``; the AP-side age for that node is ``y``; the age-gain
``g = y - x`` is nonnegative and positive exactly when the node has an
undelivered, fresher update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = [
    "FrameDecision",
    "NodeState",
    "MetricsAccumulator",
    "Network",
    "advance_node_age",
    "advance_ap_age",
    "accumulate_slot_metrics",
    "initial_ap_ages",
]


@dataclass(frozen=True)
class FrameDecision:
    """Broadcast parameters of one frame: contention threshold and length."""

    threshold: int
    frame_len: int
    frame_start: int = 0

    def __post_init__(self) -> None:
        if self.frame_len < 1:
            raise ValueError(f"frame_len must be >= 1, got {self.frame_len}")
        if self.threshold < 1:
            raise ValueError(f"threshold must be >= 1, got {self.threshold}")

    @property
    def frame_end(self) -> int:
        """First slot index after this frame."""
        return self.frame_start + self.frame_len


@dataclass(frozen=True)
class NodeState:
    """Per-node ground truth at a frame boundary.

    ``x`` is the age (in slots) of the freshest update the node holds,
    ``y`` the AP-side age for this node.  Both are >= 1 at frame
    boundaries; ``has_update`` mirrors ``gain > 0``.
    """

    node_id: int
    x: int
    y: int
    has_update: bool

    def __post_init__(self) -> None:
        if self.x < 1 or self.y < 1:
            raise ValueError(f"ages must be >= 1, got x={self.x}, y={self.y}")
        if self.y < self.x:
            raise ValueError(f"AP age {self.y} below node age {self.x}")
        if self.has_update != (self.y > self.x):
            raise ValueError("has_update inconsistent with age-gain")

    @property
    def gain(self) -> int:
        return self.y - self.x

    @classmethod
    def fresh(cls, node_id: int, ap_age: int) -> "NodeState":
        """A node whose held update is brand new (age 1)."""
        return cls(node_id=node_id, x=1, y=ap_age, has_update=ap_age > 1)


def advance_node_age(
    state: NodeState, generation_slots: set[int] | frozenset[int], frame: FrameDecision
) -> NodeState:
    """Advance the node-side age across one frame.

    With no generation the age grows by the frame length; otherwise the
    age restarts from the latest generation instant, so the new age is
    the distance from that slot to the next frame boundary.
    """
    for k in generation_slots:
        if not frame.frame_start <= k < frame.frame_end:
            raise ValueError(f"generation slot {k} outside frame [{frame.frame_start}, {frame.frame_end})")
    if generation_slots:
        new_x = frame.frame_end - max(generation_slots)
    else:
        new_x = state.x + frame.frame_len
    return NodeState(
        node_id=state.node_id,
        x=new_x,
        y=state.y,  # caller updates the AP side separately
        has_update=state.y > new_x,
    )


def advance_ap_age(state: NodeState, success: bool, frame: FrameDecision) -> NodeState:
    """Advance the AP-side age across one frame.

    Decoding happens at frame end: on success the AP holds the update the
    node had at frame start (aged by the frame), otherwise its copy just
    ages.  ``state.x`` must still be the frame-start value, so apply this
    before :func:`advance_node_age`.
    """
    new_y = (state.x if success else state.y) + frame.frame_len
    return NodeState(
        node_id=state.node_id,
        x=state.x,
        y=new_y,
        has_update=new_y > state.x,
    )


@dataclass
class MetricsAccumulator:
    """Running metric sums over the measured portion of a run.

    All sums are exact integers; rates are formed lazily.  ``sum_gain``
    and ``sum_ap_age`` are per-slot network totals of ``y - x`` and
    ``y``; ``complexity_step2``/``complexity_step3`` count estimator work
    (likelihood-term and propagation-term evaluations, respectively).
    """

    slot_count: int = 0
    sum_gain: int = 0
    sum_ap_age: int = 0
    success_count: int = 0
    frame_len_histogram: dict[int, int] = field(default_factory=dict)
    complexity_step2: int = 0
    complexity_step3: int = 0

    def add_frame(
        self,
        frame_len: int,
        sum_x_slots: int,
        sum_y_slots: int,
        successes: int,
        step2: int = 0,
        step3: int = 0,
    ) -> None:
        if min(frame_len, sum_x_slots, sum_y_slots, successes, step2, step3) < 0:
            raise ValueError("metric contributions must be nonnegative")
        self.slot_count += frame_len
        self.sum_gain += sum_y_slots - sum_x_slots
        self.sum_ap_age += sum_y_slots
        self.success_count += successes
        self.frame_len_histogram[frame_len] = self.frame_len_histogram.get(frame_len, 0) + 1
        self.complexity_step2 += step2
        self.complexity_step3 += step3

    # Rate views ------------------------------------------------------

    def average_age_gain(self, n_nodes: int) -> float:
        """Time-averaged per-node age-gain (AAG)."""
        return self.sum_gain / (n_nodes * self.slot_count)

    def average_ap_age(self, n_nodes: int) -> float:
        """Time-averaged per-node AP-side age (AAoI)."""
        return self.sum_ap_age / (n_nodes * self.slot_count)

    def average_node_age(self, n_nodes: int) -> float:
        return (self.sum_ap_age - self.sum_gain) / (n_nodes * self.slot_count)

    def throughput(self) -> float:
        """Delivered updates per slot."""
        return self.success_count / self.slot_count

    def complexity_per_slot(self) -> float:
        return (self.complexity_step2 + self.complexity_step3) / self.slot_count


def accumulate_slot_metrics(
    acc: MetricsAccumulator, slot_ages: list[tuple[int, int]]
) -> MetricsAccumulator:
    """Fold one slot's ``(y, x)`` pairs for all nodes into ``acc``.

    Scalar companion of :meth:`Network.advance_frame`'s closed-form
    accumulation; handy for oracles and small traces.
    """
    sum_y = sum(y for y, _ in slot_ages)
    sum_x = sum(x for _, x in slot_ages)
    acc.slot_count += 1
    acc.sum_gain += sum_y - sum_x
    acc.sum_ap_age += sum_y
    return acc


@dataclass
class FrameAges:
    """Per-frame metric contributions returned by :meth:`Network.advance_frame`."""

    sum_x_slots: int
    sum_y_slots: int


class Network:
    """Vectorized ground truth for all nodes of one simulated network.

    Holds the node-side and AP-side age vectors and advances both across
    a frame, sampling the per-slot update generations.  The per-slot
    metric sums fall out in closed form: within a frame the AP-side age
    of node ``i`` at slot ``frame_start + s`` is ``y_i + s`` (decoding
    only happens at frame end), while the node-side age ramps by one per
    slot and restarts after each generation.
    """

    def __init__(self, n_nodes: int, initial_ap_age: np.ndarray | list[int]):
        y0 = np.asarray(initial_ap_age, dtype=np.int64)
        if y0.shape != (n_nodes,):
            raise ValueError(f"initial_ap_age must have shape ({n_nodes},)")
        if (y0 < 1).any():
            raise ValueError("initial AP ages must be >= 1")
        self.n_nodes = n_nodes
        self.x = np.ones(n_nodes, dtype=np.int64)  # nodes start with fresh updates
        self.y = y0.copy()
        self.slot = 0

    def gains(self) -> np.ndarray:
        return self.y - self.x

    def max_ap_age(self) -> int:
        return int(self.y.max())

    def backlogged_ids(self) -> np.ndarray:
        return np.nonzero(self.y > self.x)[0]

    def advance_frame(
        self, frame_len: int, success_ids: np.ndarray, rng: np.random.Generator, lam: float
    ) -> FrameAges:
        """Advance all ages across one frame and return per-slot metric sums.

        ``success_ids`` are the nodes delivered this frame; their AP-side
        age restarts from the frame-start node age.  Generations are
        Bernoulli(``lam``) per node per slot, drawn as one ``(N, w)``
        block so the stream consumption order is fixed.
        """
        w = int(frame_len)
        n = self.n_nodes
        sum_y_slots = w * int(self.y.sum()) + n * (w * (w - 1) // 2)

        # AP side first: it needs the frame-start node ages.
        self.y += w
        if len(success_ids):
            self.y[success_ids] = self.x[success_ids] + w

        gen = rng.random((n, w)) < lam
        sum_x_slots = int(_kernels.advance_node_ages(gen, self.x, w))

        self.slot += w
        return FrameAges(sum_x_slots=sum_x_slots, sum_y_slots=sum_y_slots)


def initial_ap_ages(n_nodes: int, mode: str | list[int], uniform_value: int | None = None) -> np.ndarray:
    """Build the initial AP-side age vector.

    ``"ramp"`` gives the diverse default ``y_i = i + 1``; ``"uniform"``
    sets every node to ``uniform_value`` (default ``n_nodes``), which is
    the stress case for stability studies.  A list is taken verbatim.
    """
    if isinstance(mode, str):
        if mode == "ramp":
            return np.arange(1, n_nodes + 1, dtype=np.int64)
        if mode == "uniform":
            value = n_nodes if uniform_value is None else uniform_value
            if value < 1:
                raise ValueError("uniform initial AP age must be >= 1")
            return np.full(n_nodes, value, dtype=np.int64)
        raise ValueError(f"unknown initial AP age mode {mode!r}")
    ages = np.asarray(mode, dtype=np.int64)
    if ages.shape != (n_nodes,):
        raise ValueError(f"explicit initial ages must have length {n_nodes}")
    if (ages < 1).any():
        raise ValueError("initial AP ages must be >= 1")
    return ages
