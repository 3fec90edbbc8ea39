"""Frame-level simulation driver shared by all access policies.

Every protocol exposes ``plan`` (decide the frame and who transmits)
and ``finish`` (post-frame learning, if any).  ``run_one_frame`` wires
one frame end to end: contention, decoding, age advancement, and the
per-frame metric sums.  Random draws happen in a fixed order (policy
coins, slot choices, update generations), so a seed pins a whole run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel
from .core import Network
from .estimator import ApEstimator, FrameCounters

__all__ = ["FrameRecord", "TdfsaProtocol", "run_one_frame"]


@dataclass(frozen=True)
class FrameRecord:
    """Everything the metrics layer needs to know about one frame."""

    frame_start: int
    frame_len: int
    threshold: int
    n_singleton: int
    sum_x_slots: int
    sum_y_slots: int
    step2_evaluations: int = 0
    step3_terms: int = 0
    reset_triggered: bool = False


class TdfsaProtocol:
    """Practical T-DFSA: estimator-driven threshold and frame length."""

    def __init__(self, estimator: ApEstimator):
        self.estimator = estimator

    def plan(self, net: Network, frame_start: int, rng: np.random.Generator):
        decision = self.estimator.decide(frame_start)
        transmitters = np.nonzero(net.gains() >= decision.threshold)[0]
        return decision, transmitters

    def finish(self, decision, obs, net: Network, max_ap_age_start: int) -> FrameCounters:
        return self.estimator.observe(decision, obs, max_ap_age_start, net.y)


def run_one_frame(
    protocol, net: Network, lam: float, rng: np.random.Generator
) -> tuple[FrameRecord, channel.FrameObservation]:
    """Advance the world by one frame under the given protocol."""
    decision, transmitters = protocol.plan(net, net.slot, rng)
    gains = net.gains()
    obs = channel.run_frame(transmitters, gains[transmitters], decision.frame_len, rng)
    max_ap_age_start = net.max_ap_age()
    ages = net.advance_frame(decision.frame_len, obs.success_node_ids, rng, lam)
    counters = protocol.finish(decision, obs, net, max_ap_age_start)
    record = FrameRecord(
        frame_start=decision.frame_start,
        frame_len=decision.frame_len,
        threshold=decision.threshold,
        n_singleton=obs.n_singleton,
        sum_x_slots=ages.sum_x_slots,
        sum_y_slots=ages.sum_y_slots,
        step2_evaluations=counters.step2_evaluations if counters else 0,
        step3_terms=counters.step3_terms if counters else 0,
        reset_triggered=counters.reset_triggered if counters else False,
    )
    return record, obs
