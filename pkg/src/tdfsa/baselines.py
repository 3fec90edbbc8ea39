"""Comparison policies: fixed-frame FSA, backlog-aware DFSA, threshold-ALOHA.

All three drive the same channel and age bookkeeping as the main
protocol, so metric differences are attributable to the access policy
alone.  A node counts as backlogged when its age-gain is positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FrameDecision, MetricsAccumulator, Network

__all__ = [
    "BaselineConfig",
    "FixedFsaProtocol",
    "IdealDfsaProtocol",
    "ThresholdAlohaProtocol",
    "fixed_fsa_step",
    "ideal_dfsa_step",
    "ta_step",
]


@dataclass(frozen=True)
class BaselineConfig:
    """Which baseline to run and its policy parameters."""

    kind: str  # fixed_fsa | ideal_dfsa | threshold_aloha
    fsa_frame_len: int | None = None
    ta_threshold: int | None = None
    ta_tx_prob: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "fixed_fsa":
            if self.fsa_frame_len is None or self.fsa_frame_len < 1:
                raise ValueError("fixed_fsa needs fsa_frame_len >= 1")
            if self.ta_threshold is not None or self.ta_tx_prob is not None:
                raise ValueError("threshold-ALOHA parameters do not apply to fixed_fsa")
        elif self.kind == "threshold_aloha":
            if self.ta_threshold is None or self.ta_threshold < 1:
                raise ValueError("threshold_aloha needs ta_threshold >= 1")
            if self.ta_tx_prob is None or not 0.0 < self.ta_tx_prob <= 1.0:
                raise ValueError("threshold_aloha needs ta_tx_prob in (0, 1]")
            if self.fsa_frame_len is not None:
                raise ValueError("fsa_frame_len does not apply to threshold_aloha")
        elif self.kind == "ideal_dfsa":
            if any(p is not None for p in (self.fsa_frame_len, self.ta_threshold, self.ta_tx_prob)):
                raise ValueError("ideal_dfsa takes no policy parameters")
        else:
            raise ValueError(f"unknown baseline kind {self.kind!r}")


class FixedFsaProtocol:
    """Every backlogged node contends in each fixed-length frame."""

    def __init__(self, frame_len: int):
        if frame_len < 1:
            raise ValueError(f"frame_len must be >= 1, got {frame_len}")
        self.frame_len = frame_len

    def plan(self, net: Network, frame_start: int, rng: np.random.Generator):
        decision = FrameDecision(threshold=1, frame_len=self.frame_len, frame_start=frame_start)
        return decision, net.backlogged_ids()

    def finish(self, decision, obs, net, max_ap_age_start):
        return None


class IdealDfsaProtocol:
    """Frame sized to the exact backlog; all backlogged nodes contend."""

    def plan(self, net: Network, frame_start: int, rng: np.random.Generator):
        backlogged = net.backlogged_ids()
        decision = FrameDecision(
            threshold=1, frame_len=max(len(backlogged), 1), frame_start=frame_start
        )
        return decision, backlogged

    def finish(self, decision, obs, net, max_ap_age_start):
        return None


class ThresholdAlohaProtocol:
    """Slot-by-slot access: gains at or above the threshold transmit w.p. tau."""

    def __init__(self, threshold: int, tx_prob: float):
        if threshold < 1:
            raise ValueError(f"threshold must be >= 1, got {threshold}")
        if not 0.0 < tx_prob <= 1.0:
            raise ValueError(f"tx_prob must be in (0, 1], got {tx_prob}")
        self.threshold = threshold
        self.tx_prob = tx_prob

    def plan(self, net: Network, frame_start: int, rng: np.random.Generator):
        decision = FrameDecision(threshold=self.threshold, frame_len=1, frame_start=frame_start)
        eligible = np.nonzero(net.gains() >= self.threshold)[0]
        coins = rng.random(len(eligible)) < self.tx_prob
        return decision, eligible[coins]

    def finish(self, decision, obs, net, max_ap_age_start):
        return None


def _one_frame(protocol, net: Network, lam: float, rng: np.random.Generator, metrics):
    from .simulate import run_one_frame

    record, obs = run_one_frame(protocol, net, lam, rng)
    if metrics is not None:
        metrics.add_frame(
            frame_len=record.frame_len,
            sum_x_slots=record.sum_x_slots,
            sum_y_slots=record.sum_y_slots,
            successes=record.n_singleton,
        )
    return obs


def fixed_fsa_step(
    net: Network,
    frame_len: int,
    lam: float,
    rng: np.random.Generator,
    metrics: MetricsAccumulator | None = None,
):
    """Run one fixed-length FSA frame, advancing ages and metrics."""
    return _one_frame(FixedFsaProtocol(frame_len), net, lam, rng, metrics)


def ideal_dfsa_step(
    net: Network,
    lam: float,
    rng: np.random.Generator,
    metrics: MetricsAccumulator | None = None,
):
    """Run one ideal-DFSA frame (length = current backlog, min 1)."""
    return _one_frame(IdealDfsaProtocol(), net, lam, rng, metrics)


def ta_step(
    net: Network,
    threshold: int,
    tx_prob: float,
    lam: float,
    rng: np.random.Generator,
    metrics: MetricsAccumulator | None = None,
):
    """Run one threshold-ALOHA slot."""
    return _one_frame(ThresholdAlohaProtocol(threshold, tx_prob), net, lam, rng, metrics)
