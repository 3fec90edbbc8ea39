"""Access-point side of practical T-DFSA.

The AP never sees individual age-gains; it carries a probability mass
function over the age-gain of a typical node and refreshes it every
frame in four steps: pick threshold and frame length from the current
estimate, fold in the observed slot statuses and delivered gains via a
maximum-likelihood active-count search, push the estimate forward
through the known update-generation rate, and finally truncate it at
the largest gain the AP-side ages still allow.

Distributions are stored as dense vectors indexed by gain.  The hot
per-frame path works on raw vectors (see the ``_*_vector`` helpers);
:class:`GainPmf` wraps the same arrays for the public operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel import FrameObservation
from .core import FrameDecision

__all__ = [
    "GainPmf",
    "EstimatedAllocation",
    "EstimatorInconsistency",
    "ApEstimator",
    "select_threshold_and_frame",
    "slot_probabilities",
    "observation_likelihood",
    "allocate_gain_counts",
    "allocation_likelihood",
    "estimate_active",
    "post_frame_update",
    "propagate_arrivals",
    "truncate",
    "threshold_shortcut",
]

#: Probability entries below this are dropped from the support.
PRUNE_EPS = 1e-12

#: Slack absorbing float noise in tail-sum comparisons against integers.
_TAIL_TOL = 1e-9

#: Estimated backlogged nodes above which a success-free frame counts
#: toward the instability-reset streak.
RESET_BACKLOG_MIN = 0.5


class EstimatorInconsistency(ValueError):
    """An observation contradicts the running estimate."""


# ----------------------------------------------------------------------
# Distribution containers


def _normalized_vector(v: np.ndarray) -> np.ndarray:
    """Prune, normalize, and trim an owned nonnegative mass vector."""
    total = v.sum()
    if not total > 0.0:
        raise ValueError("mass must be positive somewhere")
    v[v < PRUNE_EPS * total] = 0.0
    v /= v.sum()
    last = int(np.nonzero(v)[0][-1])
    return v[: last + 1]


class GainPmf:
    """Estimated age-gain distribution of a typical node.

    Dense (index = gain) for vectorized updates, pruned so the support
    stays sparse, and always normalized to unit mass.
    """

    __slots__ = ("_mass",)

    def __init__(self, mass: np.ndarray | list[float]):
        v = np.array(mass, dtype=np.float64)
        if v.ndim != 1 or len(v) == 0:
            raise ValueError("mass must be a nonempty 1-d vector")
        if (v < 0).any():
            raise ValueError("probabilities cannot be negative")
        self._mass = _normalized_vector(v)

    @classmethod
    def _wrap(cls, normalized: np.ndarray) -> "GainPmf":
        """Adopt an already normalized/trimmed vector without copying."""
        pmf = object.__new__(cls)
        pmf._mass = normalized
        return pmf

    @classmethod
    def from_dict(cls, probs: dict[int, float]) -> "GainPmf":
        if not probs:
            raise ValueError("empty distribution")
        v = np.zeros(max(probs) + 1)
        for gain, p in probs.items():
            if gain < 0:
                raise ValueError(f"age-gain must be >= 0, got {gain}")
            v[gain] = p
        return cls(v)

    @classmethod
    def point(cls, gain: int) -> "GainPmf":
        v = np.zeros(gain + 1)
        v[gain] = 1.0
        return cls._wrap(v)

    @classmethod
    def from_gain_counts(cls, gains: np.ndarray) -> "GainPmf":
        """Empirical distribution of an integer gain sample (e.g. known gains)."""
        return cls(np.bincount(np.asarray(gains, dtype=np.int64)).astype(np.float64))

    @property
    def mass(self) -> np.ndarray:
        """Dense probability vector indexed by gain.  Treat as read-only."""
        return self._mass

    @property
    def support(self) -> np.ndarray:
        return np.nonzero(self._mass)[0]

    @property
    def probs(self) -> dict[int, float]:
        return {int(a): float(self._mass[a]) for a in self.support}

    @property
    def max_gain(self) -> int:
        return len(self._mass) - 1

    def prob(self, gain: int) -> float:
        if 0 <= gain < len(self._mass):
            return float(self._mass[gain])
        return 0.0

    def mass_total(self) -> float:
        return float(self._mass.sum())

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        body = ", ".join(f"{a}: {p:.4g}" for a, p in self.probs.items())
        return f"GainPmf({{{body}}})"


@dataclass(frozen=True)
class EstimatedAllocation:
    """Posterior mean node counts per age-gain among the frame's actives."""

    counts: dict[int, int]

    @property
    def l_hat(self) -> int:
        return sum(self.counts.values())


# ----------------------------------------------------------------------
# Step 1: threshold and frame length


def _decide_vector(mass: np.ndarray, n_nodes: int, w_min: int, frame_start: int) -> FrameDecision:
    threshold, tail = _kernels.decide_threshold(mass, float(n_nodes), float(w_min), _TAIL_TOL)
    if threshold == 0:
        return FrameDecision(threshold=1, frame_len=1, frame_start=frame_start)
    frame_len = max(1, math.ceil(tail - _TAIL_TOL))
    return FrameDecision(threshold=int(threshold), frame_len=frame_len, frame_start=frame_start)


def select_threshold_and_frame(
    pmf: GainPmf, n_nodes: int, w_min: int, frame_start: int = 0
) -> FrameDecision:
    """Step 1: pick the contention threshold and frame length.

    The threshold is the highest estimated gain whose tail holds at
    least ``w_min`` expected nodes; the frame length is that tail count
    rounded up.  With no qualifying tail the smallest positive gain is
    used, and with no positive-gain mass at all an idle one-slot frame
    is emitted.
    """
    if w_min < 1:
        raise ValueError(f"w_min must be >= 1, got {w_min}")
    return _decide_vector(pmf.mass, n_nodes, w_min, frame_start)


# ----------------------------------------------------------------------
# Step 2: likelihoods, allocation, active-count search


def slot_probabilities(l: int, w: int) -> tuple[float, float, float]:
    """Per-slot singleton/empty/collision probabilities with ``l`` actives."""
    if l < 0 or w < 1:
        raise ValueError("need l >= 0 and w >= 1")
    if l == 0:
        return (0.0, 1.0, 0.0)
    miss = 1.0 - 1.0 / w
    q_s = (l / w) * miss ** (l - 1)
    q_e = miss**l
    return (q_s, q_e, max(1.0 - q_s - q_e, 0.0))


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _log_pow(base: float, exponent: int) -> float:
    """``exponent * log(base)`` with the 0**0 = 1 convention."""
    if exponent == 0:
        return 0.0
    if base <= 0.0:
        return -math.inf
    return exponent * math.log(base)


def observation_likelihood(l: int, w: int, obs_counts: tuple[int, int, int]) -> float:
    """Log-probability of seeing the given slot-status counts with ``l`` actives.

    Treats slots as independent with the per-slot probabilities above,
    i.e. the standard occupancy approximation rather than the exact
    multinomial law.
    """
    n_s, n_e, n_c = obs_counts
    if min(n_s, n_e, n_c) < 0 or n_s + n_e + n_c != w:
        raise ValueError(f"slot counts {obs_counts} inconsistent with frame length {w}")
    q_s, q_e, q_c = slot_probabilities(l, w)
    return (
        _log_comb(w, n_s)
        + _log_comb(w - n_s, n_e)
        + _log_pow(q_s, n_s)
        + _log_pow(q_e, n_e)
        + _log_pow(q_c, n_c)
    )


def allocate_gain_counts(l: int, success_gains: dict[int, int]) -> EstimatedAllocation:
    """Most likely split of ``l`` active nodes across the observed gains.

    Every observed gain starts at ``floor(l / n_S)`` copies of its
    success count; the remainder is handed out one node at a time to
    whichever gain currently has the smallest ``(count + 1) / successes``
    ratio (smallest gain on ties).
    """
    if not success_gains:
        raise ValueError("success multiset is empty")
    if any(c < 1 for c in success_gains.values()):
        raise ValueError("success counts must be >= 1")
    n_s = sum(success_gains.values())
    if l < n_s:
        raise ValueError(f"cannot allocate {l} actives over {n_s} successes")
    base = l // n_s
    counts = {a: base * c for a, c in success_gains.items()}
    remainder = l - base * n_s
    order = sorted(success_gains)
    while remainder > 0:
        target = order[0]
        best_num, best_den = counts[target] + 1, success_gains[target]
        for a in order[1:]:
            num, den = counts[a] + 1, success_gains[a]
            # Exact ratio comparison: num/den < best_num/best_den.
            if num * best_den < best_num * den:
                target, best_num, best_den = a, num, den
        counts[target] += 1
        remainder -= 1
    return EstimatedAllocation(counts=counts)


def allocation_likelihood(alloc: EstimatedAllocation, success_gains: dict[int, int]) -> float:
    """Log-probability that exactly the observed multiset succeeded.

    ``prod_a C(m_a, s_a) / C(l, n_S)`` in log space; minus infinity when
    some observed gain exceeds its allocated count.
    """
    n_s = sum(success_gains.values())
    total = alloc.l_hat
    if total < n_s:
        return -math.inf
    log_num = 0.0
    for a, s_a in success_gains.items():
        m_a = alloc.counts.get(a, 0)
        if m_a < s_a:
            return -math.inf
        log_num += _log_comb(m_a, s_a)
    return log_num - _log_comb(total, n_s)


@dataclass(frozen=True)
class EstimationOutcome:
    """Result of the active-count search plus its bookkeeping."""

    allocation: EstimatedAllocation
    l_hat: int
    evaluations: int
    saturated: bool


def estimate_active(
    obs: FrameObservation, frame_len: int, n_nodes: int, threshold: int
) -> EstimationOutcome:
    """Step 2 search: most likely number of active nodes, and their gains.

    Scans candidate counts upward from the observation's hard lower
    bound (one node per singleton, two per collision) and stops at the
    first candidate that fails to improve the score, keeping the best
    seen.  With no successes only the count is identifiable, so all of
    it is attributed to the threshold gain.  ``evaluations`` counts the
    likelihood terms computed, ``saturated`` flags a score still rising
    at the population cap.
    """
    if obs.slot_total != frame_len:
        raise ValueError(f"observation covers {obs.slot_total} slots, frame has {frame_len}")
    n_s, n_e, n_c = obs.counts
    start = n_s + 2 * n_c
    if start > n_nodes:
        raise ValueError(f"observation implies more than {n_nodes} transmitters")

    def status_score(l: int) -> float:
        # observation_likelihood minus its l-independent binomial factors
        q_s, q_e, q_c = slot_probabilities(l, frame_len)
        return _log_pow(q_s, n_s) + _log_pow(q_e, n_e) + _log_pow(q_c, n_c)

    evaluations = 0
    if n_s > 0:
        term_cost = len(obs.success_gains)
        best: EstimatedAllocation | None = None
        best_l = start
        prev = -math.inf
        for l in range(start, n_nodes + 1):
            alloc = allocate_gain_counts(l, obs.success_gains)
            score = status_score(l) + allocation_likelihood(alloc, obs.success_gains)
            evaluations += term_cost
            if score <= prev:
                return EstimationOutcome(best, best_l, evaluations, saturated=False)
            prev, best, best_l = score, alloc, l
        return EstimationOutcome(best, best_l, evaluations, saturated=True)

    best_l = start
    prev = -math.inf
    saturated = True
    for l in range(start, n_nodes + 1):
        score = status_score(l)
        evaluations += 1
        if score <= prev:
            saturated = False
            break
        prev, best_l = score, l
    return EstimationOutcome(
        EstimatedAllocation({threshold: best_l}), best_l, evaluations, saturated=saturated
    )


def _post_frame_vector(
    mass: np.ndarray,
    alloc_counts: dict[int, int],
    obs: FrameObservation,
    threshold: int,
    n_nodes: int,
) -> np.ndarray:
    for a, observed in obs.success_gains.items():
        if alloc_counts.get(a, 0) < observed:
            raise EstimatorInconsistency(
                f"allocation holds {alloc_counts.get(a, 0)} nodes at gain {a} "
                f"but {observed} succeeded"
            )
    top = max(len(mass) - 1, max(alloc_counts, default=0))
    m = np.zeros(top + 1)
    upper = min(threshold, len(mass))
    m[1:upper] = n_nodes * mass[1:upper]
    m[0] = n_nodes * mass[0] + obs.n_singleton
    for a, count in alloc_counts.items():
        if a < threshold:
            raise ValueError(f"allocated gain {a} below threshold {threshold}")
        m[a] = count - obs.success_gains.get(a, 0)
    if not m.sum() > 0.0:
        # Everything the AP believed in was delivered or ruled out.
        m = np.zeros(1)
        m[0] = 1.0
        return m
    return _normalized_vector(m)


def post_frame_update(
    pmf: GainPmf,
    alloc: EstimatedAllocation,
    obs: FrameObservation,
    threshold: int,
    n_nodes: int,
) -> GainPmf:
    """Step 2 closeout: end-of-frame distribution from the allocation.

    Delivered nodes drop to gain zero; estimates below the threshold are
    untouched; at or above it the prior is replaced by the allocation
    minus the observed successes (zero wherever nothing was observed).
    """
    return GainPmf._wrap(_post_frame_vector(pmf.mass, alloc.counts, obs, threshold, n_nodes))


# ----------------------------------------------------------------------
# Step 3: arrival propagation


def _propagate_vector(
    mass: np.ndarray,
    lam: float,
    frame_len: int,
    max_ap_age: int,
    frame_start: int,
    max_x0: int,
) -> tuple[np.ndarray, int]:
    if len(mass) - 1 > max_ap_age - 1:
        raise ValueError(
            f"end-of-frame gain {len(mass) - 1} exceeds bound {max_ap_age - 1}"
        )
    out, last, n_sources = _kernels.propagate(
        mass, lam, frame_len, max_ap_age, max_x0 + frame_start, PRUNE_EPS
    )
    return out[: last + 1], n_sources * frame_len


def propagate_arrivals(
    pmf_plus: GainPmf,
    lam: float,
    frame_len: int,
    max_ap_age: int,
    frame_start: int,
    max_x0: int = 1,
) -> tuple[GainPmf, int]:
    """Step 3: push the end-of-frame distribution through fresh arrivals.

    A node keeps its gain with probability ``(1 - lam)**w``; otherwise
    its newest update was generated ``c`` slots before the next frame
    and its frame-start age ``h`` follows a geometric law truncated at
    ``h_max = min(max_x0 + frame_start, max_ap_age - b)``, moving mass
    from gain ``b`` up to ``b + w + h - c``.  Each (source gain, c) pair
    seeds one geometric tail, resolved by a difference array and a
    single first-order scan; the returned term count is the number of
    seeded tails (at most ``frame_len * max_ap_age``).
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lambda must be in (0, 1], got {lam}")
    if frame_len < 1 or max_ap_age < 1 or frame_start < 0:
        raise ValueError("need frame_len >= 1, max_ap_age >= 1, frame_start >= 0")
    vector, terms = _propagate_vector(
        pmf_plus.mass, lam, frame_len, max_ap_age, frame_start, max_x0
    )
    return GainPmf._wrap(vector), terms


# ----------------------------------------------------------------------
# Step 4: truncation, and the tail shortcut


def _truncate_vector(mass: np.ndarray, a_max: int) -> np.ndarray:
    if len(mass) - 1 <= a_max:
        return mass
    kept = mass[: a_max + 1].copy()
    if not kept.sum() > 0.0:
        kept = np.zeros(a_max + 1)
        kept[a_max] = 1.0
        return kept
    return _normalized_vector(kept)


def truncate(pmf: GainPmf, max_ap_age_next: int) -> GainPmf:
    """Step 4: drop mass above the largest feasible gain and renormalize.

    No gain can exceed ``max_ap_age_next - 1``; if the whole estimate
    sat above that bound, fall back to a point mass at the bound.
    """
    if max_ap_age_next < 1:
        raise ValueError(f"max AP age must be >= 1, got {max_ap_age_next}")
    return GainPmf._wrap(_truncate_vector(pmf.mass, max_ap_age_next - 1))


def threshold_shortcut(pmf: GainPmf, n_nodes: int) -> float:
    """Smallest estimated gain whose tail holds at most one expected node.

    The Step-1 threshold can never land above it (for any ``w_min >= 1``),
    so later propagation work beyond it is skippable.  Returns ``inf``
    when every supported tail still exceeds one node.
    """
    tails = np.cumsum(pmf.mass[::-1])[::-1] * n_nodes
    hits = pmf.support[tails[pmf.support] <= 1.0 + _TAIL_TOL]
    return float(hits[0]) if len(hits) else math.inf


# ----------------------------------------------------------------------
# The per-frame state machine


@dataclass(frozen=True)
class FrameCounters:
    """Per-frame estimator bookkeeping surfaced to the metrics layer."""

    step2_evaluations: int
    step3_terms: int
    reset_triggered: bool
    saturated: bool


class ApEstimator:
    """Mutable estimator state carried by the AP across frames.

    ``decide`` runs Step 1 before the frame; ``observe`` runs Steps 2-4
    after it and handles the instability reset: after ``reset_patience``
    consecutive success-free frames with estimated backlog present, the
    distribution is rebuilt from the known AP-side ages as if every node
    held a fresh update.
    """

    def __init__(
        self,
        n_nodes: int,
        lam: float,
        w_min: int = 1,
        *,
        initial_ap_age: np.ndarray | None = None,
        max_x0: int = 1,
        reset_patience: int = 50,
        complexity_shortcut: bool = False,
        check_invariants: bool = False,
    ):
        if not 0.0 < lam <= 1.0:
            raise ValueError(f"lambda must be in (0, 1], got {lam}")
        if w_min < 1:
            raise ValueError(f"w_min must be >= 1, got {w_min}")
        self.n_nodes = n_nodes
        self.lam = lam
        self.w_min = w_min
        self.max_x0 = max_x0
        self.reset_patience = reset_patience
        self.complexity_shortcut = complexity_shortcut
        self.check_invariants = check_invariants
        if initial_ap_age is None:
            self._mass = np.ones(1)
        else:
            # Nodes start with fresh updates, so initial gains are known exactly.
            self._mass = _normalized_vector(
                np.bincount(np.asarray(initial_ap_age, dtype=np.int64) - 1).astype(np.float64)
            )
        self._fail_streak = 0
        self._backlog_at_decision = 0.0
        self.reset_count = 0
        self.last_reset_slot: int | None = None
        self.saturation_count = 0

    @property
    def pmf(self) -> GainPmf:
        return GainPmf._wrap(self._mass)

    @pmf.setter
    def pmf(self, value: GainPmf) -> None:
        self._mass = value.mass

    def decide(self, frame_start: int) -> FrameDecision:
        self._backlog_at_decision = self.n_nodes * (1.0 - float(self._mass[0]))
        return _decide_vector(self._mass, self.n_nodes, self.w_min, frame_start)

    def observe(
        self,
        decision: FrameDecision,
        obs: FrameObservation,
        max_ap_age_start: int,
        ap_ages_next: np.ndarray,
    ) -> FrameCounters:
        w = decision.frame_len
        outcome = estimate_active(obs, w, self.n_nodes, decision.threshold)
        if outcome.saturated:
            self.saturation_count += 1
        plus = _post_frame_vector(
            self._mass, outcome.allocation.counts, obs, decision.threshold, self.n_nodes
        )
        if self.check_invariants:
            self._check(plus, max_ap_age_start - 1, "after observation fold-in")

        vector, step3_terms = _propagate_vector(
            plus, self.lam, w, max_ap_age_start, decision.frame_start, self.max_x0
        )
        if self.check_invariants:
            self._check(vector, max_ap_age_start + w, "after arrival propagation")

        max_ap_age_next = int(ap_ages_next.max())
        self._mass = _truncate_vector(vector, max_ap_age_next - 1)
        if self.complexity_shortcut:
            self._mass, step3_terms = self._apply_shortcut(plus, self._mass, w)
        if self.check_invariants:
            self._check(self._mass, max_ap_age_next - 1, "after truncation")

        reset = self._update_reset_state(decision, obs, ap_ages_next)
        return FrameCounters(
            step2_evaluations=outcome.evaluations,
            step3_terms=step3_terms,
            reset_triggered=reset,
            saturated=outcome.saturated,
        )

    # Internal helpers --------------------------------------------------

    def _apply_shortcut(
        self, plus: np.ndarray, truncated: np.ndarray, w: int
    ) -> tuple[np.ndarray, int]:
        """Lump the sub-one-node tail of the truncated estimate at its head.

        Applied after truncation, so mass the age bound would delete is
        still deleted; only the surviving tail collapses onto the cut.
        That keeps every tail sum at or below the cut unchanged, and the
        next threshold cannot land above the cut, so broadcast decisions
        are unaffected.  The modeled term count keeps only propagation
        seeds landing at or below the cut.
        """
        tails = np.cumsum(truncated[::-1])[::-1] * self.n_nodes
        hits = np.nonzero((truncated > 0) & (tails <= 1.0 + _TAIL_TOL))[0]
        sources = np.nonzero(plus)[0]
        if not len(hits):
            return truncated, len(sources) * w
        cut = int(hits[0])
        modeled = int(np.minimum(np.maximum(cut - sources, 0), w).sum())
        if cut >= len(truncated) - 1:
            return truncated, modeled
        kept = truncated[: cut + 1].copy()
        kept[cut] += truncated[cut + 1 :].sum()
        return _normalized_vector(kept), modeled

    def _update_reset_state(
        self, decision: FrameDecision, obs: FrameObservation, ap_ages_next: np.ndarray
    ) -> bool:
        if obs.n_singleton == 0 and self._backlog_at_decision > RESET_BACKLOG_MIN:
            self._fail_streak += 1
        else:
            self._fail_streak = 0
        if self._fail_streak < self.reset_patience:
            return False
        # Nodes keep only their freshest update, so the AP re-anchors on
        # the known AP-side ages as if every update were fresh.
        self._mass = _normalized_vector(
            np.bincount(np.asarray(ap_ages_next, dtype=np.int64) - 1).astype(np.float64)
        )
        self._fail_streak = 0
        self.reset_count += 1
        self.last_reset_slot = decision.frame_end
        return True

    def _check(self, mass: np.ndarray, max_gain_allowed: int, stage: str) -> None:
        total = float(mass.sum())
        if abs(total - 1.0) > 1e-9:
            raise AssertionError(f"PMF mass {total!r} off unity {stage}")
        if (mass < 0).any():
            raise AssertionError(f"negative PMF entry {stage}")
        if len(mass) - 1 > max_gain_allowed:
            raise AssertionError(
                f"PMF support reaches {len(mass) - 1} > {max_gain_allowed} {stage}"
            )
