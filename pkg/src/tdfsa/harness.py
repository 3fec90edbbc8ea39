"""Scenario configuration, seeded replication runs, sweeps, and CSV output.

A scenario pins one protocol and population; a run executes one or more
independent replications (one RNG stream each) and aggregates the
post-warmup metrics.  ``w_min = "sweep"`` evaluates the minimum-active
bound over 1..5 and keeps the AAG-minimal one.  Sweeps expand a grid of
config fields into deterministic per-point runs with derived seeds.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from itertools import product

import numpy as np

from .baselines import FixedFsaProtocol, IdealDfsaProtocol, ThresholdAlohaProtocol
from .core import MetricsAccumulator, Network, initial_ap_ages
from .estimator import ApEstimator
from .simulate import TdfsaProtocol, run_one_frame

__all__ = [
    "ScenarioConfig",
    "RunResult",
    "SweepRow",
    "ConfigError",
    "validate",
    "run_scenario",
    "run_sweep",
    "results_csv",
    "frame_pmf_csv",
]

PROTOCOLS = ("tdfsa", "fixed_fsa", "ideal_dfsa", "threshold_aloha")

#: Candidate minimum-active bounds tried when ``w_min="sweep"``.
W_MIN_SWEEP = (1, 2, 3, 4, 5)

CSV_COLUMNS = (
    "protocol",
    "N",
    "lambda",
    "w_min",
    "seed",
    "replications",
    "total_slots",
    "warmup_slots",
    "aag",
    "aag_std",
    "aaoi",
    "n_aaoi",
    "throughput",
    "complexity_per_slot",
    "stable",
)


class ConfigError(ValueError):
    """Invalid scenario configuration; carries all diagnostics."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario. ``warmup_slots=None`` means 20% of the horizon."""

    protocol: str = "tdfsa"
    n_nodes: int = 50
    lam: float = 0.3
    w_min: int | str = 1
    fsa_frame_len: int | None = None
    ta_threshold: int | None = None
    ta_tx_prob: float | None = None
    total_slots: int = 200_000
    warmup_slots: int | None = None
    seed: int = 12345
    replications: int = 1
    initial_y: str | tuple[int, ...] = "ramp"
    initial_y_value: int | None = None
    reset_patience: int = 50
    complexity_shortcut: bool = False
    stability_window: int = 10_000
    stability_eps: float = 1e-3
    check_invariants: bool = False

    @property
    def effective_warmup(self) -> int:
        if self.warmup_slots is not None:
            return self.warmup_slots
        return self.total_slots // 5


def validate(cfg: ScenarioConfig) -> list[str]:
    """Constraint check without running; returns one message per violation."""
    problems: list[str] = []
    if cfg.protocol not in PROTOCOLS:
        problems.append(f"protocol must be one of {PROTOCOLS}, got {cfg.protocol!r}")
    if cfg.n_nodes < 1:
        problems.append(f"n_nodes must be >= 1, got {cfg.n_nodes}")
    if not 0.0 < cfg.lam <= 1.0:
        problems.append(f"lambda must be in (0,1], got {cfg.lam}")
    if cfg.total_slots < 1:
        problems.append(f"total_slots must be >= 1, got {cfg.total_slots}")
    warmup = cfg.warmup_slots if cfg.warmup_slots is not None else cfg.total_slots // 5
    if warmup < 0 or warmup >= cfg.total_slots:
        problems.append(
            f"need total_slots > warmup_slots >= 0, got warmup {warmup} of {cfg.total_slots}"
        )
    if cfg.replications < 1:
        problems.append(f"replications must be >= 1, got {cfg.replications}")
    if cfg.protocol == "tdfsa":
        if isinstance(cfg.w_min, str):
            if cfg.w_min != "sweep":
                problems.append(f"w_min must be an integer >= 1 or 'sweep', got {cfg.w_min!r}")
        elif cfg.w_min < 1:
            problems.append(f"w_min must be >= 1, got {cfg.w_min}")
        if cfg.reset_patience < 1:
            problems.append(f"reset_patience must be >= 1, got {cfg.reset_patience}")
    if cfg.protocol == "fixed_fsa" and (cfg.fsa_frame_len is None or cfg.fsa_frame_len < 1):
        problems.append("fixed_fsa requires fsa_frame_len >= 1")
    if cfg.protocol != "fixed_fsa" and cfg.fsa_frame_len is not None:
        problems.append("fsa_frame_len only applies to fixed_fsa")
    if cfg.protocol == "threshold_aloha":
        if cfg.ta_threshold is None or cfg.ta_threshold < 1:
            problems.append("threshold_aloha requires ta_threshold >= 1")
        if cfg.ta_tx_prob is None or not 0.0 < cfg.ta_tx_prob <= 1.0:
            problems.append("threshold_aloha requires ta_tx_prob in (0,1]")
    elif cfg.ta_threshold is not None or cfg.ta_tx_prob is not None:
        problems.append("threshold-ALOHA parameters only apply to threshold_aloha")
    if isinstance(cfg.initial_y, str):
        if cfg.initial_y not in ("ramp", "uniform"):
            problems.append(f"initial_y must be 'ramp', 'uniform', or a list, got {cfg.initial_y!r}")
    elif len(cfg.initial_y) != cfg.n_nodes:
        problems.append(f"explicit initial_y must list {cfg.n_nodes} ages")
    if cfg.stability_window < 2:
        problems.append(f"stability_window must be >= 2, got {cfg.stability_window}")
    return problems


# ----------------------------------------------------------------------
# Single replication


@dataclass
class ReplicationOutcome:
    """Post-warmup aggregates of one independent simulation."""

    aag: float
    aaoi: float
    mean_node_age: float
    throughput: float
    complexity_per_slot: float
    frame_hist: dict[int, int]
    stable: bool
    ap_age_slope: float
    reset_count: int
    last_reset_slot: int | None
    saturation_count: int
    slots_measured: int


def _build_protocol(cfg: ScenarioConfig, w_min: int, initial_y: np.ndarray):
    if cfg.protocol == "tdfsa":
        estimator = ApEstimator(
            cfg.n_nodes,
            cfg.lam,
            w_min,
            initial_ap_age=initial_y,
            reset_patience=cfg.reset_patience,
            complexity_shortcut=cfg.complexity_shortcut,
            check_invariants=cfg.check_invariants,
        )
        return TdfsaProtocol(estimator)
    if cfg.protocol == "fixed_fsa":
        return FixedFsaProtocol(cfg.fsa_frame_len)
    if cfg.protocol == "ideal_dfsa":
        return IdealDfsaProtocol()
    if cfg.protocol == "threshold_aloha":
        return ThresholdAlohaProtocol(cfg.ta_threshold, cfg.ta_tx_prob)
    raise ConfigError([f"unknown protocol {cfg.protocol!r}"])


def _ap_age_slope(windows: dict[int, list[int]], cfg: ScenarioConfig) -> float:
    """Least-squares slope of windowed mean AP age (age units per slot)."""
    window = cfg.stability_window
    warmup = cfg.effective_warmup
    xs, ys = [], []
    for idx in sorted(windows):
        if idx * window < warmup:
            continue
        y_sum, slots = windows[idx]
        if slots < window // 2:
            continue
        xs.append((idx + 0.5) * window)
        ys.append(y_sum / (cfg.n_nodes * slots))
    if len(xs) < 2:
        return 0.0
    x = np.asarray(xs)
    y = np.asarray(ys)
    x_c = x - x.mean()
    return float((x_c * (y - y.mean())).sum() / (x_c * x_c).sum())


def _simulate_replication(cfg: ScenarioConfig, w_min: int, seed: int) -> ReplicationOutcome:
    rng = np.random.default_rng(seed)
    initial_y = initial_ap_ages(
        cfg.n_nodes,
        list(cfg.initial_y) if not isinstance(cfg.initial_y, str) else cfg.initial_y,
        cfg.initial_y_value,
    )
    net = Network(cfg.n_nodes, initial_y)
    protocol = _build_protocol(cfg, w_min, initial_y)
    metrics = MetricsAccumulator()
    windows: dict[int, list[int]] = {}
    warmup = cfg.effective_warmup
    reset_count = 0

    while net.slot < cfg.total_slots:
        record, _ = run_one_frame(protocol, net, cfg.lam, rng)
        bucket = windows.setdefault(record.frame_start // cfg.stability_window, [0, 0])
        bucket[0] += record.sum_y_slots
        bucket[1] += record.frame_len
        if record.reset_triggered:
            reset_count += 1
        if record.frame_start >= warmup:
            metrics.add_frame(
                frame_len=record.frame_len,
                sum_x_slots=record.sum_x_slots,
                sum_y_slots=record.sum_y_slots,
                successes=record.n_singleton,
                step2=record.step2_evaluations,
                step3=record.step3_terms,
            )

    slope = _ap_age_slope(windows, cfg)
    estimator = getattr(protocol, "estimator", None)
    return ReplicationOutcome(
        aag=metrics.average_age_gain(cfg.n_nodes),
        aaoi=metrics.average_ap_age(cfg.n_nodes),
        mean_node_age=metrics.average_node_age(cfg.n_nodes),
        throughput=metrics.throughput(),
        complexity_per_slot=metrics.complexity_per_slot(),
        frame_hist=metrics.frame_len_histogram,
        stable=slope < cfg.stability_eps,
        ap_age_slope=slope,
        reset_count=reset_count,
        last_reset_slot=estimator.last_reset_slot if estimator is not None else None,
        saturation_count=estimator.saturation_count if estimator is not None else 0,
        slots_measured=metrics.slot_count,
    )


def _replication_task(args: tuple[ScenarioConfig, int, int]) -> ReplicationOutcome:
    cfg, w_min, seed = args
    return _simulate_replication(cfg, w_min, seed)


# ----------------------------------------------------------------------
# Scenario-level aggregation


@dataclass
class RunResult:
    """Aggregated metrics of one scenario across its replications."""

    config: ScenarioConfig
    w_min: int | None
    aag: float
    aag_std: float
    aaoi: float
    n_aaoi: float
    throughput: float
    complexity_per_slot: float
    frame_len_pmf: dict[int, float]
    stable: bool
    mean_node_age: float
    replication_stats: dict[str, tuple[float, float]]
    w_min_sweep: dict[int, float] = field(default_factory=dict)
    reset_count: int = 0
    last_reset_slot: int | None = None

    def csv_row(self) -> dict[str, str]:
        cfg = self.config
        return {
            "protocol": cfg.protocol,
            "N": str(cfg.n_nodes),
            "lambda": _fmt(cfg.lam),
            "w_min": "" if self.w_min is None else str(self.w_min),
            "seed": str(cfg.seed),
            "replications": str(cfg.replications),
            "total_slots": str(cfg.total_slots),
            "warmup_slots": str(cfg.effective_warmup),
            "aag": _fmt(self.aag),
            "aag_std": _fmt(self.aag_std),
            "aaoi": _fmt(self.aaoi),
            "n_aaoi": _fmt(self.n_aaoi),
            "throughput": _fmt(self.throughput),
            "complexity_per_slot": _fmt(self.complexity_per_slot),
            "stable": "true" if self.stable else "false",
        }


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = sum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


def _aggregate(cfg: ScenarioConfig, w_min: int | None, reps: list[ReplicationOutcome]) -> RunResult:
    stats = {
        name: _mean_std([getattr(r, name) for r in reps])
        for name in ("aag", "aaoi", "throughput", "complexity_per_slot", "mean_node_age")
    }
    hist: dict[int, int] = {}
    for r in reps:
        for length, count in r.frame_hist.items():
            hist[length] = hist.get(length, 0) + count
    total_frames = sum(hist.values())
    pmf = {length: hist[length] / total_frames for length in sorted(hist)}
    last_resets = [r.last_reset_slot for r in reps if r.last_reset_slot is not None]
    return RunResult(
        config=cfg,
        w_min=w_min,
        aag=stats["aag"][0],
        aag_std=stats["aag"][1],
        aaoi=stats["aaoi"][0],
        n_aaoi=stats["aaoi"][0] / cfg.n_nodes,
        throughput=stats["throughput"][0],
        complexity_per_slot=stats["complexity_per_slot"][0],
        frame_len_pmf=pmf,
        stable=all(r.stable for r in reps),
        mean_node_age=stats["mean_node_age"][0],
        replication_stats=stats,
        reset_count=sum(r.reset_count for r in reps),
        last_reset_slot=max(last_resets) if last_resets else None,
    )


def _run_replications(
    cfg: ScenarioConfig, w_min_values: list[int], threads: int
) -> dict[int, list[ReplicationOutcome]]:
    """Run every (w_min, replication) pair; same seeds across w_min values."""
    tasks = [
        (w_min, rep, (cfg, w_min, cfg.seed + rep))
        for w_min in w_min_values
        for rep in range(cfg.replications)
    ]
    outcomes: dict[int, list[ReplicationOutcome]] = {w: [None] * cfg.replications for w in w_min_values}
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for (w_min, rep, _), result in zip(tasks, pool.map(_replication_task, [t[2] for t in tasks])):
                outcomes[w_min][rep] = result
    else:
        for w_min, rep, args in tasks:
            outcomes[w_min][rep] = _replication_task(args)
    return outcomes


def run_scenario(cfg: ScenarioConfig, threads: int = 1) -> RunResult:
    """Run one scenario; resolves ``w_min="sweep"`` to the AAG-minimal value."""
    problems = validate(cfg)
    if problems:
        raise ConfigError(problems)

    if cfg.protocol != "tdfsa":
        reps = _run_replications(cfg, [1], threads)[1]
        return _aggregate(cfg, None, reps)

    if cfg.w_min == "sweep":
        candidates = list(W_MIN_SWEEP)
    else:
        candidates = [int(cfg.w_min)]
    outcomes = _run_replications(cfg, candidates, threads)
    aag_by_w_min = {
        w: sum(r.aag for r in reps) / len(reps) for w, reps in outcomes.items()
    }
    best = min(aag_by_w_min, key=lambda w: (aag_by_w_min[w], w))
    result = _aggregate(cfg, best, outcomes[best])
    result.w_min_sweep = aag_by_w_min
    return result


# ----------------------------------------------------------------------
# Sweeps


@dataclass
class SweepRow:
    """One grid point of a sweep: its config and result or failure."""

    index: int
    config: ScenarioConfig
    result: RunResult | None
    error: str | None = None


def _sweep_point_task(point: ScenarioConfig) -> tuple[RunResult | None, str | None]:
    try:
        return run_scenario(point, threads=1), None
    except Exception as exc:  # noqa: BLE001 - per-row failure reporting
        return None, str(exc)


def run_sweep(
    cfg: ScenarioConfig, grid: dict[str, list], threads: int = 1
) -> list[SweepRow]:
    """Cartesian sweep over config fields, one deterministic row per point.

    Point ``i`` runs with seed ``cfg.seed + i * cfg.replications`` so
    replication streams never overlap across points.  Points execute
    concurrently when ``threads > 1``; row order and aggregation follow
    the grid order regardless of completion order.  A failing point is
    reported in its row; the sweep continues.
    """
    if not grid:
        raise ValueError("sweep grid is empty")
    known = {f.name for f in fields(ScenarioConfig)}
    for name in grid:
        if name not in known:
            raise ValueError(f"unknown config field {name!r} in sweep grid")
        if not grid[name]:
            raise ValueError(f"empty value list for sweep field {name!r}")

    names = list(grid)
    points = [
        replace(cfg, **dict(zip(names, values)), seed=cfg.seed + index * cfg.replications)
        for index, values in enumerate(product(*(grid[name] for name in names)))
    ]
    if threads > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_sweep_point_task, points))
    else:
        outcomes = [_sweep_point_task(point) for point in points]
    return [
        SweepRow(index=index, config=point, result=result, error=error)
        for index, (point, (result, error)) in enumerate(zip(points, outcomes))
    ]


# ----------------------------------------------------------------------
# CSV emission


def results_csv(results: list[RunResult | SweepRow]) -> str:
    """Render results as CSV text with the stable documented column set."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for item in results:
        if isinstance(item, SweepRow):
            if item.result is None:
                row = {col: "" for col in CSV_COLUMNS}
                row["protocol"] = item.config.protocol
                row["N"] = str(item.config.n_nodes)
                row["lambda"] = _fmt(item.config.lam)
                row["seed"] = str(item.config.seed)
                writer.writerow(row)
                continue
            writer.writerow(item.result.csv_row())
        else:
            writer.writerow(item.csv_row())
    return buf.getvalue()


def frame_pmf_csv(result: RunResult) -> str:
    """Frame-length distribution of one run as ``length,frequency`` rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame_len", "frequency"])
    for length, freq in sorted(result.frame_len_pmf.items()):
        writer.writerow([str(length), _fmt(freq)])
    return buf.getvalue()
