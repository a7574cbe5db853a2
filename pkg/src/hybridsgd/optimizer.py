"""Reshuffled per-sample SGD with independent per-block update rules.

Each epoch draws a fresh uniform permutation of the sample indices and takes
one step per sample, strictly in permutation order.  A step evaluates both
block directions at the incoming point and then moves both blocks at once,
so neither block sees the other's update within the step.  Block rules:

* ``Mode.ZO``     two-point Gaussian estimate (objective values only),
* ``Mode.FO``     exact analytic per-sample gradient,
* ``Mode.FROZEN`` block copied bit for bit.

The default pairing (x zeroth-order, y first-order) is the hybrid scheme;
(FO, FO), (ZO, ZO) and (FROZEN, FO) express the standard baselines.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .core import (
    Block,
    HybridPoint,
    NumericError,
    RngStream,
    fmt17,
    shuffle_permutation,
)
from .estimator import ZoConfig, estimate_block_gradient
from .objectives import FiniteSumObjective

__all__ = [
    "Mode",
    "LearningRates",
    "BlockMode",
    "OptimizerConfig",
    "TraceRecord",
    "DivergenceError",
    "DivergenceReport",
    "RunResult",
    "step",
    "run_epoch",
    "run",
    "resolve_divergence_threshold",
    "write_trace_csv",
    "TRACE_HEADER",
]


class Mode(Enum):
    """Per-block update rule."""

    ZO = "zo"
    FO = "fo"
    FROZEN = "frozen"


@dataclass(frozen=True)
class LearningRates:
    """Non-negative per-block step sizes."""

    eta_x: float
    eta_y: float

    def __post_init__(self) -> None:
        for name in ("eta_x", "eta_y"):
            eta = getattr(self, name)
            if not np.isfinite(eta) or eta < 0:
                raise ValueError(f"{name} must be >= 0 and finite, got {eta}")


@dataclass(frozen=True)
class BlockMode:
    """Update rule per block; defaults to the hybrid pairing (x: ZO, y: FO)."""

    x_mode: Mode = Mode.ZO
    y_mode: Mode = Mode.FO

    def __post_init__(self) -> None:
        for name in ("x_mode", "y_mode"):
            if not isinstance(getattr(self, name), Mode):
                raise ValueError(f"{name} must be a Mode, got {getattr(self, name)!r}")

    def uses_zo(self) -> bool:
        return Mode.ZO in (self.x_mode, self.y_mode)


@dataclass(frozen=True)
class OptimizerConfig:
    """Everything a run needs except the objective, start point and stream."""

    rates: LearningRates
    modes: BlockMode = BlockMode()
    zo: ZoConfig | None = None
    epochs: int = 1
    divergence_threshold: float | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.rates, LearningRates):
            raise ValueError(f"rates must be LearningRates, got {self.rates!r}")
        if not isinstance(self.modes, BlockMode):
            raise ValueError(f"modes must be a BlockMode, got {self.modes!r}")
        e = self.epochs
        if not isinstance(e, (int, np.integer)) or isinstance(e, bool) or e < 1:
            raise ValueError(f"epochs must be an integer >= 1, got {e!r}")
        if self.modes.uses_zo() and not isinstance(self.zo, ZoConfig):
            raise ValueError("zo config is required when a block uses Mode.ZO")
        f = self.divergence_threshold
        if f is not None and not f > 0:
            raise ValueError(f"divergence_threshold must be > 0, got {f}")


@dataclass(frozen=True)
class TraceRecord:
    """Per-step log entry; metrics are exact full-objective quantities at the
    updated point, so grad_norm^2 == grad_norm_x^2 + grad_norm_y^2."""

    epoch: int
    step: int
    f_value: float
    grad_norm: float
    grad_norm_x: float
    grad_norm_y: float


@dataclass(frozen=True)
class DivergenceReport:
    epoch: int
    step: int
    f_value: float


class DivergenceError(RuntimeError):
    """The objective exceeded the divergence guard (or went non-finite)."""

    def __init__(self, epoch: int, step: int, f_value: float, point: HybridPoint):
        super().__init__(f"diverged at epoch {epoch}, step {step}: f = {f_value!r}")
        self.epoch = epoch
        self.step = step
        self.f_value = f_value
        self.point = point

    def report(self) -> DivergenceReport:
        return DivergenceReport(self.epoch, self.step, self.f_value)


def resolve_divergence_threshold(cfg: OptimizerConfig, f0: float) -> float:
    """Explicit guard if configured, else max(1e6 * |f at start|, 1e6)."""
    if cfg.divergence_threshold is not None:
        return float(cfg.divergence_threshold)
    return max(1e6 * abs(f0), 1e6)


def step(
    obj: FiniteSumObjective,
    w: HybridPoint,
    i: int,
    cfg: OptimizerConfig,
    rng: RngStream,
) -> HybridPoint:
    """One simultaneous update of both blocks from the incoming point.

    ZO draws come from rng in a fixed order (x block first, then y), so a
    replay with an equal stream reproduces the step bit for bit.  A frozen
    block is copied unchanged.
    """
    values = obj.check_point(w)
    i = obj.check_sample(i)
    layout = obj.layout
    full_grad: np.ndarray | None = None

    def fo_gradient() -> np.ndarray:
        nonlocal full_grad
        if full_grad is None:
            full_grad = obj.grad_at(values, i)
        return full_grad

    def direction(block: Block, mode: Mode) -> np.ndarray | None:
        if mode is Mode.FROZEN:
            return None
        if mode is Mode.FO:
            return fo_gradient()[layout.slice_of(block)]
        return estimate_block_gradient(obj, values, i, cfg.zo, rng, block)

    x_dir = direction(Block.X, cfg.modes.x_mode)
    y_dir = direction(Block.Y, cfg.modes.y_mode)

    new_values = values.copy()
    if x_dir is not None:
        new_values[: layout.d_x] -= cfg.rates.eta_x * x_dir
    if y_dir is not None:
        new_values[layout.d_x :] -= cfg.rates.eta_y * y_dir
    if not np.all(np.isfinite(new_values)):
        raise NumericError(f"non-finite update from sample {i}")
    return HybridPoint(layout, new_values)


def run_epoch(
    obj: FiniteSumObjective,
    w: HybridPoint,
    cfg: OptimizerConfig,
    rng: RngStream,
    trace: list,
    *,
    epoch: int = 0,
    step_offset: int = 0,
    divergence_threshold: float | None = None,
    snapshot_every: int = 0,
    snapshots: list | None = None,
) -> HybridPoint:
    """One reshuffled pass over all n samples.

    Appends one TraceRecord per step (metrics at the updated point).  Raises
    DivergenceError as soon as f exceeds the guard or goes non-finite; records
    appended so far stay in the trace.
    """
    if divergence_threshold is None:
        divergence_threshold = resolve_divergence_threshold(cfg, obj.eval_full(w))
    layout = obj.layout
    perm = shuffle_permutation(rng, obj.n)
    for k, idx in enumerate(perm):
        global_step = step_offset + k
        try:
            w = step(obj, w, int(idx), cfg, rng)
        except NumericError as exc:
            raise NumericError(f"epoch {epoch}, step {global_step}: {exc}") from exc
        f = obj.full_value_at(w.values)
        g = obj.full_grad_at(w.values)
        gx = float(np.linalg.norm(g[: layout.d_x]))
        gy = float(np.linalg.norm(g[layout.d_x :]))
        trace.append(
            TraceRecord(epoch, global_step, f, float(np.linalg.norm(g)), gx, gy)
        )
        if snapshots is not None and snapshot_every > 0:
            if (global_step + 1) % snapshot_every == 0:
                snapshots.append((global_step + 1, w))
        if not np.isfinite(f) or f > divergence_threshold:
            raise DivergenceError(epoch, global_step, f, w)
    return w


@dataclass
class RunResult:
    """Outcome of a multi-epoch run.

    min_grad_sq is the minimum of ||grad f||^2 over the epoch-boundary
    iterates (the start point and the end of every completed epoch), the
    quantity the rate planner budgets for.  snapshots holds (steps taken,
    point) pairs when snapshotting was requested, starting with the start
    point at 0 steps.
    """

    point: HybridPoint
    trace: list
    epochs_completed: int
    diverged: bool
    divergence: DivergenceReport | None
    min_grad_sq: float
    snapshots: list


def run(
    obj: FiniteSumObjective,
    w0: HybridPoint,
    cfg: OptimizerConfig,
    rng: RngStream,
    *,
    snapshot_every: int = 0,
) -> RunResult:
    """cfg.epochs reshuffled epochs from w0; never raises on divergence.

    A divergence aborts the offending epoch and is returned in the result
    (point at the offending step, partial trace, report) so sweeps can record
    it per cell; the CLI maps it to its own exit code.
    """
    values = obj.check_point(w0)
    if not isinstance(snapshot_every, (int, np.integer)) or snapshot_every < 0:
        raise ValueError(f"snapshot_every must be an integer >= 0, got {snapshot_every!r}")
    f0 = obj.full_value_at(values)
    if not np.isfinite(f0):
        raise NumericError("objective is non-finite at the start point")
    guard = resolve_divergence_threshold(cfg, f0)
    g0 = obj.full_grad_at(values)
    min_grad_sq = float(np.dot(g0, g0))
    trace: list[TraceRecord] = []
    snapshots: list[tuple[int, HybridPoint]] = [(0, w0)] if snapshot_every > 0 else []
    w = w0
    for epoch in range(cfg.epochs):
        try:
            w = run_epoch(
                obj,
                w,
                cfg,
                rng,
                trace,
                epoch=epoch,
                step_offset=epoch * obj.n,
                divergence_threshold=guard,
                snapshot_every=snapshot_every,
                snapshots=snapshots,
            )
        except DivergenceError as exc:
            return RunResult(
                point=exc.point,
                trace=trace,
                epochs_completed=epoch,
                diverged=True,
                divergence=exc.report(),
                min_grad_sq=min_grad_sq,
                snapshots=snapshots,
            )
        min_grad_sq = min(min_grad_sq, trace[-1].grad_norm ** 2)
    return RunResult(w, trace, cfg.epochs, False, None, min_grad_sq, snapshots)


TRACE_HEADER = ("epoch", "step", "f", "grad_norm", "grad_norm_x", "grad_norm_y")


def write_trace_csv(records, path) -> None:
    """Write trace records as CSV with 17-significant-digit floats.

    Output bytes are a pure function of the records, so identical runs give
    identical files.
    """
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.epoch,
                    r.step,
                    fmt17(r.f_value),
                    fmt17(r.grad_norm),
                    fmt17(r.grad_norm_x),
                    fmt17(r.grad_norm_y),
                ]
            )
