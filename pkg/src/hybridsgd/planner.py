"""Step-size and epoch-budget planning from smoothness constants.

The admissible rates for the reshuffled hybrid scheme are minima of named
candidate terms: a per-sample curvature cap 1/(2 L_max n) for each block, a
dimension penalty 1/(384 L_x n d_x) for the zeroth-order block, and, when the
gradient variance sigma is positive, a variance-horizon cap sqrt(2/T)/(sigma
n L_max).  The smoothing radius is capped by a curvature-relative radius
(G/L_x)(6/d_x^(3/2)) and a horizon bias term 1/(3 L_x T n d_x G).

Constants may be supplied analytically or measured with curvature probes;
probe-derived constants are operator-norm lower bounds, so rates planned
from them are best-effort, not certified.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Block, HybridPoint, RngStream
from .objectives import FiniteSumObjective
from .probe import ProbeConfig, block_config, estimate_block_lipschitz

__all__ = [
    "SmoothnessConstants",
    "PlanInputs",
    "RatePlan",
    "plan_rates",
    "epoch_budget",
    "estimate_constants",
    "binding_term",
]


def _check_positive(name: str, value: float) -> float:
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return float(value)


def _check_nonneg(name: str, value: float) -> float:
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be >= 0 and finite, got {value}")
    return float(value)


def _check_count(name: str, value: int) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class SmoothnessConstants:
    """Curvature, gradient, variance and gap constants of one problem.

    L_x/L_y bound the full objective's block curvature, L_x_max/L_y_max the
    worst single sample's; G bounds the full gradient norm over the region of
    interest, sigma the per-sample gradient standard deviation, and f_gap the
    value gap from the start point to the minimum.
    """

    L_x: float
    L_y: float
    L_x_max: float
    L_y_max: float
    G: float
    sigma: float
    f_gap: float

    def __post_init__(self) -> None:
        for name in ("L_x", "L_y", "L_x_max", "L_y_max", "G"):
            _check_positive(name, getattr(self, name))
        _check_nonneg("sigma", self.sigma)
        _check_nonneg("f_gap", self.f_gap)


@dataclass(frozen=True)
class PlanInputs:
    constants: SmoothnessConstants
    n: int
    T: int
    d_x: int

    def __post_init__(self) -> None:
        if not isinstance(self.constants, SmoothnessConstants):
            raise ValueError(f"constants must be SmoothnessConstants, got {self.constants!r}")
        _check_count("n", self.n)
        _check_count("T", self.T)
        _check_count("d_x", self.d_x)


@dataclass(frozen=True)
class RatePlan:
    """Planned rates plus every candidate term that entered each minimum."""

    eta_x: float
    eta_y: float
    mu: float
    eta_x_terms: dict
    eta_y_terms: dict
    mu_terms: dict


def binding_term(terms: dict) -> str:
    """Name of the smallest candidate term."""
    return min(terms, key=terms.get)


def plan_rates(inputs: PlanInputs) -> RatePlan:
    """Largest admissible (eta_x, eta_y, mu) for the given constants.

    sigma = 0 drops the variance-horizon terms entirely (the minimum runs
    over the remaining terms); it is not an error.
    """
    c = inputs.constants
    n, horizon, d_x = inputs.n, inputs.T, inputs.d_x
    root = math.sqrt(2.0 / horizon)

    eta_x_terms = {
        "per_sample_curvature": 1.0 / (2.0 * c.L_x_max * n),
        "zo_dimension_penalty": 1.0 / (384.0 * c.L_x * n * d_x),
    }
    eta_y_terms = {
        "per_sample_curvature": 1.0 / (2.0 * c.L_y_max * n),
    }
    if c.sigma > 0.0:
        eta_x_terms["variance_horizon"] = root / (c.sigma * n * c.L_x_max)
        eta_y_terms["variance_horizon"] = root / (c.sigma * n * c.L_y_max)

    mu_terms = {
        "smoothing_radius": (c.G / c.L_x) * (6.0 / d_x**1.5),
        "horizon_bias": 1.0 / (3.0 * c.L_x * horizon * n * d_x * c.G),
    }

    return RatePlan(
        eta_x=min(eta_x_terms.values()),
        eta_y=min(eta_y_terms.values()),
        mu=min(mu_terms.values()),
        eta_x_terms=eta_x_terms,
        eta_y_terms=eta_y_terms,
        mu_terms=mu_terms,
    )


def epoch_budget(epsilon: float, delta: float, G: float, f_gap: float, n: int) -> int:
    """Epochs sufficient for the scheme's average-gradient guarantee.

    ceil of eps^-2 [2/delta + G^2/8] + eps^-4 [(f_gap + 3)/n]; delta is the
    allowed failure probability.
    """
    _check_positive("epsilon", epsilon)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    _check_nonneg("G", G)
    _check_nonneg("f_gap", f_gap)
    n = _check_count("n", n)
    total = epsilon**-2 * (2.0 / delta + G * G / 8.0) + epsilon**-4 * ((f_gap + 3.0) / n)
    return int(math.ceil(total))


def estimate_constants(
    obj: FiniteSumObjective,
    cfg: ProbeConfig,
    points,
    rng: RngStream,
    *,
    f_star: float | None = None,
) -> SmoothnessConstants:
    """Measure constants over a set of points with curvature probes.

    L_x/L_y maximize the operator lower bound of full-objective block probes
    over the points; L_x_max/L_y_max additionally maximize over single-sample
    probes.  G is the largest full gradient norm, sigma the largest sample
    standard deviation.  f_gap compares the first point's value with f_star
    (argument, or the objective's analytic minimum when it has one).
    """
    pts = [p for p in points]
    if not pts:
        raise ValueError("points must contain at least one point")
    for w in pts:
        obj.check_point(w)

    L_x = L_y = L_x_max = L_y_max = 0.0
    grad_bound = 0.0
    sigma = 0.0
    for w in pts:
        for block in (Block.X, Block.Y):
            bcfg = block_config(cfg, block)
            full_lb = estimate_block_lipschitz(obj, w, bcfg, rng).operator_lb
            sample_lb = max(
                estimate_block_lipschitz(obj, w, bcfg, rng, sample=i).operator_lb
                for i in range(obj.n)
            )
            if block is Block.X:
                L_x = max(L_x, full_lb)
                L_x_max = max(L_x_max, full_lb, sample_lb)
            else:
                L_y = max(L_y, full_lb)
                L_y_max = max(L_y_max, full_lb, sample_lb)
        grad_bound = max(grad_bound, float(np.linalg.norm(obj.grad_full(w))))
        sigma = max(sigma, math.sqrt(obj.sample_variance(w)))

    if f_star is None:
        f_star = obj.f_star
    if f_star is None:
        raise ValueError(
            "f_star is required: pass it explicitly or use an objective with an analytic minimum"
        )
    f_gap = max(0.0, obj.eval_full(pts[0]) - float(f_star))
    return SmoothnessConstants(
        L_x=L_x,
        L_y=L_y,
        L_x_max=L_x_max,
        L_y_max=L_y_max,
        G=grad_bound,
        sigma=sigma,
        f_gap=f_gap,
    )
