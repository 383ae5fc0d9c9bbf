"""Finite-difference verification of the analytic LS gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functional import LSObjective, TransportConfig
from .network import NetworkShape, init_random, preactivations
from .quadrature import build_domain_mesh, build_inflow_mesh


def central_differences(objective, params, step: float = 1e-6) -> np.ndarray:
    grad = np.empty_like(params.flat)
    base = params.flat
    for i in range(base.size):
        up = base.copy()
        up[i] += step
        down = base.copy()
        down[i] -= step
        grad[i] = (objective.loss(params.with_flat(up))
                   - objective.loss(params.with_flat(down))) / (2.0 * step)
    return grad


def relative_deviation(analytic, numeric, floor: float = 1e-3) -> float:
    """Max componentwise ``|a - n| / max(|n|, floor * ||n||_inf)``."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    scale = np.maximum(np.abs(numeric), floor * np.max(np.abs(numeric), initial=0.0))
    diff = np.abs(analytic - numeric)
    if not np.any(diff):
        return 0.0
    return float(np.max(diff / np.maximum(scale, np.finfo(float).tiny)))


@dataclass
class GradCheckResult:
    passed: bool
    max_deviation: float
    draws: int
    skipped: int
    tol: float


def min_preactivation(params, points) -> float:
    """Smallest hidden-layer ``|W a - b|`` over a batch of points."""
    zs = preactivations(params, points)[:-1]
    return float(min(np.min(np.abs(z)) for z in zs))


def gradcheck(problem, shape: NetworkShape, seed: int = 0, draws: int = 20,
              h: float = 0.1, step: float = 1e-6, tol: float = 1e-5,
              kink_tol: float = 1e-4, corrupt: bool = False,
              max_attempts: int = 2000) -> GradCheckResult:
    """Compare analytic and central-difference gradients on random networks.

    Draws whose hidden pre-activations come within ``kink_tol`` of zero at
    any evaluation point are skipped and replaced by the next seed, since a
    difference step may then straddle a ReLU kink.  ``corrupt`` perturbs the
    analytic gradient and must make the check fail.
    """
    dmesh = build_domain_mesh(problem.box, h)
    bmesh = build_inflow_mesh(problem, h)
    obj = LSObjective(problem, dmesh, bmesh, TransportConfig.for_mesh(h))
    worst = 0.0
    used = skipped = 0
    s = seed
    while used < draws:
        if used + skipped >= max_attempts:
            raise RuntimeError(f"only {used} kink-free draws in {max_attempts} attempts")
        params = init_random(shape, s)
        s += 1
        if min_preactivation(params, obj.batch) < kink_tol:
            skipped += 1
            continue
        _, analytic = obj.loss_and_grad(params)
        if corrupt:
            analytic = analytic.copy()
            analytic[np.argmax(np.abs(analytic))] *= 1.01
        numeric = central_differences(obj, params, step)
        worst = max(worst, relative_deviation(analytic, numeric))
        used += 1
    return GradCheckResult(worst < tol, worst, used, skipped, tol)
