"""ADAM with step-halving learning rate and multi-start warm-up training."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .network import NetworkParams, NetworkShape, init_random, save_params

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainSchedule:
    """Learning-rate schedule and multi-start protocol.

    ``total_iters`` counts all iterations of the selected run, its warm-up
    included; continued training resumes at ``warmup_iters``.
    """

    initial_lr: float = 0.004
    halving_period: int = 50000
    total_iters: int = 200000
    warmup_restarts: int = 10
    warmup_iters: int = 5000

    def __post_init__(self):
        if not self.initial_lr > 0:
            raise ValueError("initial_lr must be positive")
        if self.halving_period <= 0:
            raise ValueError("halving_period must be positive")
        if self.total_iters < 0 or self.warmup_iters < 0:
            raise ValueError("iteration counts must be non-negative")
        if self.warmup_restarts < 1:
            raise ValueError("need at least one warm-up run")

    @property
    def horizon(self) -> int:
        return max(self.total_iters, self.warmup_iters)


def lr_at(schedule: TrainSchedule, iteration: int) -> float:
    """``initial_lr * 2**-(iteration // halving_period)``."""
    if not 0 <= iteration < schedule.horizon:
        raise IndexError(f"iteration {iteration} outside [0, {schedule.horizon})")
    return schedule.initial_lr * 0.5 ** (iteration // schedule.halving_period)


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, n: int, **hyper) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, **hyper)


def adam_step(params: NetworkParams, grads: np.ndarray, state: AdamState, lr: float):
    """One bias-corrected ADAM update; returns ``(new_params, new_state)``."""
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.flat.shape or state.m.shape != grads.shape:
        raise ValueError(
            f"layout mismatch: params {params.flat.shape}, grads {grads.shape}, "
            f"state {state.m.shape}"
        )
    if not np.all(np.isfinite(grads)):
        bad = int(np.flatnonzero(~np.isfinite(grads))[0])
        raise FloatingPointError(
            f"non-finite gradient component {bad} at ADAM step {state.t + 1}"
        )
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    flat = params.flat - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params.with_flat(flat), replace(state, m=m, v=v, t=t)


@dataclass
class TrainResult:
    params: NetworkParams
    history: list[tuple[int, float, float]]
    warmup_losses: list[float]
    best_restart: int
    final_loss: float
    state: AdamState | None = None
    seeds: list[int] = field(default_factory=list)


def _run(objective, params, state, schedule, start, stop, history,
         checkpoint_dir=None, checkpoint_every=10000):
    for it in range(start, stop):
        lr = lr_at(schedule, it)
        loss, grad = objective.loss_and_grad(params)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss at iteration {it}")
        history.append((it, lr, loss))
        try:
            params, state = adam_step(params, grad, state, lr)
        except FloatingPointError as exc:
            raise FloatingPointError(f"iteration {it}: {exc}") from None
        if checkpoint_dir is not None and (it + 1) % checkpoint_every == 0:
            save_params(params, Path(checkpoint_dir) / f"checkpoint_{it + 1:07d}.bin")
    return params, state


def multistart_train(objective, shape: NetworkShape, schedule: TrainSchedule,
                     seed: int = 0, checkpoint_dir=None,
                     checkpoint_every: int = 10000) -> TrainResult:
    """Warm up ``warmup_restarts`` random nets, continue the best one.

    Restart ``r`` is initialized with seed ``seed + r``.  Runs are compared
    on the loss after their last warm-up step.  ``objective`` needs
    ``loss(params)`` and ``loss_and_grad(params)``.
    """
    warm = min(schedule.warmup_iters, schedule.horizon)
    best = None
    warmup_losses = []
    seeds = [seed + r for r in range(schedule.warmup_restarts)]
    for r, s in enumerate(seeds):
        params = init_random(shape, s)
        state = AdamState.fresh(params.flat.size)
        history: list[tuple[int, float, float]] = []
        params, state = _run(objective, params, state, schedule, 0, warm, history)
        loss = objective.loss(params)
        warmup_losses.append(loss)
        logger.info("warm-up run %d (seed %d): loss %.6e", r, s, loss)
        if best is None or loss < best[0]:
            best = (loss, r, params, state, history)

    loss, r, params, state, history = best
    if schedule.total_iters > warm:
        if checkpoint_dir is not None:
            Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
        params, state = _run(objective, params, state, schedule, warm,
                             schedule.total_iters, history, checkpoint_dir,
                             checkpoint_every)
        loss = objective.loss(params)
    logger.info("finished: restart %d, loss %.6e", r, loss)
    return TrainResult(params, history, warmup_losses, r, loss, state, seeds)


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "lr", "loss"])
        for it, lr, loss in history:
            writer.writerow([it, repr(lr), repr(loss)])
