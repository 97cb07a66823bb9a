"""Desk-scale D-PSGD and consensus simulation on synthetic quadratic tasks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mixing import MixingMatrix, rho

__all__ = [
    "QuadraticTask",
    "TrainState",
    "DivergenceError",
    "dpsgd_step",
    "run_consensus",
    "run_dpsgd",
    "first_passage",
]


class DivergenceError(RuntimeError):
    def __init__(self, iteration: int):
        super().__init__(f"training diverged at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class QuadraticTask:
    """Per-agent quadratic objectives (a_i/2)||x - c_i||^2 with gradient noise."""

    centers: np.ndarray  # (m, d)
    curvatures: np.ndarray  # (m,)
    noise: float = 0.0

    def __post_init__(self):
        if self.centers.ndim != 2:
            raise ValueError("centers must be (agents, dim)")
        if self.curvatures.shape != (self.centers.shape[0],):
            raise ValueError("one curvature per agent")
        if np.any(self.curvatures <= 0):
            raise ValueError("curvatures must be positive")

    @property
    def m(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def minimizer(self) -> np.ndarray:
        a = self.curvatures[:, None]
        return (a * self.centers).sum(axis=0) / self.curvatures.sum()

    def gradients(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        g = self.curvatures[:, None] * (x - self.centers)
        if self.noise > 0:
            g = g + self.noise * rng.standard_normal(x.shape)
        return g


@dataclass
class TrainState:
    x: np.ndarray  # (m, d) per-agent parameters
    eta: float
    rng: np.random.Generator
    iteration: int = 0
    consensus_history: list = field(default_factory=list)
    opt_distance_history: list = field(default_factory=list)

    def consensus_distance(self) -> float:
        return float(np.linalg.norm(self.x - self.x.mean(axis=0)))

    def mean_parameters(self) -> np.ndarray:
        return self.x.mean(axis=0)


def dpsgd_step(state: TrainState, w: MixingMatrix, task: QuadraticTask) -> TrainState:
    """One simultaneous round: mix neighbors' parameters, apply local gradients."""
    dense = w.dense()
    grads = task.gradients(state.x, state.rng)
    state.x = dense @ state.x - state.eta * grads
    state.iteration += 1
    return state


def run_consensus(w: MixingMatrix, x0: np.ndarray, k_max: int) -> np.ndarray:
    """Disagreement trace ||x^k - mean(x^0)|| under pure mixing x -> Wx.

    Rejects designs whose consensus gap norm is not below one; asserts the
    geometric contraction along the way.
    """
    r = rho(w)
    if r >= 1.0:
        raise ValueError(f"design does not contract (rho={r})")
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim == 1:
        x0 = x0[:, None]
    dense = w.dense()
    mean = np.broadcast_to(x0.mean(axis=0), x0.shape)
    trace = [float(np.linalg.norm(x0 - mean))]
    x = x0
    for k in range(1, k_max + 1):
        x = dense @ x
        dist = float(np.linalg.norm(x - mean))
        if dist > r**k * trace[0] + 1e-9:
            raise AssertionError(
                f"contraction violated at step {k}: {dist} > {r**k * trace[0]}"
            )
        trace.append(dist)
    return np.array(trace)


def run_dpsgd(
    task: QuadraticTask,
    w: MixingMatrix,
    eta: float,
    k_max: int,
    seed: int,
) -> TrainState:
    """Run D-PSGD for k_max iterations and record convergence diagnostics."""
    r = rho(w)
    if r >= 1.0:
        raise ValueError(f"design does not contract (rho={r})")
    if eta >= 1.0 / float(np.max(task.curvatures)):
        raise ValueError("learning rate too large for stability")
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal((task.m, task.dim))
    state = TrainState(x=x0, eta=eta, rng=rng)
    x_star = task.minimizer()
    initial = float(np.linalg.norm(state.mean_parameters() - x_star))
    for _ in range(k_max):
        dpsgd_step(state, w, task)
        dist = float(np.linalg.norm(state.mean_parameters() - x_star))
        state.consensus_history.append(state.consensus_distance())
        state.opt_distance_history.append(dist)
        if initial > 0 and dist > 10.0 * initial:
            raise DivergenceError(state.iteration)
    return state


def first_passage(history, threshold: float):
    """1-based index of the first value at or below the threshold, else None."""
    for idx, value in enumerate(history, start=1):
        if value <= threshold:
            return idx
    return None
