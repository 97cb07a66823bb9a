"""Convergence bound, total-time prediction, and the FMMD guarantee."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .comm import completion_time, demands_from_activation, link_loads
from .mixing import MixingMatrix, rho
from .netmodel import CategoryTable, PathTable, UnderlayNet
from .routing import (
    category_completion_time,
    optimize_routing_exact,
    optimize_routing_local,
    tau_bar,
)

__all__ = [
    "ConvergenceConstants",
    "iterations_to_converge",
    "TotalTimePrediction",
    "total_time",
    "fmmd_guarantee",
]


@dataclass(frozen=True)
class ConvergenceConstants:
    """Problem constants entering the iteration bound.

    Values are conventions for relative comparisons: the bound's hidden
    constant is fixed to one, so predicted iteration counts are meaningful
    up to that constant.
    """

    smoothness: float = 1.0  # l
    grad_noise: float = 1.0  # sigma-hat
    heterogeneity: float = 1.0  # zeta-hat
    m1: float = 0.0
    m2: float = 0.0
    epsilon: float = 0.1  # target stationarity
    objective_gap: float = 1.0  # F(x_bar_1) - F_inf
    agents: int = 2

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.agents < 2:
            raise ValueError("need at least 2 agents")
        for name in ("smoothness", "grad_noise", "heterogeneity", "m1", "m2",
                     "objective_gap"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def iterations_to_converge(rho_value: float, c: ConvergenceConstants) -> float:
    """Iterations needed to reach the stationarity target, up to a constant.

    Diverges (returns inf) when the consensus gap norm is not below one.
    """
    if rho_value >= 1.0:
        return math.inf
    one_minus = 1.0 - rho_value**2
    eps = c.epsilon
    term1 = c.grad_noise**2 / (c.agents * eps**2)
    term2 = (
        c.heterogeneity * math.sqrt(c.m1 + 1.0)
        + c.grad_noise * math.sqrt(one_minus)
    ) / (one_minus * eps**1.5)
    term3 = math.sqrt((c.m2 + 1.0) * (c.m1 + 1.0)) / (one_minus * eps)
    return c.smoothness * c.objective_gap * (term1 + term2 + term3)


@dataclass(frozen=True)
class TotalTimePrediction:
    tau: float
    iterations: float
    total: float
    rho: float
    convergent: bool


def total_time(
    design: MixingMatrix,
    cats: CategoryTable,
    kappa: float,
    constants: ConvergenceConstants,
    router: str = "default",
    net: UnderlayNet | None = None,
    paths: PathTable | None = None,
    relay_depth: int = 2,
    budget: int = 1000,
    seed: int = 0,
) -> TotalTimePrediction:
    """Predicted training time: per-iteration time times iteration count.

    The per-iteration time comes from the chosen routing of the demands the
    design triggers: "default" uses the closed-form direct-routing value,
    "local" the hill-climbing router, "exact" the branch-and-bound router
    (which needs the underlay). A design with consensus gap >= 1 is flagged
    non-convergent and predicts infinite time.
    """
    support = design.support()
    r = rho(design)
    k_pred = iterations_to_converge(r, constants)
    demands = demands_from_activation(support, kappa)
    if router == "default":
        tau = tau_bar(support, cats, kappa)
    elif router == "local":
        sol = optimize_routing_local(demands, cats, budget=budget, seed=seed)
        tau = category_completion_time(sol, cats, kappa)
    elif router == "exact":
        if net is None:
            raise ValueError("exact routing needs the underlay network")
        if paths is None:
            from .netmodel import shortest_paths

            paths = shortest_paths(net)
        sol = optimize_routing_exact(demands, cats, net, paths, relay_depth)
        tau = completion_time(link_loads(sol, paths), net, kappa)
    else:
        raise ValueError(f"unknown router {router!r}")
    total = tau * k_pred if math.isfinite(k_pred) else math.inf
    return TotalTimePrediction(
        tau=tau,
        iterations=k_pred,
        total=total,
        rho=r,
        convergent=r < 1.0,
    )


def fmmd_guarantee(
    m: int,
    iterations: int,
    cats: CategoryTable,
    kappa: float,
    constants: ConvergenceConstants,
) -> float:
    """Upper bound on the total time of the vanilla Frank-Wolfe design."""
    if m <= 3:
        raise ValueError("guarantee requires more than 3 agents")
    if iterations <= 16.0 * m / 3.0 - 2.0:
        raise ValueError("guarantee requires T > 16m/3 - 2")
    rho_bound = (m - 3.0) / m + 16.0 / (iterations + 2.0)
    c_min = cats.min_capacity
    return (kappa * iterations / c_min) * iterations_to_converge(
        rho_bound, constants
    )
