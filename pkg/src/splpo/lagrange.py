"""Lagrangean relaxation of the assignment and preference constraints.

Relaxing both constraint families leaves a problem that decomposes over
facilities and is solvable in closed form: facility j opens exactly when its
aggregated reduced cost is negative. The dual is maximized with a projected
subgradient method driven by a target upper bound (Polyak-style step sizes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instance import Instance
from .solution import heuristic_hc


@dataclass(frozen=True)
class LagrangeMultipliers:
    """mu penalizes unassigned customers (free sign); lam penalizes preference
    violations and must stay componentwise nonnegative."""

    mu: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        if np.any(self.lam < 0):
            raise ValueError("lam must be nonnegative")


@dataclass(frozen=True)
class LrSolution:
    """Closed-form relaxation output; (x, y) need not be feasible upstream."""

    value: float
    x: np.ndarray
    y: np.ndarray
    rho: np.ndarray


def cumulative_lambda(inst: Instance, lam: np.ndarray) -> np.ndarray:
    """For each (i, j): the sum of lam[i, k] over every facility k that
    customer i ranks no better than j, including j itself.

    Computed as suffix sums along each customer's ranking, so row i sums to
    sum_j p[i, j] * lam[i, j] (a useful checksum).
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lam must be nonnegative")
    rows = np.arange(inst.m)[:, None]
    by_rank = lam[rows, inst.facility_of_rank]
    suffix = np.cumsum(by_rank[:, ::-1], axis=1)[:, ::-1]
    return suffix[rows, inst.p - 1]


def solve_lr(inst: Instance, mult: LagrangeMultipliers) -> LrSolution:
    """Closed-form optimum of the relaxation at fixed multipliers.

    Facility j opens iff rho_j < 0, where rho_j adds every negative reduced
    service cost in column j to the penalized opening cost. x[i, j] = 1 iff
    j is open and the reduced cost is strictly negative. The value is the
    sum of negative rho plus the mu total, a lower bound on the optimum.
    """
    reduced = inst.c - mult.mu[:, None] - cumulative_lambda(inst, mult.lam)
    rho = np.minimum(reduced, 0.0).sum(axis=0) + inst.f + mult.lam.sum(axis=0)
    y = rho < 0.0
    x = (y[None, :] & (reduced < 0.0)).astype(np.int8)
    value = float(rho[y].sum() + mult.mu.sum())
    return LrSolution(value=value, x=x, y=y, rho=rho)


def lr_subgradient(inst: Instance, lr: LrSolution) -> tuple[np.ndarray, np.ndarray]:
    """Subgradient at the multipliers that produced lr.

    Returns (s_mu, s_lam): s_mu[i] = 1 - (assignments of customer i), and
    s_lam[i, j] = y_j - (assignments of i to facilities it weakly prefers
    over j). A zero vector certifies dual optimality.
    """
    x = lr.x.astype(float)
    rows = np.arange(inst.m)[:, None]
    s_mu = 1.0 - x.sum(axis=1)
    by_rank = x[rows, inst.facility_of_rank]
    prefix = np.cumsum(by_rank, axis=1)
    covered = prefix[rows, inst.p - 1]
    s_lam = lr.y.astype(float)[None, :] - covered
    return s_mu, s_lam


def default_start(inst: Instance) -> LagrangeMultipliers:
    """mu_i = min_j (c[i, j] + f[j]), lam = 0."""
    mu = (inst.c + inst.f[None, :]).min(axis=1)
    return LagrangeMultipliers(mu=mu, lam=np.zeros((inst.m, inst.n)))


@dataclass(frozen=True)
class SgConfig:
    """Subgradient-method settings.

    The step multiplier beta starts at beta0 and shrinks once the incumbent
    has not improved for stall_window consecutive iterations: linearly by
    beta_decrement per iteration under the default schedule, or multiplied
    by beta_decrement under the "multiplicative" schedule. The run stops at
    beta <= 0, a zero subgradient, or max_iter updates. lr_aim is the target
    upper bound for the step size; None means take it from heuristic_hc.
    """

    max_iter: int = 1500
    beta0: float = 2.0
    stall_window: int = 30
    beta_decrement: float = 0.005
    schedule: str = "linear"
    lr_aim: float | None = None
    tol: float = 1e-9

    def __post_init__(self):
        if self.schedule not in ("linear", "multiplicative"):
            raise ValueError(f"unknown beta schedule {self.schedule!r}")


@dataclass(frozen=True)
class SgTraceRow:
    iteration: int
    lr_value: float
    lr_best: float
    beta: float
    alpha: float
    s_norm_sq: float


@dataclass
class SgResult:
    best_value: float
    best_mu: np.ndarray
    best_lam: np.ndarray
    best_iteration: int
    iterations: int
    status: str  # "optimal", "beta_exhausted", "iter_limit", or "aim_exceeded"
    trace: list = field(default_factory=list)


def subgradient_method(
    inst: Instance, cfg: SgConfig = SgConfig(), start: LagrangeMultipliers | None = None
) -> SgResult:
    """Maximize the Lagrangean dual by projected subgradient steps.

    Steps use alpha = beta * (lr_aim - value) / ||s||^2; mu moves freely while
    lam is clipped at zero. The incumbent is the best relaxation value seen,
    with the achieving multipliers retained. Iterations count multiplier
    updates; the starting point is iteration 0.
    """
    if start is None:
        start = default_start(inst)
    lr_aim = cfg.lr_aim
    if lr_aim is None:
        hc_sol, _ = heuristic_hc(inst)
        lr_aim = hc_sol.objective

    mu = start.mu.copy()
    lam = start.lam.copy()
    lr = solve_lr(inst, LagrangeMultipliers(mu, lam))
    best_value = lr.value
    best_mu, best_lam = mu.copy(), lam.copy()
    best_iteration = 0
    beta = cfg.beta0
    stall = 0
    status = "iter_limit"
    trace = []
    iteration = 0

    while True:
        s_mu, s_lam = lr_subgradient(inst, lr)
        norm_sq = float((s_mu**2).sum() + (s_lam**2).sum())
        if norm_sq == 0.0:
            trace.append(
                SgTraceRow(iteration, lr.value, best_value, beta, 0.0, 0.0)
            )
            status = "optimal"
            break
        gap = lr_aim - lr.value
        if gap < 0:
            trace.append(
                SgTraceRow(iteration, lr.value, best_value, beta, math.nan, norm_sq)
            )
            status = "aim_exceeded"
            break
        alpha = beta * gap / norm_sq
        trace.append(SgTraceRow(iteration, lr.value, best_value, beta, alpha, norm_sq))
        if iteration >= cfg.max_iter:
            status = "iter_limit"
            break

        mu = mu + alpha * s_mu
        lam = np.maximum(0.0, lam + alpha * s_lam)
        lr = solve_lr(inst, LagrangeMultipliers(mu, lam))
        iteration += 1
        if lr.value > best_value + cfg.tol:
            best_value = lr.value
            best_mu, best_lam = mu.copy(), lam.copy()
            best_iteration = iteration
            stall = 0
        else:
            stall += 1
        if stall >= cfg.stall_window:
            if cfg.schedule == "linear":
                beta -= cfg.beta_decrement
            else:
                beta *= cfg.beta_decrement
        if beta <= 0:
            trace.append(
                SgTraceRow(iteration, lr.value, best_value, beta, math.nan, math.nan)
            )
            status = "beta_exhausted"
            break

    return SgResult(
        best_value=best_value,
        best_mu=best_mu,
        best_lam=best_lam,
        best_iteration=best_iteration,
        iterations=iteration,
        status=status,
        trace=trace,
    )


__all__ = [
    "LagrangeMultipliers",
    "LrSolution",
    "SgConfig",
    "SgResult",
    "SgTraceRow",
    "cumulative_lambda",
    "default_start",
    "lr_subgradient",
    "solve_lr",
    "subgradient_method",
]
