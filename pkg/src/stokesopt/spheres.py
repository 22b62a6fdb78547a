"""Descent machinery on a product of unit spheres in C^n.

A point is an (m, n) complex array whose rows are unit vectors.  Treating each
row as a real 2n-vector, the feasible set is a product of m real unit spheres;
the tangent projection removes the radial component Re<s|g> s row by row and a
step retracts by renormalizing rows.

Both the launch-set optimizer and the symmetric-frame search drive this
module, supplying their own cost/gradient callables.  The line search is
plain Armijo backtracking with a warm-started, regrowing trial step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "normalize_rows",
    "no_retraction",
    "tangent_project",
    "armijo_step",
    "DescentLog",
    "DescentResult",
    "projected_descent",
]

_STEP_FLOOR = 1e-18


def normalize_rows(states: np.ndarray) -> np.ndarray:
    """Retract onto the product of spheres."""
    return states / np.linalg.norm(states, axis=1)[:, None]


def no_retraction(point: np.ndarray) -> np.ndarray:
    """Identity map, for unconstrained parameterizations (angle charts)."""
    return point


def tangent_project(states: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Remove the per-row radial component of a Euclidean gradient."""
    radial = np.sum(states.conj() * grad, axis=1).real
    return grad - radial[:, None] * states


def armijo_step(cost_fn: Callable[[np.ndarray], float],
                states: np.ndarray,
                f0: float,
                direction: np.ndarray,
                slope: float,
                t0: float,
                alpha: float,
                beta: float,
                retract: Callable[[np.ndarray], np.ndarray] = normalize_rows,
                ) -> tuple[float, np.ndarray | None, float]:
    """Backtracking line search along `direction` with retraction.

    Accepts the first t with f(retract(x + t d)) <= f0 + alpha * t * slope
    (slope is the directional derivative, negative for a descent direction).

    Returns
    -------
    (t, new_states, new_cost); new_states is None when no acceptable step
    exists above the step floor.
    """
    t = t0
    while t > _STEP_FLOOR:
        trial = retract(states + t * direction)
        ft = cost_fn(trial)
        if np.isfinite(ft) and ft <= f0 + alpha * t * slope:
            return t, trial, ft
        t *= beta
    return t, None, f0


@dataclass
class DescentLog:
    """Decimated per-iteration samples (iteration, cost, gradient norm)."""

    stride: int = 1
    rows: list = field(default_factory=list)

    def record(self, iteration: int, cost: float, grad_norm: float,
               force: bool = False):
        if force or iteration % self.stride == 0:
            self.rows.append((iteration, cost, grad_norm))

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, 3)


@dataclass
class DescentResult:
    states: np.ndarray
    cost: float
    grad_norm: float
    iterations: int
    converged: bool
    aborted: bool
    phase1_iters: int
    log: DescentLog
    stop_reason: str
    final_step: float


def projected_descent(cost_fn: Callable[[np.ndarray], float],
                      grad_fn: Callable[[np.ndarray], tuple[float, np.ndarray]],
                      states0: np.ndarray,
                      *,
                      grad_tol: float,
                      max_iters: int,
                      alpha: float = 0.3,
                      beta: float = 0.5,
                      initial_step: float = 1.0,
                      phase1_threshold: float | None = None,
                      phase1_step: float | None = None,
                      stop_fn: Callable[[np.ndarray], bool] | None = None,
                      log_stride: int = 1,
                      retract: Callable[[np.ndarray], np.ndarray] = normalize_rows,
                      ) -> DescentResult:
    """Two-phase gradient descent with a pluggable retraction.

    The default retraction renormalizes rows (descent on the product of unit
    spheres); `no_retraction` turns the same loop into plain descent over an
    unconstrained parameterization.

    Phase 1 (optional): while cost > phase1_threshold, take fixed-size steps
    along the normalized gradient.  Costs may transiently rise here; the
    phase exists to walk down the steep cliff of nearly singular
    configurations where backtracking would crawl.  The switch to phase 2 is
    one-way.

    Phase 2: Armijo backtracking along the negative gradient with a warm
    trial step (last accepted step divided by beta).  Accepted costs are
    strictly decreasing; a stalled line search terminates the run.

    grad_fn must return (cost, gradient) with the gradient already in the
    parameterization's own coordinates (tangent-projected for the sphere
    case); cost_fn alone is used for the cheaper line-search probes.
    """
    states = retract(np.array(states0))
    log = DescentLog(stride=max(1, int(log_stride)))
    f, g = grad_fn(states)
    gnorm = float(np.linalg.norm(g))
    log.record(0, f, gnorm, force=True)

    in_phase1 = phase1_threshold is not None and f > phase1_threshold
    phase1_iters = 0
    t_warm = initial_step
    it = 0
    stop_reason = "max_iters"
    converged = False
    aborted = False

    while it < max_iters:
        if stop_fn is not None and stop_fn(states):
            stop_reason = "stop_fn"
            converged = True
            break
        if gnorm <= grad_tol:
            stop_reason = "grad_tol"
            converged = True
            break
        it += 1
        if in_phase1:
            step = phase1_step if phase1_step is not None else 0.01
            states = retract(states - (step / max(gnorm, 1e-300)) * g)
            try:
                f, g = grad_fn(states)
            except ArithmeticError:
                aborted = True
                stop_reason = "singular_iterate"
                break
            gnorm = float(np.linalg.norm(g))
            phase1_iters = it
            if f <= phase1_threshold:
                in_phase1 = False
        else:
            t, trial, ft = armijo_step(cost_fn, states, f, -g, -gnorm * gnorm,
                                       t_warm, alpha, beta, retract=retract)
            if trial is None:
                stop_reason = "line_search_stall"
                break
            states, f = trial, ft
            t_warm = min(t / beta, 1e6)
            try:
                _, g = grad_fn(states)
            except ArithmeticError:
                aborted = True
                stop_reason = "singular_iterate"
                break
            gnorm = float(np.linalg.norm(g))
        log.record(it, f, gnorm)

    log.record(it, f, gnorm, force=True)
    return DescentResult(states=states, cost=f, grad_norm=gnorm, iterations=it,
                         converged=converged, aborted=aborted,
                         phase1_iters=phase1_iters, log=log,
                         stop_reason=stop_reason, final_step=t_warm)
