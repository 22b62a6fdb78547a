"""Descent of the noise-amplification cost over launch-state sets.

Two parameterizations of the same search space are offered: "projected"
walks the states directly on the product of unit spheres (tangent gradient
plus renormalization), "hyperspherical" walks the unconstrained angle chart
of each state.  Both run the shared two-phase loop: normalized fixed steps
while the cost is far above the orthonormal bound, then Armijo backtracking.

The cost gradient is exact and analytic.  Writing the Gram entries as
G_jk = (n/(n-1)) (|<s_j|s_k>|^2 - |s_j|^2 |s_k|^2 / n) extends the cost
smoothly off the unit spheres, which is what makes plain finite differences
a valid oracle for the full gradient; the sphere algorithms then project or
chain-rule that gradient into their own coordinates.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import spheres
from .errors import ConfigError, SearchFailedError, SingularSetError
from .gellmann import (
    angles_to_states,
    angles_to_states_jacobian,
    jones_to_hyperspherical,
)
from .sets import LaunchSet, canonicalize_phases, random_set
from .seeding import rng_for

__all__ = [
    "ALGORITHMS",
    "OptimizerConfig",
    "OptimizerRun",
    "MultiStartResult",
    "cost_and_gradient",
    "gradient_jones",
    "gradient_hyperspherical",
    "descend",
    "multi_start",
    "gradient_check",
    "jitter_set",
]

ALGORITHMS = ("hyperspherical", "projected")


@dataclass(frozen=True)
class OptimizerConfig:
    """Descent settings; None leaves a field on its dimension-aware default.

    grad_tol defaults to 1e-9 (n^2 - 1); the fixed phase-1 step defaults to
    0.01 sqrt(n_params) with n_params the real parameter count of the chosen
    parameterization.  Phase 1 engages while the cost exceeds
    normalized_phase_threshold times the orthonormal bound n^2 - 1.
    """

    algorithm: str = "hyperspherical"
    max_iters: int = 100_000
    grad_tol: float | None = None
    normalized_phase_threshold: float = 10.0
    normalized_phase_step: float | None = None
    backtracking_alpha: float = 0.3
    backtracking_beta: float = 0.5
    initial_step: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"unknown algorithm {self.algorithm!r}, pick from {ALGORITHMS}")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if self.grad_tol is not None and self.grad_tol <= 0:
            raise ConfigError("grad_tol must be positive")
        if self.normalized_phase_threshold <= 0:
            raise ConfigError("normalized_phase_threshold must be positive")
        if self.normalized_phase_step is not None and self.normalized_phase_step <= 0:
            raise ConfigError("normalized_phase_step must be positive")
        if not 0.0 < self.backtracking_alpha < 1.0:
            raise ConfigError("backtracking_alpha must be in (0, 1)")
        if not 0.0 < self.backtracking_beta < 1.0:
            raise ConfigError("backtracking_beta must be in (0, 1)")
        if self.initial_step <= 0:
            raise ConfigError("initial_step must be positive")


@dataclass
class OptimizerRun:
    """One descent, start to finish."""

    final_set: LaunchSet
    algorithm: str
    initial_xi: float
    final_xi: float
    grad_norm: float
    iterations_used: int
    phase1_iters: int
    converged: bool
    aborted: bool
    stop_reason: str
    trajectory: np.ndarray  # (k, 3) columns: iteration, cost, gradient norm


@dataclass
class MultiStartResult:
    """All starts of a multi-start search; best picks the lowest final cost
    among runs that did not abort (ties go to the lowest start index)."""

    runs: list
    best_index: int

    @property
    def best(self) -> OptimizerRun:
        return self.runs[self.best_index]


def _extension_gram(states: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ov = states.conj() @ states.T
    sq = (ov.conj() * ov).real
    nrm2 = np.diag(ov).real
    g = (n / (n - 1.0)) * (sq - np.outer(nrm2, nrm2) / n)
    return g, ov, nrm2


def cost_and_gradient(states: np.ndarray, n: int) -> tuple[float, np.ndarray]:
    """Cost Tr(G^-1) and its full Euclidean gradient in the state entries.

    Valid for non-unit rows as well (the off-sphere extension above), so a
    componentwise finite difference reproduces it without any projection.

    Raises
    ------
    SingularSetError
        When the Gram is not numerically positive definite.
    """
    g, ov, nrm2 = _extension_gram(states, n)
    try:
        c = cho_factor(g, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSetError(
            f"Gram matrix is not positive definite: {exc}") from exc
    ginv = cho_solve(c, np.eye(g.shape[0]), check_finite=False)
    xi = float(np.trace(ginv))
    q = ginv @ ginv
    coef = 4.0 * n / (n - 1.0)
    grad = -coef * ((q * ov.conj()) @ states
                    - ((q @ nrm2) / n)[:, None] * states)
    return xi, grad


def _cost_only(states: np.ndarray, n: int) -> float:
    g, _, _ = _extension_gram(states, n)
    try:
        c = cho_factor(g, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return math.inf
    ginv = cho_solve(c, np.eye(g.shape[0]), check_finite=False)
    return float(np.trace(ginv))


def gradient_jones(states: np.ndarray, n: int) -> tuple[float, np.ndarray]:
    """Cost and tangent-projected gradient for the projected algorithm."""
    xi, grad = cost_and_gradient(states, n)
    return xi, spheres.tangent_project(states, grad)


def _split_angles(angles: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    return angles[:, : n - 1], angles[:, n - 1:]


def gradient_hyperspherical(angles: np.ndarray, n: int) -> tuple[float, np.ndarray]:
    """Cost and gradient in the stacked angle chart.

    `angles` has shape (m, 2(n-1)): polar angles first, then phases.  The
    chain rule contracts the full state-space gradient with the analytic
    chart Jacobian; radial components vanish in the contraction because the
    chart moves states only tangentially.
    """
    phis, thetas = _split_angles(angles, n)
    states = angles_to_states(phis, thetas)
    xi, grad = cost_and_gradient(states, n)
    jac = angles_to_states_jacobian(phis, thetas)
    return xi, np.einsum("qc,qpc->qp", grad.conj(), jac).real


def _states_to_angles(states: np.ndarray) -> np.ndarray:
    rows = []
    for s in states:
        p = jones_to_hyperspherical(s)
        rows.append(np.concatenate([p.phis, p.thetas]))
    return np.array(rows)


def descend(initial: LaunchSet, config: OptimizerConfig | None = None) -> OptimizerRun:
    """Minimize the noise-amplification cost starting from one launch set."""
    if config is None:
        config = OptimizerConfig()
    n, m = initial.n, initial.m
    grad_tol = config.grad_tol if config.grad_tol is not None else 1e-9 * m
    threshold = config.normalized_phase_threshold * m
    log_stride = max(1, config.max_iters // 2000)

    if config.algorithm == "projected":
        n_params = 2 * m * n
        point0 = np.array(initial.states, dtype=complex)
        cost_fn = lambda st: _cost_only(st, n)
        grad_fn = lambda st: gradient_jones(st, n)
        retract = spheres.normalize_rows
    else:
        n_params = 2 * m * (n - 1)
        point0 = _states_to_angles(initial.states)
        cost_fn = lambda a: _cost_only(angles_to_states(*_split_angles(a, n)), n)
        grad_fn = lambda a: gradient_hyperspherical(a, n)
        retract = spheres.no_retraction
    phase1_step = (config.normalized_phase_step
                   if config.normalized_phase_step is not None
                   else 0.01 * math.sqrt(n_params))

    initial_xi = _cost_only(np.array(initial.states, dtype=complex), n)
    res = spheres.projected_descent(
        cost_fn, grad_fn, point0,
        grad_tol=grad_tol, max_iters=config.max_iters,
        alpha=config.backtracking_alpha, beta=config.backtracking_beta,
        initial_step=config.initial_step,
        phase1_threshold=threshold, phase1_step=phase1_step,
        log_stride=log_stride, retract=retract)

    if config.algorithm == "projected":
        final_states = res.states
    else:
        final_states = angles_to_states(*_split_angles(res.states, n))
    final_states = canonicalize_phases(final_states)
    meta = {
        "algorithm": config.algorithm,
        "initial_family": initial.family,
        "initial_xi": initial_xi,
        "final_xi": res.cost,
        "iterations": res.iterations,
        "converged": res.converged,
    }
    final_set = LaunchSet(n=n, states=final_states, family="optimized",
                          meta=meta)
    return OptimizerRun(
        final_set=final_set, algorithm=config.algorithm,
        initial_xi=initial_xi, final_xi=res.cost, grad_norm=res.grad_norm,
        iterations_used=res.iterations, phase1_iters=res.phase1_iters,
        converged=res.converged, aborted=res.aborted,
        stop_reason=res.stop_reason, trajectory=res.log.as_array())


def jitter_set(s: LaunchSet, scale: float = 1e-6, seed: int = 0) -> LaunchSet:
    """Nudge every state tangentially by `scale`, deterministically.

    Exact family constructions can sit at stationary points of the cost,
    where descent stops on the spot with a zero gradient.  A tiny tangent
    kick breaks the symmetry while moving each state by only about `scale`,
    so descent started from the jittered set reports a strictly smaller
    final cost whenever the start was not a local minimum.
    """
    if scale <= 0:
        raise ConfigError("jitter scale must be positive")
    states = np.array(s.states, dtype=complex)
    rng = rng_for(seed, 202)
    noise = (rng.standard_normal(states.shape)
             + 1j * rng.standard_normal(states.shape))
    bump = spheres.tangent_project(states, noise)
    norms = np.linalg.norm(bump, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    jittered = spheres.normalize_rows(states + scale * bump / norms)
    meta = dict(s.meta)
    meta.update({"jitter_scale": scale, "jitter_seed": seed})
    return LaunchSet(n=s.n, states=jittered, family=s.family, meta=meta)


def _descend_start(args) -> OptimizerRun:
    n, config, start = args
    initial = random_set(n, seed=config.seed + start)
    return descend(initial, config)


def multi_start(n: int, starts: int = 8,
                config: OptimizerConfig | None = None) -> MultiStartResult:
    """Descend from `starts` random sets (seed + i for start i) and keep all
    runs.  Worker count comes from STOKES_OPT_THREADS (default serial).

    Raises
    ------
    SearchFailedError
        When every start aborted on a singular iterate.
    """
    if starts < 1:
        raise ConfigError("starts must be at least 1")
    if config is None:
        config = OptimizerConfig()
    jobs = [(n, config, i) for i in range(starts)]
    workers = int(os.environ.get("STOKES_OPT_THREADS", "1"))
    if workers > 1 and starts > 1:
        with ProcessPoolExecutor(max_workers=min(workers, starts)) as pool:
            runs = list(pool.map(_descend_start, jobs))
    else:
        runs = [_descend_start(j) for j in jobs]
    best_index = None
    for i, run in enumerate(runs):
        if run.aborted:
            continue
        if best_index is None or run.final_xi < runs[best_index].final_xi:
            best_index = i
    if best_index is None:
        raise SearchFailedError(
            f"all {starts} starts aborted on singular iterates for n={n}")
    return MultiStartResult(runs=runs, best_index=best_index)


def gradient_check(n: int, algorithm: str = "projected", trials: int = 3,
                   seed: int = 0, h: float = 1e-6) -> float:
    """Largest relative error between the analytic gradient and a central
    finite difference of the cost, over `trials` random nonsingular sets.

    The projected check differentiates the off-sphere cost extension entry
    by entry against the full gradient; the hyperspherical check perturbs
    each angle of the chart.
    """
    if algorithm not in ALGORITHMS:
        raise ConfigError(
            f"unknown algorithm {algorithm!r}, pick from {ALGORITHMS}")
    worst = 0.0
    for trial in range(trials):
        states = random_set(n, seed=seed + trial).states
        if algorithm == "projected":
            _, an = cost_and_gradient(states, n)
            fd = np.empty_like(an)
            for idx in np.ndindex(states.shape):
                bump = np.zeros_like(states)
                bump[idx] = h
                re = (_cost_only(states + bump, n)
                      - _cost_only(states - bump, n)) / (2 * h)
                bump[idx] = 1j * h
                im = (_cost_only(states + bump, n)
                      - _cost_only(states - bump, n)) / (2 * h)
                fd[idx] = re + 1j * im
        else:
            angles = _states_to_angles(states)
            _, an = gradient_hyperspherical(angles, n)
            fd = np.empty_like(an)
            for idx in np.ndindex(angles.shape):
                bump = np.zeros_like(angles)
                bump[idx] = h
                fd[idx] = (
                    _cost_only(angles_to_states(*_split_angles(angles + bump, n)), n)
                    - _cost_only(angles_to_states(*_split_angles(angles - bump, n)), n)
                ) / (2 * h)
        err = float(np.linalg.norm(fd - an) / max(np.linalg.norm(an), 1e-300))
        worst = max(worst, err)
    return worst
