"""Gram matrix, noise-amplification cost and launch-set diagnostics.

For a launch set with coefficient matrix S (rows = Stokes images) the noise
amplification of the linear delay-vector reconstruction is

    xi = || S^-1 ||_F^2 = Tr(G^-1),        G = S S^T,

bounded below by n^2 - 1 with equality exactly when the Stokes rows are
orthonormal.  The per-measurement penalty is delta = xi / (n^2 - 1), reported
either raw or in dB.  G is always evaluated from Jones overlaps,
G_jk = 2 c_n^2 (|<s_j|s_k>|^2 - 1/n), which is cheaper and better conditioned
than squaring an explicitly built S; tests compare the two routes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, solve_triangular

from .errors import ConfigError, DimensionError, SingularSetError
from .sets import LaunchSet, gram_from_states

__all__ = [
    "COND_LIMIT",
    "SetMetrics",
    "gram",
    "cost",
    "penalty_db",
    "metrics",
    "metrics_from_gram",
    "variance_prediction",
]

# operative numerical-singularity threshold on cond2(G) = kappa(S)^2
COND_LIMIT = 1e14


@dataclass(frozen=True)
class SetMetrics:
    """Diagnostics of one launch set.

    penalty is xi / (n^2 - 1) >= 1; log_volume = log |det S| <= 0 (natural
    log), zero only for orthonormal Stokes rows; condition_number is
    kappa(S) = sigma_max / sigma_min.
    """

    n: int
    m: int
    xi: float
    penalty: float
    penalty_db: float
    condition_number: float
    singular_values: np.ndarray
    log_volume: float
    bound_ok: bool


def gram(s: LaunchSet) -> np.ndarray:
    """Stokes Gram G = S S^T computed from Jones overlaps."""
    return gram_from_states(s.states, s.n)


def _xi_cholesky(g: np.ndarray) -> float:
    """Tr(G^-1) via Cholesky; raises SingularSetError when G is not SPD.

    Lean path shared with the optimizer loop (no explicit condition check).
    """
    try:
        c, lower = cho_factor(g, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSetError(f"Gram matrix is not positive definite: {exc}") from exc
    linv = solve_triangular(c, np.eye(g.shape[0]), lower=True,
                            trans=0, check_finite=False)
    return float(np.sum(linv * linv))


def _check_conditioning(lam: np.ndarray) -> None:
    if lam[0] <= 0.0 or lam[-1] / lam[0] > COND_LIMIT:
        cond = math.inf if lam[0] <= 0 else lam[-1] / lam[0]
        raise SingularSetError(
            f"launch set is numerically singular: cond(G) = {cond:.3e} "
            f"exceeds {COND_LIMIT:.0e}")


def cost(s: LaunchSet) -> float:
    """Noise-amplification cost xi = Tr(G^-1).

    Raises
    ------
    SingularSetError
        When cond2(G) exceeds COND_LIMIT (kappa(S) > 1e7).
    """
    g = gram(s)
    lam = np.linalg.eigvalsh(g)
    _check_conditioning(lam)
    return _xi_cholesky(g)


def penalty_db(penalty: float) -> float:
    """Penalty in dB, 10 log10(delta)."""
    return 10.0 * math.log10(penalty)


def _metrics_from_eigs(n: int, lam: np.ndarray, xi: float) -> SetMetrics:
    m = n * n - 1
    sv = np.sqrt(np.maximum(lam[::-1], 0.0))
    pen = xi / m
    return SetMetrics(
        n=n, m=m, xi=xi, penalty=pen, penalty_db=penalty_db(pen),
        condition_number=float(sv[0] / sv[-1]),
        singular_values=sv,
        log_volume=float(0.5 * np.sum(np.log(lam))),
        bound_ok=bool(xi >= m - 1e-6),
    )


def metrics(s: LaunchSet) -> SetMetrics:
    """Full diagnostics; singular values come from the explicit S (SVD), the
    cost from the Jones-overlap Gram (Cholesky), keeping the two linear-
    algebra routes independent."""
    g = gram(s)
    lam = np.linalg.eigvalsh(g)
    _check_conditioning(lam)
    xi = _xi_cholesky(g)
    sv = np.linalg.svd(s.stokes_matrix(), compute_uv=False)
    m = s.m
    pen = xi / m
    return SetMetrics(
        n=s.n, m=m, xi=xi, penalty=pen, penalty_db=penalty_db(pen),
        condition_number=float(sv[0] / sv[-1]),
        singular_values=sv,
        log_volume=float(np.sum(np.log(sv))),
        bound_ok=bool(xi >= m - 1e-6),
    )


def metrics_from_gram(g: np.ndarray) -> SetMetrics:
    """Diagnostics straight from a Gram matrix (no states required).

    Serves the closed-form families at mode counts where constructing the
    states is not practical; sigma_k(S) = sqrt(eig_k(G)) exactly.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionError(f"expected a square Gram matrix, got {g.shape}")
    m = g.shape[0]
    n = int(round(math.sqrt(m + 1)))
    if n * n - 1 != m or n < 2:
        raise DimensionError(f"Gram size {m} is not n^2-1 for any n >= 2")
    lam = np.linalg.eigvalsh(g)
    _check_conditioning(lam)
    return _metrics_from_eigs(n, lam, _xi_cholesky(g))


def variance_prediction(s: LaunchSet, sigma_tg_sq: float) -> float:
    """Predicted E{||delta tau_vec||^2} = sigma_tg_sq * Tr((S S^T)^-1)."""
    if sigma_tg_sq < 0:
        raise ConfigError("variance must be non-negative")
    return sigma_tg_sq * cost(s)
