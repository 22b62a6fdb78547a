"""Launch-state set families and their closed-form figures of merit.

A launch set for n modes is an ordered tuple of n^2 - 1 unit Jones states;
stacking their Stokes images as rows gives the coefficient matrix S whose
conditioning controls noise amplification in delay-vector reconstruction.
This module builds the named families:

    yang_nolan   basis states plus pairwise (1, 1) and (1, i) superpositions
    mub_set      mutually unbiased bases (prime n), last vector of each dropped
    sic_search   numerically constructed symmetric informationally complete
                 set (equal squared overlaps 1/(n+1)), last vector dropped
    random_set   uniform random states, redrawn until S is nonsingular
    simplex_set  an orthonormal basis (n states), used for the common-mode
                 delay estimate; its Stokes images sum to zero

plus the closed-form penalties and log-volumes of the two symmetric families,
and JSON persistence for sets.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.optimize import least_squares

from . import spheres
from .errors import ConfigError, DimensionError, SearchFailedError
from .gellmann import jones_to_stokes_batch
from .seeding import rng_for

__all__ = [
    "LaunchSet",
    "SimplexSet",
    "yang_nolan",
    "yang_gram",
    "mub_set",
    "mub_gram",
    "sic_gram",
    "sic_search",
    "sic_penalty",
    "mub_penalty",
    "sic_log_volume",
    "mub_log_volume",
    "random_set",
    "random_states",
    "simplex_set",
    "haar_unitary",
    "canonicalize_phases",
    "save_set",
    "load_set",
    "bundled_optimal_set",
]


@dataclass
class LaunchSet:
    """n modes and the ordered (n^2-1, n) stack of unit launch states."""

    n: int
    states: np.ndarray
    family: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        st = np.asarray(self.states, dtype=complex)
        m = self.n * self.n - 1
        if st.shape != (m, self.n):
            raise DimensionError(
                f"launch set for n={self.n} needs shape ({m}, {self.n}), "
                f"got {st.shape}")
        norms = np.linalg.norm(st, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-10:
            raise DimensionError("launch states must be unit norm")
        self.states = st

    @property
    def m(self) -> int:
        return self.n * self.n - 1

    def stokes_matrix(self) -> np.ndarray:
        """Coefficient matrix S, rows = Stokes images."""
        return jones_to_stokes_batch(self.states)


@dataclass
class SimplexSet:
    """An orthonormal basis used for common-mode (tau_0) estimation."""

    n: int
    states: np.ndarray

    def __post_init__(self):
        st = np.asarray(self.states, dtype=complex)
        if st.shape != (self.n, self.n):
            raise DimensionError(
                f"simplex for n={self.n} needs shape ({self.n}, {self.n}), "
                f"got {st.shape}")
        gram = st.conj() @ st.T
        if np.max(np.abs(gram - np.eye(self.n))) > 1e-10:
            raise DimensionError("simplex states must be orthonormal")
        self.states = st


def _overlap_sq_to_gram(q: np.ndarray, n: int) -> np.ndarray:
    # shat_j . shat_k = 2 c_n^2 (|<s_j|s_k>|^2 - 1/n)
    return (n / (n - 1.0)) * (q - 1.0 / n)


def gram_from_states(states: np.ndarray, n: int) -> np.ndarray:
    """Stokes Gram of a state stack straight from Jones overlaps."""
    ov = states.conj() @ states.T
    return _overlap_sq_to_gram((ov.conj() * ov).real, n)


# ---------------------------------------------------------------------------
# Yang-Nolan family
# ---------------------------------------------------------------------------

def yang_nolan(n: int) -> LaunchSet:
    """Basis states and pairwise equal-weight superpositions.

    (n-1) basis states |i>, then (|i>+|j>)/sqrt(2), then (|i>+i|j>)/sqrt(2)
    over all i < j, each block in lexicographic pair order.  For n = 2 this is
    the classical orthonormal Stokes triple.
    """
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    eye = np.eye(n, dtype=complex)
    rows = [eye[i] for i in range(n - 1)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rt = 1.0 / np.sqrt(2.0)
    for i, j in pairs:
        rows.append(rt * (eye[i] + eye[j]))
    for i, j in pairs:
        rows.append(rt * (eye[i] + 1j * eye[j]))
    return LaunchSet(n=n, states=np.array(rows), family="yang")


def yang_gram(n: int) -> np.ndarray:
    """Yang-Nolan Gram from the closed Kronecker-delta overlap table.

    Independent of the constructed states; used to cross-check gram().
    """
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    npr = len(pairs)
    nx = n - 1
    m = nx + 2 * npr
    q = np.zeros((m, m))

    def d(a, b):
        return 1.0 if a == b else 0.0

    for a in range(nx):
        for b in range(nx):
            q[a, b] = d(a, b)
    for a in range(nx):
        for p, (j, k) in enumerate(pairs):
            v_y = (d(a, j) + d(a, k)) ** 2 / 2.0
            v_z = (d(a, j) + d(a, k)) / 2.0
            q[a, nx + p] = q[nx + p, a] = v_y
            q[a, nx + npr + p] = q[nx + npr + p, a] = v_z
    for p1, (i, j) in enumerate(pairs):
        for p2, (k, l) in enumerate(pairs):
            q[nx + p1, nx + p2] = (d(i, k) + d(i, l) + d(j, k) + d(j, l)) ** 2 / 4.0
            q[nx + npr + p1, nx + npr + p2] = (
                (d(i, k) + d(j, l)) ** 2 + (d(i, l) - d(j, k)) ** 2) / 4.0
            q[nx + p1, nx + npr + p2] = (
                (d(i, k) + d(j, k)) ** 2 + (d(i, l) + d(j, l)) ** 2) / 4.0
            q[nx + npr + p2, nx + p1] = q[nx + p1, nx + npr + p2]
    return _overlap_sq_to_gram(q, n)


# ---------------------------------------------------------------------------
# Mutually unbiased bases
# ---------------------------------------------------------------------------

def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def mub_bases(n: int) -> list[np.ndarray]:
    """The n + 1 mutually unbiased orthonormal bases of a prime dimension.

    Computational basis first; for odd prime p the remaining bases have
    components p^{-1/2} exp(2 pi i (m j^2 + k j) / p) (basis m, vector k,
    component j).  The quadratic construction degenerates at p = 2, where the
    three Pauli eigenbases are used instead.
    """
    if not _is_prime(n):
        raise DimensionError(
            f"complete MUB construction implemented for prime n only, got n={n}")
    bases = [np.eye(n, dtype=complex)]
    if n == 2:
        rt = 1.0 / np.sqrt(2.0)
        bases.append(np.array([[rt, rt], [rt, -rt]], dtype=complex))
        bases.append(np.array([[rt, 1j * rt], [rt, -1j * rt]]))
        return bases
    j = np.arange(n)
    for m in range(n):
        # vector k in rows, component j in columns
        k = j[:, None]
        phase = (m * j[None, :] ** 2 + k * j[None, :]) % n
        bases.append(np.exp(2j * np.pi * phase / n) / np.sqrt(n))
    return bases


def mub_set(n: int) -> LaunchSet:
    """All n + 1 unbiased bases with the last vector of each dropped."""
    bases = mub_bases(n)
    rows = []
    for b in bases:
        rows.extend(b[:-1])
    return LaunchSet(n=n, states=np.array(rows), family="mub")


def mub_gram(n: int) -> np.ndarray:
    """Analytic MUB Gram: block diagonal, unit diagonal, -1/(n-1) in-block."""
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    blk = np.full((n - 1, n - 1), -1.0 / (n - 1)) + np.eye(n - 1) * n / (n - 1)
    g = np.zeros((n * n - 1, n * n - 1))
    for b in range(n + 1):
        sl = slice(b * (n - 1), (b + 1) * (n - 1))
        g[sl, sl] = blk
    return g


def mub_penalty(n: int) -> float:
    """Noise-amplification penalty 2 (n - 1) / n of the MUB family."""
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    return 2.0 * (n - 1.0) / n


def mub_log_volume(n: int) -> float:
    """log |det S| for the MUB family (natural log; underflow-safe)."""
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    return 0.5 * ((n - 2.0) * (n + 1.0) * math.log(n)
                  - (n * n - 1.0) * math.log(n - 1.0))


# ---------------------------------------------------------------------------
# Symmetric informationally complete sets
# ---------------------------------------------------------------------------

def sic_gram(n: int) -> np.ndarray:
    """Analytic SIC Gram: unit diagonal, -1/(n^2-1) everywhere else."""
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    m = n * n - 1
    off = -1.0 / m
    return np.full((m, m), off) + np.eye(m) * (1.0 - off)


def sic_penalty(n: int) -> float:
    """Noise-amplification penalty 2 (n^2 - 1) / n^2 of the SIC family."""
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    return 2.0 * (n * n - 1.0) / (n * n)


def sic_log_volume(n: int) -> float:
    """log |det S| for the SIC family (natural log; underflow-safe)."""
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    return (n * n - 2.0) * math.log(n) - 0.5 * (n * n - 1.0) * math.log(n * n - 1.0)


def _frame_cost(states: np.ndarray) -> float:
    ov = states.conj() @ states.T
    p = (ov.conj() * ov).real
    np.fill_diagonal(p, 0.0)
    return float(np.sum(p * p))


def _frame_grad(states: np.ndarray) -> tuple[float, np.ndarray]:
    ov = states.conj() @ states.T
    p = (ov.conj() * ov).real
    np.fill_diagonal(p, 0.0)
    cost = float(np.sum(p * p))
    w = p * ov.conj()
    grad = 8.0 * (w @ states)
    return cost, spheres.tangent_project(states, grad)


def _equiangularity_residual(states: np.ndarray, n: int) -> float:
    ov = states.conj() @ states.T
    p = (ov.conj() * ov).real
    np.fill_diagonal(p, 1.0 / (n + 1.0))
    return float(np.max(np.abs(p - 1.0 / (n + 1.0))))


def sic_search(n: int, seed: int = 0, tol: float = 1e-8,
               max_iters: int = 200_000, starts: int = 8) -> LaunchSet:
    """Numerically construct a SIC set.

    Per start: frame-potential projected gradient descent over n^2 unit
    states finds the basin; an alternating-projection contraction (magnitude
    projection of the Jones Gram alternated with its rank-n factorization)
    tightens it; a trust-region Gauss-Newton pass on the equiangularity
    residuals max | |<psi_i|psi_j>|^2 - 1/(n+1) | finishes to machine level.
    The pure-gradient tail alone converges sublinearly when the solution set
    is a continuum (n = 3), hence the endgame phases.  The last state of the
    converged frame is dropped.

    Raises
    ------
    SearchFailedError
        When no start reaches tol; carries the best residual seen.
    """
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    if tol <= 0 or max_iters < 1 or starts < 1:
        raise ConfigError("tol must be positive, budgets at least 1")
    best = None
    for start in range(starts):
        rng = rng_for(seed, start)
        states = random_states(rng, n * n, n)
        res = spheres.projected_descent(
            _frame_cost, _frame_grad, states,
            grad_tol=1e-8, max_iters=min(max_iters, 2000),
            stop_fn=lambda st: _equiangularity_residual(st, n) < tol,
            log_stride=100)
        states = res.states
        residual = _equiangularity_residual(states, n)
        if residual >= tol:
            states, residual = _sic_alternating_projection(
                states, n, tol, min(max_iters, 300))
        if residual >= tol:
            states, residual = _sic_gauss_newton(states, n)
        if best is None or residual < best[1]:
            best = (states, residual, start)
        if residual < tol:
            break
    states, residual, start = best
    if residual >= tol:
        raise SearchFailedError(
            f"SIC search for n={n} did not reach tol={tol:.1e} in "
            f"{starts} starts (best residual {residual:.3e})",
            residual=residual)
    meta = {"seed": seed, "start": start, "tol": tol, "residual": residual}
    return LaunchSet(n=n, states=canonicalize_phases(states[:-1]),
                     family="sic", meta=meta)


def _sic_alternating_projection(states, n, tol, budget):
    """Alternate the off-diagonal magnitude projection of the Jones Gram
    with its nearest rank-n PSD factorization."""
    target = 1.0 / np.sqrt(n + 1.0)
    res = _equiangularity_residual(states, n)
    for _ in range(budget):
        if res < tol:
            break
        ov = states.conj() @ states.T
        mag = np.abs(ov)
        ph = np.where(mag > 1e-14, ov / np.where(mag == 0.0, 1.0, mag), 1.0)
        goal = target * ph
        np.fill_diagonal(goal, 1.0)
        lam, vec = np.linalg.eigh(goal)
        fac = (vec[:, -n:] * np.sqrt(np.maximum(lam[-n:], 0.0))[None, :]).conj()
        states = spheres.normalize_rows(fac)
        res = _equiangularity_residual(states, n)
    return states, res


def _sic_gauss_newton(states, n):
    """Trust-region least squares on the pairwise equiangularity residuals;
    unit norms are kept implicit by normalizing inside the residual map."""
    count = n * n
    iu = np.triu_indices(count, 1)

    def unpack(x):
        half = x.size // 2
        st = x[:half].reshape(count, n) + 1j * x[half:].reshape(count, n)
        return spheres.normalize_rows(st)

    def residuals(x):
        st = unpack(x)
        ov = st.conj() @ st.T
        p = (ov.conj() * ov).real
        return p[iu] - 1.0 / (n + 1.0)

    x0 = np.concatenate([states.real.ravel(), states.imag.ravel()])
    sol = least_squares(residuals, x0, method="trf", xtol=3e-16, ftol=3e-16,
                        gtol=3e-16, max_nfev=20_000)
    out = unpack(sol.x)
    return out, _equiangularity_residual(out, n)


# ---------------------------------------------------------------------------
# Random sets, simplex, utilities
# ---------------------------------------------------------------------------

def random_states(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """Uniform (Haar-marginal) unit states: normalized complex Gaussians."""
    raw = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    return raw / np.linalg.norm(raw, axis=1)[:, None]


def random_set(n: int, seed: int = 0) -> LaunchSet:
    """Uniform random launch set, redrawn until S is numerically nonsingular."""
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    rng = rng_for(seed)
    for attempt in range(64):
        states = random_states(rng, n * n - 1, n)
        sv = np.linalg.svd(jones_to_stokes_batch(states), compute_uv=False)
        if sv[-1] > 1e-12 * sv[0]:
            return LaunchSet(n=n, states=states, family="random",
                             meta={"seed": seed, "attempt": attempt})
    raise SearchFailedError(f"could not draw a nonsingular random set for n={n}")


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via phase-fixed QR of a complex Gaussian."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))[None, :]


def simplex_set(n: int, seed: int = 0) -> SimplexSet:
    """Random orthonormal basis; its Stokes images sum to zero, which makes
    the mean measured delay over the basis the common-mode delay exactly."""
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    u = haar_unitary(n, rng_for(seed))
    return SimplexSet(n=n, states=u.T.copy())


def canonicalize_phases(states: np.ndarray) -> np.ndarray:
    """Rotate each state so its largest-magnitude component is real >= 0.

    Exactly idempotent: already-canonical rows pass through bit for bit, so
    a save/load/save cycle reproduces the file byte for byte.
    """
    states = np.array(states, dtype=complex)
    for row in states:
        idx = int(np.argmax(np.abs(row)))
        a = row[idx]
        if (a.imag == 0.0 and a.real >= 0.0) or abs(a) == 0.0:
            continue
        row *= a.conjugate() / abs(a)
        row[idx] = abs(a)
    return states


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _states_to_json(states: np.ndarray) -> list:
    return [[[float(c.real), float(c.imag)] for c in row] for row in states]


def _states_from_json(vectors, n: int, path: str) -> np.ndarray:
    try:
        arr = np.asarray(vectors, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: field 'vectors' is not numeric") from exc
    if arr.ndim != 3 or arr.shape[1] != n or arr.shape[2] != 2:
        raise ConfigError(
            f"{path}: field 'vectors' must be (count, {n}, 2) re/im triplets, "
            f"got {arr.shape}")
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def save_set(s: LaunchSet, path) -> None:
    """Write the shared JSON schema; states phase-canonicalized first."""
    doc = {
        "n": int(s.n),
        "family": s.family,
        "meta": s.meta,
        "vectors": _states_to_json(canonicalize_phases(s.states)),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_set(path) -> LaunchSet:
    """Read a launch set, validating schema, count and norms."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("n", "family", "vectors"):
        if key not in doc:
            raise ConfigError(f"{path}: missing field '{key}'")
    n = doc["n"]
    if not isinstance(n, int) or n < 2:
        raise ConfigError(f"{path}: field 'n' must be an integer >= 2")
    states = _states_from_json(doc["vectors"], n, str(path))
    if states.shape[0] != n * n - 1:
        raise ConfigError(
            f"{path}: field 'vectors' has {states.shape[0]} states, "
            f"expected {n * n - 1}")
    norms = np.linalg.norm(states, axis=1)
    dev = np.max(np.abs(norms - 1.0))
    if dev > 1e-8:
        raise ConfigError(f"{path}: field 'vectors' contains non-unit states")
    if dev > 1e-12:
        # tolerate mildly rounded inputs, but keep exact files bit-exact
        states = states / norms[:, None]
    return LaunchSet(n=n, states=states, family=str(doc["family"]),
                     meta=dict(doc.get("meta", {})))


def bundled_optimal_set(n: int = 4) -> LaunchSet:
    """The packaged reference optimal set (currently n = 4 only)."""
    if n != 4:
        raise ConfigError(f"no bundled optimal set for n={n}")
    ref = resources.files("stokesopt").joinpath("data/optimal_n4.json")
    with resources.as_file(ref) as path:
        return load_set(path)
