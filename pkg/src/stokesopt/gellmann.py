"""Generalized Gell-Mann algebra and Jones/Stokes conversions.

An N-mode field state ("Jones state") is a unit vector in C^N.  Its image in
generalized Stokes space is the real (N^2-1)-vector

    shat_i = c_n(N) <s| L_i |s>,        c_n(N) = sqrt(N / (2 (N-1))),

where {L_i} are the N^2-1 generalized Gell-Mann matrices: Hermitian, traceless
and orthogonal under Tr(L_i L_j) = 2 delta_ij.  With that scaling every pure
state lands on the unit hypersphere.  The basis ordering is frozen (it is part
of the serialization contract):

    1. symmetric off-diagonal   E_jk + E_kj          for j < k,
    2. antisymmetric            -i (E_jk - E_kj)     for j < k,
    3. diagonal ladder          sqrt(2/(l(l+1))) diag(1,...,1, -l, 0,...)
                                with l ones, for l = 1 .. N-1,

each family enumerated in lexicographic (j, k) order.  For N = 2 this is
exactly (sigma_1, sigma_2, sigma_3), so the classical Stokes triple appears in
the familiar order.

The module also provides the hyperspherical chart used by the unconstrained
optimizer: amplitudes from a chain of polar angles, phases on every component
after the first, 2N-2 real parameters per state.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionError

__all__ = [
    "norm_coeff",
    "GellMannBasis",
    "gell_mann_basis",
    "jones_to_stokes",
    "jones_to_stokes_batch",
    "stokes_dot_from_jones",
    "projection_operator",
    "HermitianExpansion",
    "expand_matrix",
    "assemble",
    "HypersphericalPoint",
    "hyperspherical_to_jones",
    "d_jones_d_angle",
    "jones_to_hyperspherical",
    "angles_to_states",
    "angles_to_states_jacobian",
]


def norm_coeff(n: int) -> float:
    """Stokes normalization coefficient c_n = sqrt(n / (2 (n - 1)))."""
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    return np.sqrt(n / (2.0 * (n - 1)))


@dataclass(frozen=True)
class GellMannBasis:
    """The n^2-1 generalized Gell-Mann matrices in the frozen ordering.

    Attributes
    ----------
    n : int
        Mode count (n >= 2).
    matrices : ndarray, shape (n^2-1, n, n), complex
        Stacked basis matrices, read-only.
    """

    n: int
    matrices: np.ndarray

    @property
    def dim(self) -> int:
        """Stokes-space dimension n^2 - 1."""
        return self.n * self.n - 1


@lru_cache(maxsize=32)
def _basis_cached(n: int) -> GellMannBasis:
    m = n * n - 1
    stack = np.zeros((m, n, n), dtype=complex)
    idx = 0
    pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
    for j, k in pairs:
        stack[idx, j, k] = 1.0
        stack[idx, k, j] = 1.0
        idx += 1
    for j, k in pairs:
        stack[idx, j, k] = -1.0j
        stack[idx, k, j] = 1.0j
        idx += 1
    for l in range(1, n):
        d = np.zeros(n)
        d[:l] = 1.0
        d[l] = -l
        stack[idx, np.arange(n), np.arange(n)] = d * np.sqrt(2.0 / (l * (l + 1)))
        idx += 1
    stack.setflags(write=False)
    return GellMannBasis(n=n, matrices=stack)


def gell_mann_basis(n: int) -> GellMannBasis:
    """Return the cached basis for n modes.

    Raises
    ------
    DimensionError
        If n < 2.
    """
    if n < 2:
        raise DimensionError(f"need at least 2 modes, got n={n}")
    return _basis_cached(int(n))


def _as_state(s, n: int | None = None) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    if s.ndim != 1:
        raise DimensionError(f"expected a 1-d state vector, got shape {s.shape}")
    if n is not None and s.shape[0] != n:
        raise DimensionError(f"state has {s.shape[0]} modes, basis has {n}")
    if s.shape[0] < 2:
        raise DimensionError("state needs at least 2 modes")
    return s


def jones_to_stokes(s, basis: GellMannBasis | None = None) -> np.ndarray:
    """Map a Jones state to its generalized Stokes vector.

    Parameters
    ----------
    s : array_like, shape (n,), complex
        Jones state.  Unit norm gives a unit Stokes vector; the map itself is
        defined for any vector (it scales quadratically with the norm).
    basis : GellMannBasis, optional
        Reused basis; constructed (and cached) from len(s) when omitted.

    Returns
    -------
    ndarray, shape (n^2-1,), real
    """
    s = _as_state(s, None if basis is None else basis.n)
    b = basis if basis is not None else gell_mann_basis(s.shape[0])
    return jones_to_stokes_batch(s[None, :], b)[0]


def jones_to_stokes_batch(states, basis: GellMannBasis | None = None) -> np.ndarray:
    """Vectorized jones_to_stokes for an (m, n) stack of states -> (m, n^2-1)."""
    st = np.asarray(states, dtype=complex)
    if st.ndim != 2:
        raise DimensionError(f"expected (m, n) state stack, got shape {st.shape}")
    n = st.shape[1]
    b = basis if basis is not None else gell_mann_basis(n)
    if b.n != n:
        raise DimensionError(f"states have {n} modes, basis has {b.n}")
    # <s|L_i|s> = sum_ab s*_a (L_i)_ab s_b; one GEMM for the whole stack
    outer = st.conj()[:, :, None] * st[:, None, :]
    flat = b.matrices.reshape(b.dim, n * n)
    vals = outer.reshape(-1, n * n) @ flat.T
    return norm_coeff(n) * vals.real


def stokes_dot_from_jones(a, b) -> float:
    """Inner product of two Stokes images straight from the Jones overlap.

    For unit states, shat_a . shat_b = 2 c_n^2 (|<a|b>|^2 - 1/n).  Orthogonal
    Jones states therefore sit at -1/(n-1), not at -1: antipodal points exist
    in Stokes space only for n = 2.
    """
    a = _as_state(a)
    b = _as_state(b, a.shape[0])
    n = a.shape[0]
    c2 = n / (2.0 * (n - 1))
    ov = np.vdot(a, b)
    return 2.0 * c2 * ((ov.conj() * ov).real - 1.0 / n)


def projection_operator(s, basis: GellMannBasis | None = None) -> np.ndarray:
    """Rank-one projector |s><s| rebuilt from the state's Stokes image.

    Evaluates (1/n) I + (1/(2 c_n)) shat . L, which equals the outer product
    for any unit state.  Useful as a consistency check of the expansion
    conventions rather than as a fast path.
    """
    s = _as_state(s, None if basis is None else basis.n)
    n = s.shape[0]
    b = basis if basis is not None else gell_mann_basis(n)
    shat = jones_to_stokes(s, b)
    acc = np.tensordot(shat, b.matrices, axes=(0, 0))
    return np.eye(n) / n + acc / (2.0 * norm_coeff(n))


@dataclass(frozen=True)
class HermitianExpansion:
    """Coefficients of M = scalar * I + (1/(2 c_n)) vector . L.

    Both parts are complex so arbitrary (not just Hermitian) matrices expand
    exactly; Hermitian input yields real coefficients up to roundoff.
    """

    n: int
    scalar: complex
    vector: np.ndarray

    def is_hermitian_like(self, tol: float = 1e-12) -> bool:
        """True when the coefficients are real to within tol."""
        return (abs(self.scalar.imag) <= tol
                and float(np.max(np.abs(self.vector.imag), initial=0.0)) <= tol)


def expand_matrix(m, basis: GellMannBasis | None = None) -> HermitianExpansion:
    """Expand an (n, n) matrix over {I, L_i} with the delay-operator scaling.

    The vector part carries the same normalization as the group-delay
    operator, i.e. M = scalar * I + (1/(2 c_n)) sum_i vector_i L_i, so that a
    mode-dispersion vector can be read off directly.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n < 2:
        raise DimensionError("need at least 2 modes")
    b = basis if basis is not None else gell_mann_basis(n)
    if b.n != n:
        raise DimensionError(f"matrix has {n} modes, basis has {b.n}")
    scalar = np.trace(m) / n
    # Tr(M L_i) = vector_i / c_n under the normalization above
    traces = np.einsum("iab,ba->i", b.matrices, m)
    return HermitianExpansion(n=n, scalar=complex(scalar),
                              vector=norm_coeff(n) * traces)


def assemble(e: HermitianExpansion, basis: GellMannBasis | None = None) -> np.ndarray:
    """Inverse of expand_matrix."""
    b = basis if basis is not None else gell_mann_basis(e.n)
    if b.n != e.n:
        raise DimensionError(f"expansion has {e.n} modes, basis has {b.n}")
    vec = np.asarray(e.vector, dtype=complex)
    if vec.shape != (b.dim,):
        raise DimensionError(f"vector part has shape {vec.shape}, expected ({b.dim},)")
    acc = np.tensordot(vec, b.matrices, axes=(0, 0))
    return e.scalar * np.eye(e.n) + acc / (2.0 * norm_coeff(e.n))


# ---------------------------------------------------------------------------
# Hyperspherical chart
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypersphericalPoint:
    """Angles of one state: n-1 polar angles and n-1 phases.

    The chart is

        s_0     = cos(phi_0)
        s_v     = sin(phi_0) ... sin(phi_{v-1}) cos(phi_v) e^{i theta_{v-1}}
        s_{n-1} = sin(phi_0) ... sin(phi_{n-2})            e^{i theta_{n-2}}

    (0-based arrays; v runs over 1 .. n-2 in the middle line).  It covers the
    unit states whose first component is real, which is a per-state global
    phase gauge and costs nothing for phase-invariant costs.
    """

    phis: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        phis = np.atleast_1d(np.asarray(self.phis, dtype=float))
        thetas = np.atleast_1d(np.asarray(self.thetas, dtype=float))
        if phis.shape != thetas.shape or phis.ndim != 1 or phis.size < 1:
            raise DimensionError(
                f"need matching 1-d angle arrays, got {phis.shape} and {thetas.shape}")
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "thetas", thetas)

    @property
    def n(self) -> int:
        return self.phis.size + 1


def hyperspherical_to_jones(p: HypersphericalPoint) -> np.ndarray:
    """Evaluate the chart at one angle tuple; always unit norm."""
    return angles_to_states(p.phis[None, :], p.thetas[None, :])[0]


def d_jones_d_angle(p: HypersphericalPoint, kind: str, index: int) -> np.ndarray:
    """Analytic partial of the chart w.r.t. one angle.

    Parameters
    ----------
    kind : {"phi", "theta"}
    index : int
        0-based angle index in 0 .. n-2.

    Notes
    -----
    Pole-safe: derivatives are assembled as fresh products, never by dividing
    out a sine, so chart poles (sin phi = 0) give exact zero components where
    the angle has become redundant.
    """
    n = p.n
    if index < 0 or index >= n - 1:
        raise DimensionError(f"angle index {index} out of range for n={n}")
    jac = angles_to_states_jacobian(p.phis[None, :], p.thetas[None, :])[0]
    if kind == "phi":
        return jac[index].copy()
    if kind == "theta":
        return jac[n - 1 + index].copy()
    raise DimensionError(f"unknown angle kind {kind!r}")


def jones_to_hyperspherical(s) -> HypersphericalPoint:
    """Invert the chart after gauging the first component real non-negative.

    Any unit state is reachable: the state is first multiplied by a global
    phase so s_0 >= 0 (a no-op when s_0 = 0), then polar angles are peeled
    off the magnitude chain and phases come from the argument of each
    remaining component.
    """
    s = _as_state(s)
    n = s.shape[0]
    nrm = np.linalg.norm(s)
    if not np.isclose(nrm, 1.0, atol=1e-8):
        raise DimensionError(f"expected a unit state, got norm {nrm:.3e}")
    s = s / nrm
    if abs(s[0]) > 0:
        s = s * (s[0].conjugate() / abs(s[0]))
    phis = np.zeros(n - 1)
    thetas = np.zeros(n - 1)
    # tail[v] = ||s[v:]||, descending cumulative magnitudes
    mags = np.abs(s)
    tail = np.sqrt(np.cumsum(mags[::-1] ** 2)[::-1])
    for v in range(n - 1):
        head = s[0].real if v == 0 else mags[v]
        phis[v] = np.arctan2(tail[v + 1], head)
    thetas[:] = np.angle(s[1:])
    return HypersphericalPoint(phis=phis, thetas=thetas)


def angles_to_states(phis, thetas) -> np.ndarray:
    """Batch chart evaluation: (m, n-1) angle arrays -> (m, n) unit states."""
    phis = np.asarray(phis, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    if phis.ndim != 2 or phis.shape != thetas.shape:
        raise DimensionError(
            f"need matching (m, n-1) angle arrays, got {phis.shape} and {thetas.shape}")
    m, nm1 = phis.shape
    n = nm1 + 1
    sin = np.sin(phis)
    cos = np.cos(phis)
    # prefix[:, v] = prod_{u<v} sin(phi_u), prefix[:, 0] = 1
    prefix = np.ones((m, n))
    np.cumprod(sin, axis=1, out=prefix[:, 1:])
    amps = np.empty((m, n))
    amps[:, : n - 1] = prefix[:, : n - 1] * cos
    amps[:, n - 1] = prefix[:, n - 1]
    states = amps.astype(complex)
    states[:, 1:] *= np.exp(1j * thetas)
    return states


def angles_to_states_jacobian(phis, thetas) -> np.ndarray:
    """Batch analytic Jacobian of the chart.

    Returns
    -------
    ndarray, shape (m, 2(n-1), n), complex
        jac[q, a, :]    = d s_q / d phi_a      for a in 0 .. n-2
        jac[q, n-1+a, :] = d s_q / d theta_a.
    """
    states = angles_to_states(phis, thetas)
    phis = np.asarray(phis, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    m, nm1 = phis.shape
    n = nm1 + 1
    sin = np.sin(phis)
    cos = np.cos(phis)
    prefix = np.ones((m, n))
    np.cumprod(sin, axis=1, out=prefix[:, 1:])
    phase = np.ones((m, n), dtype=complex)
    phase[:, 1:] = np.exp(1j * thetas)

    jac = np.zeros((m, 2 * nm1, n), dtype=complex)
    # gap[:, a, v] = prod_{a < u < v} sin(phi_u), built by marching v upward
    gap = np.zeros((m, nm1, n))
    for a in range(nm1):
        gap[:, a, a + 1] = 1.0
        for v in range(a + 2, n):
            gap[:, a, v] = gap[:, a, v - 1] * sin[:, v - 1]
    for a in range(nm1):
        # d amps_v / d phi_a for v > a: swap sin(phi_a) for cos(phi_a)
        for v in range(a + 1, n):
            d = prefix[:, a] * cos[:, a] * gap[:, a, v]
            if v < n - 1:
                d = d * cos[:, v]
            jac[:, a, v] = d * phase[:, v]
        # v == a term (only the cos factor differentiates)
        jac[:, a, a] = -prefix[:, a] * sin[:, a] * phase[:, a]
    for a in range(nm1):
        jac[:, nm1 + a, a + 1] = 1j * states[:, a + 1]
    return jac
