"""Virtual testbed for delay-based modal-dispersion measurement.

The fiber is a lumped transfer matrix H(w0 + dw) = U(dw) P(dw): a unitary
part U whose frequency dependence is generated by the Hermitian delay
operator tau0*I + md_vector . L / (2 c_n), and an optional Hermitian
positive-definite loss part P built from per-mode attenuation rates.  On top
of that sit the measurement channels: group delay read from the first moment
of a detected Gaussian pulse (or its analytic narrowband limit) with thermal
receiver noise, and per-launch attenuation read from the output power.  The
reconstruction routines invert a launch set's Stokes coefficient matrix to
recover the delay vector and the loss parameters, mirroring how the physical
experiment would process the same records.

Units are SI throughout: seconds, Hz, rad/s for the frequency detuning,
watts, amperes, joules, metres.  Mixing propagation quantities (delays)
with receiver quantities (noise PSD, responsivity, pulse energy) is exactly
where silent scale errors creep in, so every dataclass field states its unit.

Only the narrowband regime is modelled: the delay vector is constant across
the pulse band, and loss is frequency-flat unless an explicit per-mode slope
is supplied.  Nonlinearity and distributed mode coupling are out of scope.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import polar, schur

from .errors import (
    ConfigError,
    DimensionError,
    EstimationFailedError,
    SingularSetError,
)
from .gellmann import (
    HermitianExpansion,
    assemble,
    expand_matrix,
    jones_to_stokes,
    norm_coeff,
)
from .metrics import variance_prediction
from .seeding import rng_for
from .sets import LaunchSet, SimplexSet, haar_unitary

__all__ = [
    "FiberModel",
    "ReceiverModel",
    "MeasurementRecord",
    "MdlEstimate",
    "ComplexGdOperator",
    "synth_md_fiber",
    "synth_mdl_fiber",
    "delay_operator",
    "propagate_unitary",
    "numeric_gd_expansion",
    "group_delay",
    "measure_delay",
    "estimate_tau0",
    "reconstruct_md",
    "scaled_delay_variance",
    "monte_carlo_md",
    "measure_attenuation",
    "mdl_parameters",
    "predicted_attenuation",
    "reconstruct_mdl",
    "loss_matrix_from_estimate",
    "equalize",
    "compose_gd_operator",
    "full_gd_operator",
    "crosstalk_bound",
]

DELAY_MODES = ("analytic", "waveform")


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass
class FiberModel:
    """Lumped n-mode fiber: unitary delay part plus optional mode loss.

    Fields
    ------
    n : mode count.
    tau0 : common-mode group delay (s).
    md_vector : real (n^2-1,) delay vector (s) in the Stokes expansion of
        the group-delay operator.
    base_unitary : U at the carrier, complex (n, n), unitary to 1e-12.
    pa_coeffs : per-mode attenuation rates a_k (1/m), or None for a lossless
        fiber.  Given together with pa_modes.
    pa_modes : rows are the n orthonormal principal attenuation states.
    pa_slope : optional d a_k / d omega (s/m); loss is frequency-flat when
        omitted.
    z : fiber length (m); only the products a_k * z enter the model.
    """

    n: int
    tau0: float
    md_vector: np.ndarray
    base_unitary: np.ndarray
    pa_coeffs: np.ndarray | None = None
    pa_modes: np.ndarray | None = None
    pa_slope: np.ndarray | None = None
    z: float = 1.0

    def __post_init__(self):
        n = self.n
        if n < 2:
            raise DimensionError("need at least 2 modes")
        md = np.asarray(self.md_vector, dtype=float)
        if md.shape != (n * n - 1,):
            raise DimensionError(
                f"md_vector for n={n} needs shape ({n * n - 1},), got {md.shape}")
        if not np.all(np.isfinite(md)):
            raise ConfigError("md_vector must be finite")
        u = np.asarray(self.base_unitary, dtype=complex)
        if u.shape != (n, n):
            raise DimensionError(f"base_unitary must be ({n}, {n}), got {u.shape}")
        if np.max(np.abs(u.conj().T @ u - np.eye(n))) > 1e-12:
            raise DimensionError("base_unitary must be unitary to 1e-12")
        if (self.pa_coeffs is None) != (self.pa_modes is None):
            raise ConfigError("pa_coeffs and pa_modes must be given together")
        if self.pa_coeffs is not None:
            a = np.asarray(self.pa_coeffs, dtype=float)
            v = np.asarray(self.pa_modes, dtype=complex)
            if a.shape != (n,):
                raise DimensionError(f"pa_coeffs must have shape ({n},)")
            if not np.all(np.isfinite(a)):
                raise ConfigError("pa_coeffs must be finite")
            if v.shape != (n, n):
                raise DimensionError(f"pa_modes must be ({n}, {n})")
            if np.max(np.abs(v.conj() @ v.T - np.eye(n))) > 1e-10:
                raise DimensionError("pa_modes rows must be orthonormal")
            if not (np.isfinite(self.z) and self.z >= 0.0):
                raise ConfigError("fiber length must be finite and non-negative")
            self.pa_coeffs = a
            self.pa_modes = v
        if self.pa_slope is not None:
            if self.pa_coeffs is None:
                raise ConfigError("pa_slope needs pa_coeffs")
            sl = np.asarray(self.pa_slope, dtype=float)
            if sl.shape != (n,):
                raise DimensionError(f"pa_slope must have shape ({n},)")
            self.pa_slope = sl
        self.md_vector = md
        self.base_unitary = u

    @property
    def m(self) -> int:
        return self.n * self.n - 1

    def loss_matrix(self, domega: float = 0.0, squared: bool = False) -> np.ndarray:
        """P (or P^2) at detuning domega; identity for a lossless fiber."""
        if self.pa_coeffs is None:
            return np.eye(self.n, dtype=complex)
        rates = self.pa_coeffs
        if self.pa_slope is not None:
            rates = rates + self.pa_slope * domega
        scale = np.exp(-rates * self.z * (1.0 if squared else 0.5))
        v = self.pa_modes
        return (v.T * scale) @ v.conj()

    def transfer_matrix(self, domega: float = 0.0) -> np.ndarray:
        """H = U(domega) P(domega)."""
        return propagate_unitary(self, domega) @ self.loss_matrix(domega)


@dataclass(frozen=True)
class ReceiverModel:
    """Direct-detection receiver for pulse-delay readout.

    Fields
    ------
    responsivity : photodiode responsivity (A/W).
    noise_psd : two-sided PSD of the additive current noise (A^2/Hz); the
        autocorrelation is noise_psd * delta(t - t').  Zero gives a
        noiseless receiver.
    window : integration window T (s), centred on the pulse.
    pulse_width : Gaussian 1/e power half-width (s).
    sample_rate : ADC rate (Hz).
    energy : detected pulse energy (J), used to scale the noise formulas.
    quadrature : first-moment integration rule; only "simpson38".

    The window must cover the pulse (window > 4 * pulse_width) and hold
    3k + 1 samples so the composite Simpson 3/8 rule applies exactly.
    """

    responsivity: float
    noise_psd: float
    window: float
    pulse_width: float
    sample_rate: float
    energy: float
    quadrature: str = "simpson38"

    def __post_init__(self):
        for name in ("responsivity", "window", "pulse_width", "sample_rate",
                     "energy"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive, got {value}")
        if not (np.isfinite(self.noise_psd) and self.noise_psd >= 0):
            raise ConfigError("noise_psd must be non-negative")
        if self.quadrature != "simpson38":
            raise ConfigError(
                f"unsupported quadrature rule {self.quadrature!r}")
        if self.window <= 4.0 * self.pulse_width:
            raise ConfigError(
                "integration window must exceed 4x the pulse half-width")
        exact = self.window * self.sample_rate
        count = round(exact)
        if abs(exact - count) > 1e-9 * max(count, 1):
            raise ConfigError(
                f"window * sample_rate = {exact} is not a whole sample count")
        if count < 4 or count % 3 != 1:
            raise ConfigError(
                f"Simpson 3/8 needs 3k+1 samples, got {count}")

    @property
    def sample_count(self) -> int:
        return round(self.window * self.sample_rate)

    @property
    def delay_variance(self) -> float:
        """Variance of one analytic delay measurement (s^2).

        With a full noise PSD of N0 = 2 * noise_psd this is the standard
        first-moment result N0 T^3 / (24 R^2 E^2).
        """
        n0 = 2.0 * self.noise_psd
        return n0 * self.window ** 3 / (
            24.0 * self.responsivity ** 2 * self.energy ** 2)

    @property
    def sample_noise_variance(self) -> float:
        """Per-sample current variance N0 * f_s / 2 in waveform mode (A^2)."""
        return self.noise_psd * self.sample_rate

    def time_grid(self) -> np.ndarray:
        """Sample times, symmetric about zero."""
        count = self.sample_count
        idx = np.arange(count, dtype=float)
        return (idx - 0.5 * (count - 1)) / self.sample_rate

    def quadrature_weights(self) -> np.ndarray:
        """Composite Simpson 3/8 weights including the step factor (s)."""
        count = self.sample_count
        w = np.full(count, 3.0)
        w[0] = w[-1] = 1.0
        w[3:-1:3] = 2.0
        return w * (3.0 / (8.0 * self.sample_rate))


@dataclass(frozen=True)
class MeasurementRecord:
    """One readout: a delay (s) or an attenuation (dimensionless)."""

    launch_index: int
    value: float
    kind: str
    mode: str
    seed: object = None

    def __post_init__(self):
        if self.kind not in ("delay", "attenuation"):
            raise ConfigError(f"unknown record kind {self.kind!r}")
        if self.mode not in DELAY_MODES:
            raise ConfigError(f"unknown record mode {self.mode!r}")
        if not math.isfinite(self.value):
            raise ConfigError("measurement value must be finite")


@dataclass
class MdlEstimate:
    """Loss parameters recovered from attenuation records.

    alpha0 is the mean attenuation, gamma the loss vector in the Stokes
    expansion P^2 = alpha0 (I + gamma . L / (2 c_n)), and mdl_ratio the
    largest-to-smallest eigenvalue ratio of the reconstructed P^2.
    """

    n: int
    alpha0: float
    gamma: np.ndarray
    mdl_ratio: float

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (self.n * self.n - 1,):
            raise DimensionError(
                f"gamma for n={self.n} needs shape ({self.n * self.n - 1},)")
        if not (math.isfinite(self.alpha0) and self.alpha0 > 0):
            raise EstimationFailedError(
                f"mean attenuation must be positive, got {self.alpha0}")
        if not (math.isfinite(self.mdl_ratio) and self.mdl_ratio >= 1.0):
            raise EstimationFailedError(
                f"loss eigenvalue ratio must be >= 1, got {self.mdl_ratio}")
        self.gamma = g


@dataclass
class ComplexGdOperator:
    """Eigendata of the group-delay operator of a lossy fiber.

    chi0 and chi_vector are the (complex) scalar and Stokes parts of
    i H^-1 dH/domega; dmgds are the real parts of its eigenvalues in
    ascending order and pms the matching (generally non-orthogonal) unit
    eigenvectors, stored as rows.  `defective` marks eigenproblems solved
    through a Schur fallback, whose pms are then only an orthonormal
    triangularizing basis.
    """

    n: int
    chi0: complex
    chi_vector: np.ndarray
    dmgds: np.ndarray
    pms: np.ndarray
    defective: bool = False

    def __post_init__(self):
        vec = np.asarray(self.chi_vector, dtype=complex)
        if vec.shape != (self.n * self.n - 1,):
            raise DimensionError(
                f"chi_vector for n={self.n} needs shape ({self.n * self.n - 1},)")
        d = np.asarray(self.dmgds, dtype=float)
        p = np.asarray(self.pms, dtype=complex)
        if d.shape != (self.n,):
            raise DimensionError(f"dmgds must have shape ({self.n},)")
        if p.shape != (self.n, self.n):
            raise DimensionError(f"pms must be ({self.n}, {self.n})")
        self.chi_vector = vec
        self.dmgds = d
        self.pms = p


# ---------------------------------------------------------------------------
# Synthesis and propagation
# ---------------------------------------------------------------------------

def synth_md_fiber(n: int, tau0: float, md_vector, seed: int = 0) -> FiberModel:
    """Lossless fiber with the given delay data and a Haar-random U."""
    u = haar_unitary(n, rng_for(seed, 0))
    return FiberModel(n=n, tau0=float(tau0), md_vector=md_vector,
                      base_unitary=u)


def synth_mdl_fiber(n: int, pa_coeffs, z: float, seed: int = 0,
                    tau0: float = 0.0, md_vector=None,
                    pa_slope=None) -> FiberModel:
    """Lossy fiber: Haar-random U and random orthonormal loss states.

    The same seed reproduces the same U as synth_md_fiber; the loss states
    come from an independent substream.
    """
    a = np.asarray(pa_coeffs, dtype=float)
    if a.shape != (n,):
        raise DimensionError(f"pa_coeffs must have shape ({n},)")
    if np.any(a < 0):
        raise ConfigError("attenuation rates must be non-negative")
    if not (np.isfinite(z) and z >= 0):
        raise ConfigError("fiber length must be non-negative")
    if md_vector is None:
        md_vector = np.zeros(n * n - 1)
    u = haar_unitary(n, rng_for(seed, 0))
    modes = haar_unitary(n, rng_for(seed, 1))
    return FiberModel(n=n, tau0=float(tau0), md_vector=md_vector,
                      base_unitary=u, pa_coeffs=a, pa_modes=modes,
                      pa_slope=pa_slope, z=float(z))


def delay_operator(f: FiberModel) -> np.ndarray:
    """Hermitian generator tau0*I + md_vector . L / (2 c_n)."""
    return assemble(HermitianExpansion(
        n=f.n, scalar=complex(f.tau0),
        vector=f.md_vector.astype(complex)))


def propagate_unitary(f: FiberModel, domega: float) -> np.ndarray:
    """U at detuning domega: U(0) exp(-i * delay_operator * domega)."""
    if domega == 0.0:
        return np.array(f.base_unitary)
    d, v = np.linalg.eigh(delay_operator(f))
    phases = np.exp(-1j * d * domega)
    return f.base_unitary @ ((v * phases) @ v.conj().T)


def numeric_gd_expansion(f: FiberModel, domega: float) -> HermitianExpansion:
    """Extract (tau0, md_vector) from U by a central difference in omega.

    Serves as the self-consistency check that propagation really is
    generated by delay_operator; agreement is O(domega^2 ||md||^3).
    """
    if not domega > 0:
        raise ConfigError("domega must be positive")
    up = propagate_unitary(f, domega)
    um = propagate_unitary(f, -domega)
    deriv = (up - um) / (2.0 * domega)
    return expand_matrix(1j * f.base_unitary.conj().T @ deriv)


# ---------------------------------------------------------------------------
# Delay measurement
# ---------------------------------------------------------------------------

def group_delay(f: FiberModel, state) -> float:
    """Narrowband pulse delay tau0 + md_vector . s_hat / (2 c_n^2)."""
    shat = jones_to_stokes(state)
    c = norm_coeff(f.n)
    return f.tau0 + float(f.md_vector @ shat) / (2.0 * c * c)


def _rng_from(seed) -> np.random.Generator:
    if isinstance(seed, (tuple, list)):
        return rng_for(*seed)
    return rng_for(seed)


def _dispersed_states(f: FiberModel, state: np.ndarray,
                      domegas: np.ndarray) -> np.ndarray:
    """exp(-i * delay_operator * domega) state for a batch of detunings.

    The leading U(0) is dropped: it is frequency-flat and unitary, so it
    cannot change the detected total intensity.
    """
    d, v = np.linalg.eigh(delay_operator(f))
    coeff = v.conj().T @ state
    phases = np.exp(-1j * np.outer(domegas, d))
    return (phases * coeff) @ v.T


def _waveform_delay(f: FiberModel, state: np.ndarray, rx: ReceiverModel,
                    rng: np.random.Generator | None) -> float:
    t = rx.time_grid()
    count = rx.sample_count
    peak = rx.energy / (rx.pulse_width * math.sqrt(math.pi))
    amp = math.sqrt(peak) * np.exp(-(t * t) / (2.0 * rx.pulse_width ** 2))
    spectrum = np.fft.fft(amp)
    domegas = 2.0 * np.pi * np.fft.fftfreq(count, d=1.0 / rx.sample_rate)
    modes = _dispersed_states(f, state, domegas)
    fields = np.fft.ifft(spectrum[:, None] * modes, axis=0)
    intensity = np.einsum("km,km->k", fields, fields.conj()).real
    signal = rx.responsivity * intensity
    weights = rx.quadrature_weights()
    # First moment normalized by the noiseless windowed energy, so receiver
    # noise enters the estimate linearly and the analytic variance applies.
    denom = float(weights @ signal)
    if rng is not None:
        sigma = math.sqrt(rx.sample_noise_variance)
        signal = signal + rng.normal(0.0, sigma, count)
    numer = float(weights @ (t * signal))
    return numer / denom


def measure_delay(f: FiberModel, state, rx: ReceiverModel,
                  mode: str = "analytic", seed=None,
                  launch_index: int = -1) -> MeasurementRecord:
    """One group-delay readout for a unit launch state.

    Analytic mode evaluates the narrowband delay directly and, for a noisy
    receiver, adds Gaussian noise with the closed-form variance.  Waveform
    mode synthesizes the detected pulse: Gaussian spectrum, per-frequency
    modal propagation, total intensity, optional per-sample current noise,
    then the Simpson 3/8 first moment over the window.

    Both modes read the delay of the unitary part only; attenuation has its
    own measurement channel.  `seed` (int or tuple of ints) is required
    whenever rx.noise_psd > 0.
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != (f.n,):
        raise DimensionError(
            f"launch state must have shape ({f.n},), got {state.shape}")
    if abs(np.linalg.norm(state) - 1.0) > 1e-10:
        raise DimensionError("launch state must be unit norm")
    if mode not in DELAY_MODES:
        raise ConfigError(f"mode must be one of {DELAY_MODES}, got {mode!r}")
    noisy = rx.noise_psd > 0.0
    if noisy and seed is None:
        raise ConfigError("a seed is required for a noisy receiver")
    rng = _rng_from(seed) if noisy else None
    if mode == "analytic":
        value = group_delay(f, state)
        if noisy:
            value += rng.normal(0.0, math.sqrt(rx.delay_variance))
    else:
        value = _waveform_delay(f, state, rx, rng)
    return MeasurementRecord(launch_index=launch_index, value=float(value),
                             kind="delay", mode=mode, seed=seed)


def estimate_tau0(f: FiberModel, rx: ReceiverModel, simplex: SimplexSet,
                  repeats: int = 1, seed=None,
                  mode: str = "analytic") -> float:
    """Common-mode delay from repeats x n measurements over a simplex.

    The simplex Stokes images sum to zero, so the mean kills the delay
    vector's contribution; noiseless analytic mode returns tau0 exactly and
    the noisy estimator variance is delay_variance / (repeats * n).
    """
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    if simplex.n != f.n:
        raise DimensionError(
            f"simplex has {simplex.n} modes, fiber has {f.n}")
    noisy = rx.noise_psd > 0.0
    if noisy and seed is None:
        raise ConfigError("a seed is required for a noisy receiver")
    base = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    values = np.empty((repeats, simplex.n))
    for rep in range(repeats):
        for idx in range(simplex.n):
            sub = (*base, rep, idx) if noisy else None
            values[rep, idx] = measure_delay(
                f, simplex.states[idx], rx, mode, sub, launch_index=idx).value
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# Delay-vector reconstruction
# ---------------------------------------------------------------------------

def _record_values(records) -> np.ndarray:
    vals = [r.value if isinstance(r, MeasurementRecord) else float(r)
            for r in records]
    return np.asarray(vals, dtype=float)


def reconstruct_md(launch_set: LaunchSet, records, tau0: float) -> np.ndarray:
    """Delay vector from one delay record per launch, via a linear solve.

    The scaled delays 2 c_n^2 (tau_g - tau0) form the right-hand side of
    S x = b with S the set's Stokes coefficient matrix; no inverse is formed.
    """
    values = _record_values(records)
    if values.shape != (launch_set.m,):
        raise DimensionError(
            f"need {launch_set.m} records, got {values.shape[0]}")
    c = norm_coeff(launch_set.n)
    rhs = 2.0 * c * c * (values - tau0)
    try:
        return np.linalg.solve(launch_set.stokes_matrix(), rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSetError("stokes coefficient matrix is singular") from exc


def scaled_delay_variance(rx: ReceiverModel, n: int) -> float:
    """Variance of one scaled delay 2 c_n^2 (tau_g - tau0) (s^2)."""
    c = norm_coeff(n)
    return (2.0 * c * c) ** 2 * rx.delay_variance


def _mc_analytic_errors(launch_set, s_mat, rx, seed, first, last):
    c = norm_coeff(launch_set.n)
    sigma = math.sqrt(rx.delay_variance)
    noise = np.empty((last - first, launch_set.m))
    for tdx in range(first, last):
        noise[tdx - first] = rng_for(seed, tdx).normal(0.0, sigma,
                                                       launch_set.m)
    return np.linalg.solve(s_mat, (2.0 * c * c * noise).T).T


def _mc_waveform_errors(args):
    f, launch_set, rx, seed, first, last = args
    errors = np.empty((last - first, launch_set.m))
    for tdx in range(first, last):
        records = [measure_delay(f, launch_set.states[i], rx, "waveform",
                                 (seed, tdx, i), launch_index=i)
                   for i in range(launch_set.m)]
        errors[tdx - first] = (reconstruct_md(launch_set, records, f.tau0)
                               - f.md_vector)
    return errors


def monte_carlo_md(f: FiberModel, launch_set: LaunchSet, rx: ReceiverModel,
                   trials: int, seed: int = 0,
                   mode: str = "analytic") -> dict:
    """Repeat the delay-vector measurement and tabulate the errors.

    Trial t draws its noise from the (seed, t) substream, so results do not
    depend on scheduling; accumulation relies on numpy pairwise summation.
    Analytic mode exploits that the error is linear in the noise and solves
    all trials in one call.  Waveform mode simulates every pulse and, with
    STOKES_OPT_THREADS > 1, distributes trial chunks over a process pool.

    Returns a dict with the per-trial squared error norms, their mean, the
    closed-form prediction scaled_delay_variance * xi, the mean error
    vector and the empirical covariance.
    """
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    if mode not in DELAY_MODES:
        raise ConfigError(f"mode must be one of {DELAY_MODES}, got {mode!r}")
    if launch_set.n != f.n:
        raise DimensionError(
            f"launch set has {launch_set.n} modes, fiber has {f.n}")
    if rx.noise_psd <= 0:
        raise ConfigError("monte_carlo_md needs a noisy receiver")
    if mode == "analytic":
        s_mat = launch_set.stokes_matrix()
        try:
            errors = _mc_analytic_errors(launch_set, s_mat, rx, seed,
                                         0, trials)
        except np.linalg.LinAlgError as exc:
            raise SingularSetError(
                "stokes coefficient matrix is singular") from exc
    else:
        workers = int(os.environ.get("STOKES_OPT_THREADS", "1"))
        if workers > 1 and trials > 1:
            chunk = -(-trials // workers)
            bounds = [(first, min(first + chunk, trials))
                      for first in range(0, trials, chunk)]
            jobs = [(f, launch_set, rx, seed, a, b) for a, b in bounds]
            with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
                parts = list(pool.map(_mc_waveform_errors, jobs))
            errors = np.vstack(parts)
        else:
            errors = _mc_waveform_errors((f, launch_set, rx, seed, 0, trials))
    sq = np.einsum("tm,tm->t", errors, errors)
    return {
        "trials": trials,
        "mode": mode,
        "mean_error": errors.mean(axis=0),
        "covariance": errors.T @ errors / trials,
        "sq_errors": sq,
        "mean_sq_error": float(sq.mean()),
        "predicted_mean_sq": variance_prediction(
            launch_set, scaled_delay_variance(rx, f.n)),
    }


# ---------------------------------------------------------------------------
# Attenuation measurement and loss reconstruction
# ---------------------------------------------------------------------------

def measure_attenuation(f: FiberModel, state, rel_noise: float = 0.0,
                        seed=None) -> float:
    """Output power fraction <s| H^+ H |s> = <s| P^2 |s> for a unit launch.

    rel_noise > 0 adds multiplicative Gaussian noise, modelling a power
    meter with that relative accuracy.
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != (f.n,):
        raise DimensionError(
            f"launch state must have shape ({f.n},), got {state.shape}")
    if abs(np.linalg.norm(state) - 1.0) > 1e-10:
        raise DimensionError("launch state must be unit norm")
    if rel_noise < 0:
        raise ConfigError("rel_noise must be non-negative")
    p2 = f.loss_matrix(squared=True)
    value = float(np.real(state.conj() @ p2 @ state))
    if rel_noise > 0:
        if seed is None:
            raise ConfigError("a seed is required for noisy power readings")
        value *= 1.0 + _rng_from(seed).normal(0.0, rel_noise)
    return value


def mdl_parameters(f: FiberModel) -> tuple[float, np.ndarray]:
    """True (alpha0, gamma) of the fiber's P^2 in its Stokes expansion."""
    e = expand_matrix(f.loss_matrix(squared=True))
    alpha0 = float(e.scalar.real)
    return alpha0, e.vector.real / alpha0


def predicted_attenuation(alpha0: float, gamma, state) -> float:
    """Closed-form attenuation alpha0 (1 + gamma . s_hat / (2 c_n^2))."""
    shat = jones_to_stokes(state)
    gamma = np.asarray(gamma, dtype=float)
    n = int(round(math.sqrt(gamma.shape[0] + 1)))
    c = norm_coeff(n)
    return alpha0 * (1.0 + float(gamma @ shat) / (2.0 * c * c))


def reconstruct_mdl(launch_set: LaunchSet, simplex: SimplexSet,
                    set_records, simplex_records) -> MdlEstimate:
    """Loss parameters from attenuation readings of set and simplex.

    alpha0 is the simplex mean (the orthonormal Stokes images sum to zero),
    gamma comes from the same linear solve as the delay reconstruction, and
    the eigenvalues of the rebuilt P^2 give mdl_ratio.  A rebuilt P^2 that
    is not positive definite means the records were too noisy to describe
    any physical loss element.
    """
    set_values = _record_values(set_records)
    simplex_values = _record_values(simplex_records)
    if set_values.shape != (launch_set.m,):
        raise DimensionError(
            f"need {launch_set.m} set records, got {set_values.shape[0]}")
    if simplex_values.shape != (simplex.n,):
        raise DimensionError(
            f"need {simplex.n} simplex records, got {simplex_values.shape[0]}")
    alpha0 = float(np.mean(simplex_values))
    if alpha0 <= 0:
        raise EstimationFailedError(
            f"mean attenuation must be positive, got {alpha0}")
    c = norm_coeff(launch_set.n)
    rhs = 2.0 * c * c * (set_values / alpha0 - 1.0)
    try:
        gamma = np.linalg.solve(launch_set.stokes_matrix(), rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSetError("stokes coefficient matrix is singular") from exc
    p2 = alpha0 * assemble(HermitianExpansion(
        n=launch_set.n, scalar=1.0 + 0.0j, vector=gamma.astype(complex)))
    evals = np.linalg.eigvalsh(p2)
    if evals[0] <= 0:
        raise EstimationFailedError(
            "reconstructed squared loss operator is not positive definite")
    return MdlEstimate(n=launch_set.n, alpha0=alpha0, gamma=gamma,
                       mdl_ratio=float(evals[-1] / evals[0]))


def loss_matrix_from_estimate(est: MdlEstimate) -> np.ndarray:
    """Principal square root P of the estimate's P^2."""
    p2 = est.alpha0 * assemble(HermitianExpansion(
        n=est.n, scalar=1.0 + 0.0j, vector=est.gamma.astype(complex)))
    evals, vecs = np.linalg.eigh(p2)
    if evals[0] <= 0:
        raise EstimationFailedError(
            "estimated squared loss operator is not positive definite")
    return (vecs * np.sqrt(evals)) @ vecs.conj().T


def equalize(f: FiberModel, est: MdlEstimate) -> FiberModel:
    """Undo the estimated loss: lossless model with unitary part H P_hat^-1.

    The right division is re-unitarized by a polar decomposition, so a noisy
    estimate still yields a valid model; the polar factor it discards is
    exactly the residual mismatch between true and estimated loss.
    """
    if est.n != f.n:
        raise DimensionError(f"estimate has {est.n} modes, fiber has {f.n}")
    p_hat = loss_matrix_from_estimate(est)
    h = f.transfer_matrix(0.0)
    w = np.linalg.solve(p_hat.T, h.T).T
    u_eq, _ = polar(w)
    return FiberModel(n=f.n, tau0=f.tau0, md_vector=f.md_vector,
                      base_unitary=u_eq)


# ---------------------------------------------------------------------------
# Composed group-delay operator of a lossy fiber
# ---------------------------------------------------------------------------

def compose_gd_operator(n: int, tau0: float, md_vector, loss=None,
                        loss_omega=None) -> ComplexGdOperator:
    """Eigendata of P^-1 (delay generator) P + i P^-1 dP/domega.

    With loss omitted this is just the Hermitian delay operator.  The
    composed matrix is generally non-normal; when its eigenvector matrix is
    numerically singular the routine falls back to a Schur form and flags
    the result as defective.
    """
    md = np.asarray(md_vector, dtype=float)
    gen = assemble(HermitianExpansion(n=n, scalar=complex(tau0),
                                      vector=md.astype(complex)))
    if loss is None:
        composed = gen
    else:
        loss = np.asarray(loss, dtype=complex)
        composed = np.linalg.solve(loss, gen @ loss)
        if loss_omega is not None:
            composed = composed + 1j * np.linalg.solve(loss, loss_omega)
    e = expand_matrix(composed)
    vals, vecs = np.linalg.eig(composed)
    defective = False
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(vecs)
    if not np.isfinite(cond) or cond > 1e8:
        tmat, zmat = schur(composed, output="complex")
        vals = np.diag(tmat)
        vecs = zmat
        defective = True
    order = np.argsort(vals.real, kind="stable")
    return ComplexGdOperator(n=n, chi0=complex(e.scalar),
                             chi_vector=e.vector,
                             dmgds=vals.real[order],
                             pms=np.ascontiguousarray(vecs[:, order].T),
                             defective=defective)


def full_gd_operator(f: FiberModel, domega: float) -> ComplexGdOperator:
    """Composed group-delay operator of the fiber at the carrier.

    dP/domega is taken by a central difference at +-domega; it vanishes for
    frequency-flat loss, leaving the pure similarity transform of the delay
    generator.
    """
    if not domega > 0:
        raise ConfigError("domega must be positive")
    if f.pa_coeffs is None:
        return compose_gd_operator(f.n, f.tau0, f.md_vector)
    loss = f.loss_matrix()
    loss_omega = None
    if f.pa_slope is not None:
        loss_omega = (f.loss_matrix(domega)
                      - f.loss_matrix(-domega)) / (2.0 * domega)
    return compose_gd_operator(f.n, f.tau0, f.md_vector, loss, loss_omega)


# ---------------------------------------------------------------------------
# Launch crosstalk sensitivity (two-mode demonstrator)
# ---------------------------------------------------------------------------

def crosstalk_bound(epsilon: float) -> tuple[float, float]:
    """Error bound for leaky two-mode launches of the orthonormal triple.

    A mode converter that leaks power fraction epsilon into the orthogonal
    state turns the identity coefficient matrix into a perturbed S'; the
    return is (||S' - S||_2, kappa(S) ||S' - S|| / ||S||), the second being
    the relative delay-vector error bound.  Both behave as 2 sqrt(2 eps)
    for small epsilon: the error grows with the square root of the leakage.
    """
    if not (0.0 <= epsilon < 0.5):
        raise ConfigError(
            f"crosstalk level must lie in [0, 0.5), got {epsilon}")
    leak = 2.0 * math.sqrt((1.0 - epsilon) * epsilon)
    diag = 1.0 - 2.0 * epsilon
    s_ideal = np.eye(3)
    s_actual = np.array([
        [diag, leak, 0.0],
        [leak, diag, 0.0],
        [leak, 0.0, diag],
    ])
    ds = s_actual - s_ideal
    norm_ds = float(np.linalg.norm(ds, 2))
    rel_bound = float(np.linalg.cond(s_ideal) * norm_ds
                      / np.linalg.norm(s_ideal, 2))
    return norm_ds, rel_bound
