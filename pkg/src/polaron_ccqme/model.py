"""System, bath and coupling data model.

The system Hamiltonian is ``H_S = sum_n eps_n |n><n| + sum_{m!=n} h_mn |m><n|``
and the bath couples diagonally through ``g_nk = c_n g_k`` with a single
spectral density ``J(w) = pi sum_k g_k^2 delta(w - w_k)``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, DivergentIntegralError

log = logging.getLogger(__name__)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemSpec:
    """N-level system with factorized diagonal bath coupling.

    Parameters
    ----------
    onsite : array_like, shape (N,)
        Site energies ``eps_n``.
    hopping : array_like, shape (N, N)
        Hermitian hopping matrix ``h_mn`` with zero diagonal.
    coupling : array_like, shape (N,)
        Coupling coefficients ``c_n`` so that ``g_nk = c_n g_k``.
    """

    onsite: np.ndarray
    hopping: np.ndarray
    coupling: np.ndarray

    def __post_init__(self):
        onsite = np.asarray(self.onsite, dtype=float)
        if onsite.ndim != 1 or onsite.size < 2:
            raise ConfigError("onsite must be a vector with at least two entries")
        if not np.all(np.isfinite(onsite)):
            raise ConfigError("onsite energies must be finite")
        n = onsite.size
        hop = np.asarray(self.hopping, dtype=complex)
        if hop.shape != (n, n):
            raise ConfigError(f"hopping must have shape ({n}, {n}), got {hop.shape}")
        if not np.all(np.isfinite(hop)):
            raise ConfigError("hopping entries must be finite")
        diag = np.flatnonzero(np.abs(np.diag(hop)) > 0)
        if diag.size:
            raise ConfigError(f"hopping must have zero diagonal; nonzero at index {int(diag[0])}")
        scale = max(1.0, float(np.max(np.abs(hop))))
        bad = np.argwhere(np.abs(hop - hop.conj().T) > 1e-12 * scale)
        if bad.size:
            m, k = (int(x) for x in bad[0])
            raise ConfigError(
                f"hopping is not Hermitian: h[{m},{k}]={hop[m, k]} but conj(h[{k},{m}])={np.conj(hop[k, m])}"
            )
        c = np.asarray(self.coupling, dtype=float)
        if c.shape != (n,):
            raise ConfigError(f"coupling must have length {n}")
        if not np.all(np.isfinite(c)):
            raise ConfigError("coupling coefficients must be finite")
        if np.ptp(c) == 0.0:
            log.warning("all coupling coefficients are equal; the polaron frame is trivial")
        object.__setattr__(self, "onsite", _frozen(onsite, float))
        object.__setattr__(self, "hopping", _frozen(0.5 * (hop + hop.conj().T), complex))
        object.__setattr__(self, "coupling", _frozen(c, float))

    @property
    def dim(self) -> int:
        return int(self.onsite.size)


def build_system_hamiltonian(spec: SystemSpec) -> np.ndarray:
    """Return ``H_S = diag(eps) + h`` as an exactly Hermitian matrix."""
    h = np.diag(spec.onsite).astype(complex) + spec.hopping
    return 0.5 * (h + h.conj().T)


def bare_gap(spec: SystemSpec) -> float:
    """Gap between the two lowest eigenvalues of the bare system Hamiltonian.

    Used as the energy unit for the temperature and coupling axes of scans.
    """
    e = np.linalg.eigvalsh(build_system_hamiltonian(spec))
    return float(e[1] - e[0])


# ----------------------------------------------------------------------------
# Spectral densities
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SuperOhmic:
    """``J(w) = gamma w^3 exp(-w / omega_c)``."""

    gamma: float
    omega_c: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ConfigError("gamma must be a finite non-negative number")
        if not (math.isfinite(self.omega_c) and self.omega_c > 0):
            raise ConfigError("omega_c must be positive and finite")

    exponent = 3.0

    @property
    def is_zero(self) -> bool:
        return self.gamma == 0.0

    @property
    def omega_scale(self) -> float:
        return self.omega_c

    @property
    def omega_max(self) -> float:
        return math.inf

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        return np.where(w > 0, self.gamma * w**3 * np.exp(-np.abs(w) / self.omega_c), 0.0)

    def reduced(self, x):
        """``J(x) / x^3`` for ``x >= 0`` (finite at the origin)."""
        x = np.asarray(x, dtype=float)
        return self.gamma * np.exp(-x / self.omega_c)

    def reduced_derivative(self, x):
        x = np.asarray(x, dtype=float)
        return -self.gamma / self.omega_c * np.exp(-x / self.omega_c)


@dataclass(frozen=True)
class Tabulated:
    """Spectral density interpolated from samples with a power-law head.

    Between nodes the density is a monotone (PCHIP) cubic, so it never
    overshoots below zero. Below the first node ``J ~ w^s`` with the declared
    exponent; above the last node ``J = 0``.

    Parameters
    ----------
    omega, values : array_like
        Strictly increasing positive frequencies and non-negative ``J`` samples.
    exponent : float
        Small-frequency power ``s``. Must be at least 3 so that ``J(w)/w^3``
        stays bounded, which the multi-phonon rate construction relies on.
    """

    omega: np.ndarray
    values: np.ndarray
    exponent: float = 3.0
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        j = np.asarray(self.values, dtype=float)
        if w.ndim != 1 or w.size < 2 or w.shape != j.shape:
            raise ConfigError("tabulated density needs matching 1-D omega and J arrays (>= 2 points)")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(j))):
            raise ConfigError("tabulated density contains non-finite values")
        if w[0] <= 0 or np.any(np.diff(w) <= 0):
            raise ConfigError("tabulated omega must be positive and strictly increasing")
        if np.any(j < 0):
            raise ConfigError("tabulated J must be non-negative")
        if not math.isfinite(self.exponent) or self.exponent < 2:
            raise ConfigError(
                f"small-frequency exponent s={self.exponent} makes the renormalization integral diverge (need s >= 2)"
            )
        if self.exponent < 3:
            raise ConfigError(
                f"small-frequency exponent s={self.exponent} is not supported; rates need J(w)/w^3 bounded (s >= 3)"
            )
        object.__setattr__(self, "omega", _frozen(w, float))
        object.__setattr__(self, "values", _frozen(j, float))
        object.__setattr__(self, "_interp", PchipInterpolator(w, j, extrapolate=False))
        for name, f in (("J/w^2", lambda x: self(x) / x**2), ("J/w", lambda x: self(x) / x)):
            with warnings.catch_warnings():
                # only finiteness matters here, not the requested accuracy
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(f, 0.0, float(w[-1]), points=list(w[:50]), limit=400)
            if not (math.isfinite(val) and math.isfinite(err)):
                raise DivergentIntegralError(f"integral of {name} does not converge")

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values > 0)

    @property
    def omega_scale(self) -> float:
        return float(self.omega[int(np.argmax(self.values))])

    @property
    def omega_max(self) -> float:
        return float(self.omega[-1])

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        w0, j0 = self.omega[0], self.values[0]
        out = np.zeros_like(w)
        head = (w > 0) & (w < w0)
        out[head] = j0 * (w[head] / w0) ** self.exponent
        body = (w >= w0) & (w <= self.omega[-1])
        out[body] = self._interp(w[body])
        return out

    def reduced(self, x):
        x = np.asarray(x, dtype=float)
        w0, j0 = self.omega[0], self.values[0]
        out = np.zeros_like(x)
        head = x < w0
        out[head] = j0 / w0**3 * (np.maximum(x[head], 0.0) / w0) ** (self.exponent - 3.0)
        body = (x >= w0) & (x <= self.omega[-1])
        out[body] = self._interp(x[body]) / x[body] ** 3
        return out

    def reduced_derivative(self, x):
        x = np.asarray(x, dtype=float)
        w0, j0 = self.omega[0], self.values[0]
        s = self.exponent
        out = np.zeros_like(x)
        head = (x < w0) & (x > 0)
        if s > 3:
            out[head] = j0 / w0**3 * (s - 3.0) / w0 * (x[head] / w0) ** (s - 4.0)
        body = (x >= w0) & (x <= self.omega[-1])
        xb = x[body]
        out[body] = self._interp.derivative()(xb) / xb**3 - 3.0 * self._interp(xb) / xb**4
        return out


SpectralDensity = SuperOhmic | Tabulated


@dataclass(frozen=True)
class BathSpec:
    """Thermal bosonic bath: inverse temperature and spectral density."""

    beta: float
    density: SpectralDensity

    def __post_init__(self):
        if not (isinstance(self.beta, (int, float)) and math.isfinite(self.beta) and self.beta > 0):
            raise ConfigError("beta must be positive and finite (use the analytic infinite-temperature state instead)")
        if not isinstance(self.density, (SuperOhmic, Tabulated)):
            raise ConfigError("density must be SuperOhmic or Tabulated")


@dataclass(frozen=True)
class SpinBosonSpec:
    """``H_S = eps sigma_z + h sigma_x`` with ``sigma_z`` coupling."""

    epsilon: float
    h: float
    bath: BathSpec

    def to_system(self) -> SystemSpec:
        return spin_boson_to_general(self)


def spin_boson_to_general(spec: SpinBosonSpec) -> SystemSpec:
    """Map the spin-boson parameters onto the N-level model (N = 2, c = (1, -1))."""
    h = float(spec.h)
    return SystemSpec(
        onsite=[float(spec.epsilon), -float(spec.epsilon)],
        hopping=[[0.0, h], [h, 0.0]],
        coupling=[1.0, -1.0],
    )


# ----------------------------------------------------------------------------
# Density matrices
# ----------------------------------------------------------------------------


def check_density_matrix(rho, herm_tol=1e-12, trace_tol=1e-10) -> float:
    """Validate Hermiticity and unit trace; return the minimum eigenvalue.

    Positivity is reported, never enforced.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ConfigError("density matrix must be square")
    norm = max(np.linalg.norm(rho), 1e-300)
    if np.linalg.norm(rho - rho.conj().T) > herm_tol * norm:
        raise ConfigError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ConfigError(f"density matrix trace is {np.trace(rho).real:.12g}, expected 1")
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])


def gibbs_state(h, beta) -> np.ndarray:
    """``exp(-beta H) / Z`` computed stably through the eigenbasis."""
    e, v = np.linalg.eigh(np.asarray(h, dtype=complex))
    w = np.exp(-beta * (e - e[0]))
    w /= w.sum()
    return (v * w) @ v.conj().T


def default_initial_state(dim: int) -> np.ndarray:
    """Population in the first site, ``(sigma_z + I) / 2`` for a qubit."""
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho
