"""Propagation, spectra, steady states and mean-force Gibbs states."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DefectiveGeneratorError, NonUniqueSteadyStateError, NumericError
from .generators import DissipativeModel, Superoperator, q_mfg_tensor, unvec, vec
from .model import SIGMA_Z, build_system_hamiltonian, gibbs_state

log = logging.getLogger(__name__)


@dataclass
class Trajectory:
    """Density matrices on a uniform time grid with derived series."""

    times: np.ndarray
    states: np.ndarray
    observables: dict = field(default_factory=dict)

    @property
    def traces(self):
        return np.einsum("kii->k", self.states).real

    @property
    def min_eigs(self):
        herm = 0.5 * (self.states + np.conj(np.transpose(self.states, (0, 2, 1))))
        return np.linalg.eigvalsh(herm)[:, 0]

    def expectation(self, op):
        return np.einsum("ij,kji->k", op, self.states)


def propagate(L: Superoperator, rho0, t_max: float, dt: float | None = None, steps: int | None = None, observables=None):
    """Step ``rho(t_k+1) = exp(L dt) rho(t_k)`` on a uniform grid.

    Give either ``dt`` or ``steps``. The trace is not renormalized; a drift
    above 1e-6 triggers a warning.

    Raises
    ------
    NumericError
        If any propagated entry is not finite.
    """
    if steps is None:
        if dt is None or dt <= 0:
            raise ValueError("give a positive dt or a step count")
        steps = int(round(t_max / dt))
    dt = t_max / steps
    rho0 = np.asarray(rho0, dtype=complex)
    n = rho0.shape[0]
    prop = linalg.expm(L.matrix * dt)
    v = np.empty((steps + 1, n * n), dtype=complex)
    v[0] = vec(rho0)
    for k in range(steps):
        v[k + 1] = prop @ v[k]
    if not np.all(np.isfinite(v)):
        raise NumericError("propagation produced non-finite entries")
    states = v.reshape(steps + 1, n, n, order="C").transpose(0, 2, 1)
    traj = Trajectory(np.arange(steps + 1) * dt, states)
    drift = float(np.max(np.abs(traj.traces - np.trace(rho0).real)))
    if drift > 1e-6:
        warnings.warn(f"trace drift {drift:.3e} during propagation", RuntimeWarning, stacklevel=2)
    obs = dict(observables or {})
    if n == 2:
        obs.setdefault("sz", SIGMA_Z)
    traj.observables = {k: traj.expectation(op) for k, op in obs.items()}
    return traj


def min_eig_trajectory(traj: Trajectory) -> float:
    """Smallest eigenvalue of any state along the trajectory."""
    return float(np.min(traj.min_eigs))


@dataclass(frozen=True)
class SpectralData:
    """Spectrum of a Liouvillian sorted by descending real part."""

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    coefficients: np.ndarray | None = None

    @property
    def mu0(self) -> complex:
        return complex(self.eigenvalues[0])

    @property
    def gap(self) -> float:
        return float(-self.eigenvalues[1].real)

    def reconstruct(self, t):
        """``sum_k c_k exp(mu_k t) right_k`` (needs coefficients)."""
        if self.coefficients is None:
            raise ValueError("no initial state was supplied")
        return unvec(self.right @ (self.coefficients * np.exp(self.eigenvalues * t)))


def _sort_key(mu):
    # descending real part, ties broken by imaginary part for determinism
    return np.lexsort((np.round(mu.imag, 12), -np.round(mu.real, 12)))


def spectral_decompose(L: Superoperator, rho0=None, cond_limit: float = 1e8) -> SpectralData:
    """Eigen-decomposition of ``L`` with biorthonormal left vectors.

    Raises
    ------
    DefectiveGeneratorError
        If the eigenvector matrix is too ill-conditioned.
    """
    mu, vr = linalg.eig(L.matrix)
    order = _sort_key(mu)
    # the eigenvalue closest to zero is the stationary mode
    z = int(np.argmin(np.abs(mu)))
    order = np.concatenate(([z], order[order != z]))
    mu, vr = mu[order], vr[:, order]
    cond = np.linalg.cond(vr)
    if not np.isfinite(cond) or cond > cond_limit:
        raise DefectiveGeneratorError(f"Liouvillian eigenvector matrix has condition number {cond:.2e}; use a Schur-based analysis")
    vl = np.linalg.inv(vr)
    coeffs = None if rho0 is None else vl @ vec(np.asarray(rho0, dtype=complex))
    return SpectralData(mu, vr, vl, coeffs)


def liouvillian_gap(L: Superoperator) -> tuple[float, complex, complex]:
    """``(g, mu_0, mu_1)`` with ``g = -Re mu_1``."""
    mu = np.linalg.eigvals(L.matrix)
    z = int(np.argmin(np.abs(mu)))
    rest = np.delete(mu, z)
    if not rest.size:
        return 0.0, complex(mu[z]), 0j
    # of a conjugate pair report the member with non-negative imaginary part
    top = rest[rest.real >= rest.real.max() - 1e-12 * max(1.0, abs(rest.real.max()))]
    mu1 = top[np.argmax(top.imag)]
    return float(-mu1.real), complex(mu[z]), complex(mu1)


def steady_state(L: Superoperator, zero_tol: float = 1e-8):
    """Normalized, Hermitized null vector of ``L``.

    Raises
    ------
    NonUniqueSteadyStateError
        If more than one eigenvalue has modulus below ``zero_tol``
        (relative to ``max(1, ||L||)``).
    """
    mu, vr = linalg.eig(L.matrix)
    scale = max(1.0, np.linalg.norm(L.matrix, 2))
    small = np.flatnonzero(np.abs(mu) < zero_tol * scale)
    if small.size > 1:
        raise NonUniqueSteadyStateError(f"{small.size} eigenvalues are numerically zero")
    k = int(np.argmin(np.abs(mu)))
    rho = unvec(vr[:, k])
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def mfg_state(model: DissipativeModel, q=None):
    """``(I + Q)[Gibbs(H)]``, Hermitized and trace-normalized."""
    g = gibbs_state(model.hamiltonian, model.beta)
    if q is None:
        q = q_mfg_tensor(model)
    rho = g + q.q.apply(g)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def weak_limit_state(system, beta):
    """Gibbs state of the bare system Hamiltonian."""
    return gibbs_state(build_system_hamiltonian(system), beta)


def strong_limit_state(system, beta):
    """Gibbs state of the pure-dephasing Hamiltonian ``sum_n eps_n |n><n|``."""
    return gibbs_state(np.diag(system.onsite).astype(complex), beta)


def infinite_temperature_state(dim):
    return np.eye(dim, dtype=complex) / dim
