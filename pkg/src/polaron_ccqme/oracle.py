"""Independent reference engines.

* discrete-mode bath: Gauss-Legendre discretization of ``J`` with
  ``g_k^2 = J(w_k) w_k / pi``;
* exact diagonalization of system + truncated discrete bath;
* discrete-sum correlation functions;
* mean-force Gibbs correction from the imaginary-time (Dyson) expansion
  ``Tr_B exp(-beta H) ~ exp(-beta H_S) [1 + int_0^beta du int_0^u dv
  <H_SB(u) H_SB(v)>]``, evaluated by one-dimensional quadrature.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import bath as bathmod
from .errors import ConfigError
from .generators import DissipativeModel
from .model import SIGMA_Z, SuperOhmic, SystemSpec, build_system_hamiltonian, gibbs_state

log = logging.getLogger(__name__)

MAX_ED_DIM = 4096


@dataclass(frozen=True)
class DiscreteBath:
    """Finite set of harmonic modes ``(w_k, g_k)`` at inverse temperature ``beta``."""

    omegas: np.ndarray
    couplings: np.ndarray
    weights: np.ndarray
    beta: float
    fock_cutoff: int = 4

    @property
    def size(self) -> int:
        return int(self.omegas.size)

    def moment(self, f):
        """``sum_k g_k^2 f(w_k)``, the discrete analogue of ``(1/pi) int J f``."""
        return float(np.sum(self.couplings**2 * f(self.omegas)))

    def recurrence_time(self) -> float:
        if self.size < 2:
            return math.inf
        return float(2.0 * math.pi / np.min(np.diff(self.omegas)))


def discretize_bath(density, beta: float, modes: int, fock_cutoff: int = 4, omega_max: float | None = None) -> DiscreteBath:
    """Gauss-Legendre discretization of a spectral density.

    Parameters
    ----------
    omega_max : float or None
        Nodes on ``(0, omega_max]``; ``None`` maps ``(0, 1)`` onto the
        half-line with ``w = w_s x / (1 - x)`` (needed for converged
        low-order moments at large ``modes``).
    """
    if modes < 1:
        raise ConfigError("need at least one bath mode")
    x, w = np.polynomial.legendre.leggauss(modes)
    if omega_max is None:
        ws = density.omega_scale
        y = 0.5 * (x + 1.0)
        om = ws * y / (1.0 - y)
        wt = 0.5 * w * ws / (1.0 - y) ** 2
    else:
        om = 0.5 * omega_max * (x + 1.0)
        wt = 0.5 * omega_max * w
    g = np.sqrt(density(om) * wt / math.pi)
    return DiscreteBath(om, g, wt, float(beta), int(fock_cutoff))


def discretization_report(dbath: DiscreteBath, density) -> dict:
    """Relative errors of the discrete moments against continuum quadrature."""
    from .model import BathSpec

    b = dbath.beta
    bath = BathSpec(b, density)
    exact = {
        "inverse": bathmod.inverse_moment(density) / math.pi,
        "inverse_square_coth": bathmod.coth_moment(bath) / math.pi,
    }
    # int J/w^2 = int (J/w^3) w
    exact["inverse_square"] = bathmod._frequency_integral(density, lambda w: density.reduced(w) * w) / math.pi
    disc = {
        "inverse": dbath.moment(lambda w: 1.0 / w),
        "inverse_square": dbath.moment(lambda w: 1.0 / w**2),
        "inverse_square_coth": dbath.moment(lambda w: 1.0 / (w**2 * np.tanh(0.5 * b * w))),
    }
    return {k: abs(disc[k] - exact[k]) / abs(exact[k]) for k in exact}


def discrete_kappa(dbath: DiscreteBath, d: float) -> float:
    """``exp[-(d^2 / 2) sum_k g_k^2 / w_k^2 coth(beta w_k / 2)]``."""
    s = dbath.moment(lambda w: 1.0 / (w**2 * np.tanh(0.5 * dbath.beta * w)))
    return math.exp(-0.5 * d * d * s)


def discrete_correlation(dbath: DiscreteBath, d1: float, d2: float, tau):
    """Correlation of two channels from finite mode sums.

    ``kappa_1 kappa_2 (exp(-eps) - 1)`` with
    ``eps = d1 d2 sum_k g_k^2 / w_k^2 [coth cos - i sin]``.
    """
    tau = np.asarray(tau, dtype=float)
    p = d1 * d2
    if p == 0.0:
        return np.zeros(tau.shape, dtype=complex)[()]
    w = dbath.omegas[:, None]
    g2 = (dbath.couplings**2)[:, None]
    t = np.atleast_1d(tau)[None, :]
    coth = 1.0 / np.tanh(0.5 * dbath.beta * w)
    eps = p * np.sum(g2 / w**2 * (coth * np.cos(w * t) - 1j * np.sin(w * t)), axis=0)
    kk = discrete_kappa(dbath, d1) * discrete_kappa(dbath, d2)
    return (kk * np.expm1(-eps)).reshape(tau.shape)[()]


# ----------------------------------------------------------------------------
# Exact diagonalization
# ----------------------------------------------------------------------------


@dataclass
class ExactSeries:
    """Reduced dynamics from exact diagonalization."""

    times: np.ndarray
    states: np.ndarray
    observables: dict
    recurrence_time: float
    warning: str | None = None

    @property
    def traces(self):
        return np.einsum("kii->k", self.states).real

    @property
    def min_eigs(self):
        herm = 0.5 * (self.states + np.conj(np.transpose(self.states, (0, 2, 1))))
        return np.linalg.eigvalsh(herm)[:, 0]


def _mode_operators(cutoff):
    a = np.diag(np.sqrt(np.arange(1, cutoff)), 1)
    return a, np.arange(cutoff, dtype=float)


def exact_evolve(system: SystemSpec, dbath: DiscreteBath, rho0, t_max: float, steps: int) -> ExactSeries:
    """Evolve ``rho0 (x) prod_k rho_k^thermal`` under the full Hamiltonian.

    The bath modes start in per-mode Gibbs states truncated to
    ``fock_cutoff`` levels and renormalized.

    Raises
    ------
    ConfigError
        If the total Hilbert-space dimension exceeds ``MAX_ED_DIM``.
    """
    n = system.dim
    k = dbath.size
    cut = dbath.fock_cutoff
    dim_b = cut**k
    if n * dim_b > MAX_ED_DIM:
        raise ConfigError(f"ED dimension {n * dim_b} exceeds the cap of {MAX_ED_DIM}")
    a, num = _mode_operators(cut)
    eye_c = np.eye(cut)

    def embed(op, j):
        out = np.ones((1, 1))
        for i in range(k):
            out = np.kron(out, op if i == j else eye_c)
        return out

    hb = np.zeros((dim_b, dim_b))
    xb = np.zeros((dim_b, dim_b))
    rho_b = np.ones((1, 1))
    for j in range(k):
        hb += dbath.omegas[j] * embed(np.diag(num), j)
        xb += dbath.couplings[j] * embed(a + a.T, j)
        pj = np.exp(-dbath.beta * dbath.omegas[j] * num)
        rho_b = np.kron(rho_b, np.diag(pj / pj.sum()))
    hs = build_system_hamiltonian(system)
    h = np.kron(hs, np.eye(dim_b)) + np.kron(np.eye(n), hb) + np.kron(np.diag(system.coupling), xb)
    e, v = np.linalg.eigh(h)
    r0 = v.conj().T @ np.kron(np.asarray(rho0, dtype=complex), rho_b) @ v
    dt = t_max / steps
    times = np.arange(steps + 1) * dt
    # rho_S,ij(t) = sum_ab ph_a(t) A^ij_ab conj(ph_b(t)), A^ij = r0 * (V_i^T conj(V_j)),
    # V_i the rows of the eigenvector matrix belonging to system state i
    phase = np.exp(-1j * np.outer(times, e))
    blocks = v.reshape(n, dim_b, -1)
    states = np.empty((steps + 1, n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            a_ij = r0 * (blocks[i].T @ blocks[j].conj())
            states[:, i, j] = np.einsum("ka,ka->k", phase @ a_ij, phase.conj())
            if j != i:
                states[:, j, i] = states[:, i, j].conj()
    t_rec = dbath.recurrence_time()
    note = None
    if t_max > t_rec:
        note = f"requested t_max={t_max:.3g} exceeds discrete-bath recurrence time {t_rec:.3g}"
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    obs = {"sz": np.einsum("ij,kji->k", SIGMA_Z, states).real} if n == 2 else {}
    for j in range(n):
        obs[f"p{j}"] = states[:, j, j].real
    return ExactSeries(times, states, obs, t_rec, note)


# ----------------------------------------------------------------------------
# Imaginary-time mean-force correction
# ----------------------------------------------------------------------------


def mfg_correction_imaginary_time(model: DissipativeModel, panels: int = 16, order: int = 64) -> np.ndarray:
    """``Q[G]`` in the eigenbasis from the imaginary-time expansion.

    Uses ``Q[G] = G X - G Tr(G X)`` with

        X_ij = sum_{ab,k} S_a,ik S_b,kj int_0^beta dw C_ab(-i w)
               exp(-w dE_kj) (exp(beta dE_ij) - exp(w dE_ij)) / dE_ij.
    """
    n = model.dim
    beta = model.beta
    e = model.eig.energies
    s = model.eig_operators()
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, beta, panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    u = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    wt = (0.5 * (hi - lo) * w).ravel()
    corr = {}
    if model.frame == "polaron":
        chans = model.polaron.channels
        kap = [model.polaron.kappa[c.m, c.n] for c in chans]
        for a, ca in enumerate(chans):
            for b, cb in enumerate(chans):
                corr[a, b] = bathmod.correlation_imaginary(ca.d * cb.d, kap[a] * kap[b], u, model.bath)
    else:
        corr[0, 0] = gaussian_correlation_imaginary(u, model.bath)
    g = gibbs_state(np.diag(e), beta)
    X = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            dij = e[i] - e[j]
            if abs(dij) < 1e-14:
                f = beta - u
            else:
                f = (np.exp(beta * dij) - np.exp(u * dij)) / dij
            for k in range(n):
                kernel = np.exp(-u * (e[k] - e[j])) * f * wt
                for (a, b), c in corr.items():
                    amp = s[a][i, k] * s[b][k, j]
                    if amp != 0:
                        X[i, j] += amp * np.dot(kernel, c)
    gx = g @ X
    return gx - g * np.trace(gx)


def gaussian_correlation_imaginary(u, bath) -> np.ndarray:
    """Original-frame ``C(-i u) = (1/pi) int J cosh(w (beta/2 - u)) / sinh(beta w / 2) dw``."""
    d, beta = bath.density, bath.beta
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if d.is_zero:
        return np.zeros(u.shape)
    wmax = 60.0 * d.omega_scale if isinstance(d, SuperOhmic) else d.omega_max
    xg, wg = np.polynomial.legendre.leggauss(64)
    edges = np.linspace(0.0, wmax, 241)
    lo, hi = edges[:-1, None], edges[1:, None]
    om = (0.5 * (hi - lo) * xg + 0.5 * (hi + lo)).ravel()
    ow = (0.5 * (hi - lo) * wg).ravel()
    # J cosh(w(b/2-u))/sinh(bw/2) = (J/w^3) w^2 [e^{-wu} + e^{-w(b-u)}] w/(1-e^{-bw})
    base = d.reduced(om) * om**2 * bathmod._bose_weight(-beta * om) / beta
    num = np.exp(-np.outer(u, om)) + np.exp(-np.outer(beta - u, om))
    return (num * base[None, :]) @ ow / math.pi
