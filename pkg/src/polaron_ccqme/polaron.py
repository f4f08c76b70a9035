"""Polaron frame: effective Hamiltonian, residual channels and eigenbasis."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import bath as bathmod
from .errors import DegenerateSpectrumError
from .model import BathSpec, SystemSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Channel:
    """Residual coupling channel ``S_mn = h_mn |m><n|`` with ``d = c_m - c_n``."""

    m: int
    n: int
    op: np.ndarray
    d: float


@dataclass(frozen=True)
class PolaronFrame:
    """Effective system Hamiltonian and residual channels in the polaron frame.

    Attributes
    ----------
    tilde_hs : ndarray
        ``sum_n (eps_n + xi_n)|n><n| + sum kappa_mn h_mn |m><n|``.
    channels : tuple of Channel
        One entry per ordered pair ``m != n`` with ``h_mn != 0``.
    kappa : ndarray
        Symmetric matrix of renormalizations, unit diagonal.
    shift : ndarray
        Per-state shifts ``xi_n``; their mean is the constant part of the
        energy shift, which drops out of every commutator and gap.
    """

    system: SystemSpec
    bath: BathSpec
    tilde_hs: np.ndarray
    channels: tuple
    kappa: np.ndarray
    shift: np.ndarray

    @property
    def dim(self) -> int:
        return self.system.dim


def build_polaron_frame(system: SystemSpec, bath: BathSpec) -> PolaronFrame:
    """Apply the polaron transformation to ``system`` coupled to ``bath``."""
    n = system.dim
    c = system.coupling
    moment = None
    kappa = np.ones((n, n))
    for m in range(n):
        for k in range(m + 1, n):
            d = c[m] - c[k]
            if d == 0.0 or bath.density.is_zero:
                continue
            if moment is None:
                moment = bathmod.coth_moment(bath)
            kappa[m, k] = kappa[k, m] = np.exp(-(d * d) / (2.0 * np.pi) * moment)
    inv = None if bath.density.is_zero else bathmod.inverse_moment(bath.density)
    shift = np.zeros(n) if inv is None else -(c * c) / np.pi * inv
    h = np.diag(system.onsite + shift).astype(complex) + kappa * system.hopping
    h = 0.5 * (h + h.conj().T)
    channels = []
    for m in range(n):
        for k in range(n):
            if m != k and system.hopping[m, k] != 0:
                op = np.zeros((n, n), dtype=complex)
                op[m, k] = system.hopping[m, k]
                op.setflags(write=False)
                channels.append(Channel(m, k, op, float(c[m] - c[k])))
    if shift.size and np.ptp(shift) == 0 and shift[0] != 0:
        log.debug("polaron shift is a constant %.6g (drops out of gaps)", shift[0])
    for a in (h, kappa, shift):
        a.setflags(write=False)
    return PolaronFrame(system, bath, h, tuple(channels), kappa, shift)


@dataclass(frozen=True)
class EigenFrame:
    """Eigen-decomposition ``H = U diag(E) U^dagger`` with ascending ``E``."""

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def gaps(self) -> np.ndarray:
        """``gaps[i, j] = E_i - E_j``."""
        return self.energies[:, None] - self.energies[None, :]

    def to_eigenbasis(self, op):
        return self.vectors.conj().T @ op @ self.vectors

    def from_eigenbasis(self, op):
        return self.vectors @ op @ self.vectors.conj().T


def diagonalize(h, threshold: float = 1e-9) -> EigenFrame:
    """Diagonalize a Hermitian matrix (or a :class:`PolaronFrame`).

    Each eigenvector is rotated so its largest-magnitude component is real
    and positive.

    Raises
    ------
    DegenerateSpectrumError
        If two eigenvalues are closer than ``threshold`` times the spectral span.
    """
    if isinstance(h, PolaronFrame):
        h = h.tilde_hs
    e, v = np.linalg.eigh(np.asarray(h, dtype=complex))
    span = float(e[-1] - e[0])
    min_gap = float(np.min(np.diff(e))) if e.size > 1 else np.inf
    if not min_gap > threshold * max(span, np.finfo(float).tiny):
        raise DegenerateSpectrumError(
            f"effective Hamiltonian is degenerate: smallest gap {min_gap:.3e} (span {span:.3e})"
        )
    idx = np.argmax(np.abs(v), axis=0)
    phase = v[idx, np.arange(v.shape[1])]
    v = v * (np.abs(phase) / phase)[None, :]
    e.setflags(write=False)
    v.setflags(write=False)
    return EigenFrame(e, v)
