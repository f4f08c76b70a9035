"""Superoperators: Redfield tensor, mean-force correction Q and Liouvillians.

Density matrices are vectorized by column stacking, ``vec(A X B) =
(B^T kron A) vec(X)``. Tensors are assembled in the eigenbasis of the system
Hamiltonian of the chosen frame and stored in the site basis.

For channel operators ``S_a`` (eigenbasis) and rate functions ``W_ab`` the
Markovian Redfield dissipator is

    R[rho] = sum_a ( [Lam_a rho, S_a] - [rho Lam'_a, S_a] ),
    Lam_a  = sum_b S_b o W_ab(dE),    Lam'_a = sum_b S_b o conj(W_ab(-dE)),

where ``o`` is the element-wise product and ``dE[i, j] = E_i - E_j``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import bath as bathmod
from .model import BathSpec, SystemSpec, build_system_hamiltonian, gibbs_state
from .polaron import EigenFrame, PolaronFrame, build_polaron_frame, diagonalize

log = logging.getLogger(__name__)

KINDS = ("pt-ccqme", "pt-redfield", "redfield", "ccqme")


def vec(rho):
    """Column-stacking vectorization."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, n=None):
    v = np.asarray(v)
    if n is None:
        n = int(round(np.sqrt(v.size)))
    return v.reshape((n, n), order="F")


def commutator_superop(h):
    """Matrix of ``X -> -i [H, X]``."""
    n = h.shape[0]
    eye = np.eye(n)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def basis_change(u):
    """``T`` with ``vec(U^dag X U) = T vec(X)``."""
    return np.kron(u.T, u.conj().T)


@dataclass(frozen=True)
class Superoperator:
    """Dense ``N^2 x N^2`` matrix acting on column-stacked density matrices."""

    matrix: np.ndarray
    kind: str
    frame: str

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def apply(self, rho):
        return unvec(self.matrix @ vec(rho), self.dim)

    def trace_leakage(self) -> float:
        """``max_B |Tr S[B]|`` over the matrix-unit basis."""
        t = vec(np.eye(self.dim))
        return float(np.max(np.abs(t @ self.matrix)))

    def hermiticity_error(self, samples) -> float:
        """``max ||S[X]^dag - S[X^dag]||`` over the given matrices."""
        return max(float(np.linalg.norm(self.apply(x).conj().T - self.apply(x.conj().T))) for x in samples)


@dataclass(frozen=True)
class DissipativeModel:
    """Everything needed to assemble generators in one frame.

    Attributes
    ----------
    frame : {"polaron", "original"}
    hamiltonian : ndarray
        ``H~_S`` (polaron) or ``H_S`` (original), site basis.
    operators : tuple of ndarray
        Channel operators ``S_a`` in the site basis.
    rates : tuple of tuple of RateFunction
        ``rates[a][b]`` is ``W_ab``.
    """

    frame: str
    system: SystemSpec
    bath: BathSpec
    hamiltonian: np.ndarray
    eig: EigenFrame
    operators: tuple
    rates: tuple
    polaron: PolaronFrame | None = None
    labels: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.system.dim

    @property
    def beta(self) -> float:
        return self.bath.beta

    def eig_operators(self):
        return [self.eig.to_eigenbasis(s) for s in self.operators]

    def to_site(self, m):
        """Convert an eigenbasis superoperator matrix to the site basis."""
        t = basis_change(self.eig.vectors)
        return t.conj().T @ m @ t

    def to_eig(self, m):
        t = basis_change(self.eig.vectors)
        return t @ m @ t.conj().T


def build_model(
    system: SystemSpec,
    bath: BathSpec,
    frame: str = "polaron",
    degeneracy_threshold: float = 1e-9,
    drop_anomalous: bool = False,
    rate_options: dict | None = None,
) -> DissipativeModel:
    """Set up channels and rate functions for the polaron or original frame.

    Parameters
    ----------
    drop_anomalous : bool
        Diagnostic switch zeroing the channel pairs whose correlation is of
        ``<V V>`` type (positive pair product). Never used by the generators
        proper.
    rate_options : dict, optional
        ``reach`` and ``step`` of the frequency grid for polaron rates.
    """
    rate_options = rate_options or {}
    if frame == "polaron":
        pf = build_polaron_frame(system, bath)
        eig = diagonalize(pf.tilde_hs, degeneracy_threshold)
        ops = tuple(ch.op for ch in pf.channels)
        kap = [pf.kappa[ch.m, ch.n] for ch in pf.channels]
        cache = {}
        table = []
        for a, ca in enumerate(pf.channels):
            row = []
            for b, cb in enumerate(pf.channels):
                p = ca.d * cb.d
                kk = kap[a] * kap[b]
                if drop_anomalous and p > 0:
                    row.append(bathmod.ZeroRate())
                    continue
                key = (p, kk)
                if key not in cache:
                    cache[key] = bathmod.PolaronRate(bath, p, kk, **rate_options)
                row.append(cache[key])
            table.append(tuple(row))
        labels = tuple((ch.m, ch.n) for ch in pf.channels)
        return DissipativeModel("polaron", system, bath, pf.tilde_hs, eig, ops, tuple(table), pf, labels)
    if frame == "original":
        h = build_system_hamiltonian(system)
        eig = diagonalize(h, degeneracy_threshold)
        op = np.diag(system.coupling).astype(complex)
        rate = bathmod.GaussianRate(bath)
        return DissipativeModel("original", system, bath, h, eig, (op,), ((rate,),), None, (("diag",),))
    raise ValueError(f"unknown frame {frame!r}")


def _rate_matrix(rate, gaps, part="full"):
    out = np.empty(gaps.shape, dtype=complex)
    for idx, lam in np.ndenumerate(gaps):
        w = rate.W(lam)
        out[idx] = w.real if part == "real" else w
    return out


def redfield_eigen(model: DissipativeModel, part: str = "full") -> np.ndarray:
    """Redfield tensor as a matrix in the eigenbasis.

    ``part="real"`` keeps only ``Re W`` (used for the detailed-balance check).
    """
    n = model.dim
    gaps = model.eig.gaps
    s = model.eig_operators()
    eye = np.eye(n)
    r = np.zeros((n * n, n * n), dtype=complex)
    for a, sa in enumerate(s):
        lam = np.zeros((n, n), dtype=complex)
        lam_p = np.zeros((n, n), dtype=complex)
        for b, sb in enumerate(s):
            rate = model.rates[a][b]
            if rate.is_zero:
                continue
            wm = _rate_matrix(rate, gaps, part)
            lam += sb * wm
            lam_p += sb * np.conj(wm.T)
        r += np.kron(sa.T, lam) - np.kron(eye, sa @ lam) - np.kron((lam_p @ sa).T, eye) + np.kron(lam_p.T, sa)
    return r


def redfield_tensor(model: DissipativeModel) -> Superoperator:
    """Markovian Redfield dissipator (site basis)."""
    return Superoperator(model.to_site(redfield_eigen(model)), "redfield-dissipator", model.frame)


@dataclass(frozen=True)
class QTensor:
    """Mean-force correction ``Q = P (1/i Delta) R + L P^c``.

    ``gamma`` and ``gamma_prime`` are the generalized rates (off-diagonal
    entries); ``diagonal_rate[i]`` is the finite combination multiplying
    ``rho_ii`` that replaces the individually divergent ``i = j`` terms.
    All matrices here are in the eigenbasis except ``q``.
    """

    q: Superoperator
    coherent: np.ndarray
    lindblad: np.ndarray
    gamma: np.ndarray
    gamma_prime: np.ndarray
    diagonal_rate: np.ndarray


def q_mfg_tensor(model: DissipativeModel, r_eig: np.ndarray | None = None) -> QTensor:
    """Second-order mean-force Gibbs correction superoperator."""
    n = model.dim
    beta = model.beta
    gaps = model.eig.gaps
    s = model.eig_operators()
    if r_eig is None:
        r_eig = redfield_eigen(model)
    off = ~np.eye(n, dtype=bool)
    inv = np.zeros((n, n), dtype=complex)
    inv[off] = 1.0 / (1j * gaps[off])
    coherent = vec(inv)[:, None] * r_eig

    gamma = np.zeros((n, n), dtype=complex)
    gamma_p = np.zeros((n, n), dtype=complex)
    diag = np.zeros(n, dtype=complex)
    for a, sa in enumerate(s):
        for b, sb in enumerate(s):
            rate = model.rates[a][b]
            if rate.is_zero:
                continue
            w0 = rate.W(0.0).imag
            diag += -beta * np.diag(sa) * np.diag(sb) * w0
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    lam = gaps[i, j]
                    dw = rate.dW(lam).imag
                    # rates[a][b] is symmetric in (a, b), so W_ba = W_ab
                    gamma[i, j] += sa[i, j] * sb[j, i] * dw
                    gamma_p[i, j] += sb[i, j] * sa[j, i] * (dw + beta * rate.W(lam).imag)
    lind = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        ii = i + n * i
        for j in range(n):
            if i != j:
                lind[ii, j + n * j] += gamma[i, j]
        lind[ii, ii] += diag[i] - sum(gamma_p[j, i] for j in range(n) if j != i)
    q_eig = coherent + lind
    q = Superoperator(model.to_site(q_eig), "q-mfg", model.frame)
    return QTensor(q, coherent, lind, gamma, gamma_p, diag)


def liouvillian(kind: str, model: DissipativeModel | None = None, system=None, bath=None, q_zero=False):
    """Assemble ``L = -i[H, .] + R (I - Q)`` as a :class:`Superoperator`.

    Parameters
    ----------
    kind : {"pt-ccqme", "pt-redfield", "redfield", "ccqme"}
    model : DissipativeModel, optional
        Pre-built model of the matching frame; otherwise built from
        ``system`` and ``bath``.
    q_zero : bool
        Force ``Q = 0`` (turns a CCQME kind into its Redfield counterpart).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown generator kind {kind!r}; expected one of {KINDS}")
    frame = "polaron" if kind.startswith("pt-") else "original"
    if model is None:
        model = build_model(system, bath, frame)
    elif model.frame != frame:
        raise ValueError(f"{kind} needs a {frame}-frame model, got {model.frame}")
    n = model.dim
    hd = np.diag(model.eig.energies).astype(complex)
    r = redfield_eigen(model)
    if kind in ("pt-ccqme", "ccqme") and not q_zero:
        q = q_mfg_tensor(model, r)
        q_eig = q.coherent + q.lindblad
        diss = r @ (np.eye(n * n) - q_eig)
    else:
        diss = r
    l_eig = commutator_superop(hd) + diss
    return Superoperator(model.to_site(l_eig), kind, frame)


def generator_set(model: DissipativeModel, kinds=None):
    """All requested Liouvillians of one frame sharing one Redfield build."""
    out = {}
    for kind in kinds or [k for k in KINDS if (k.startswith("pt-")) == (model.frame == "polaron")]:
        out[kind] = liouvillian(kind, model)
    return out


def detailed_balance_residual(model: DissipativeModel, gibbs=None, relative=True) -> float:
    """Population-block norm of ``R_real[gibbs]`` (eigenbasis).

    ``R_real`` keeps only ``Re W``. With ``relative=True`` the value is
    divided by ``||R|| ||gibbs||``.
    """
    if gibbs is None:
        gibbs = gibbs_state(model.hamiltonian, model.beta)
    r_real = redfield_eigen(model, part="real")
    g_eig = model.eig.to_eigenbasis(gibbs)
    out = unvec(r_real @ vec(g_eig), model.dim)
    res = float(np.linalg.norm(np.diag(out)))
    if relative:
        scale = np.linalg.norm(redfield_eigen(model)) * np.linalg.norm(gibbs)
        return res / scale if scale > 0 else res
    return res


# ----------------------------------------------------------------------------
# Spin-boson closed-form tensors (independent implementation)
# ----------------------------------------------------------------------------


def _spin_boson_pieces(model: DissipativeModel):
    if model.frame != "polaron" or model.dim != 2:
        raise ValueError("closed spin-boson tensors need a two-level polaron-frame model")
    h = model.system.hopping[0, 1]
    u = model.eig.vectors
    sig = {
        "+": u.conj().T @ (h * np.array([[0, 1], [0, 0]], dtype=complex)) @ u,
        "-": u.conj().T @ (np.conj(h) * np.array([[0, 0], [1, 0]], dtype=complex)) @ u,
    }
    d = model.system.coupling[0] - model.system.coupling[1]
    k = model.polaron.kappa[0, 1]
    w_minus = bathmod.PolaronRate(model.bath, -d * d, k * k)
    w_plus = bathmod.PolaronRate(model.bath, d * d, k * k)
    return sig, w_minus, w_plus


def spin_boson_redfield_closed(model: DissipativeModel) -> np.ndarray:
    """Explicit eigenbasis index formula ``R^{ij}_{nm}`` for the spin-boson model.

    Returns the 4-index array ``R[n, m, i, j]``.
    """
    sig, wm, wp = _spin_boson_pieces(model)
    e = model.eig.energies
    de = lambda a, b: e[a] - e[b]  # noqa: E731
    pairs = [("+", "-", wm), ("-", "+", wm), ("+", "+", wp), ("-", "-", wp)]
    r = np.zeros((2, 2, 2, 2), dtype=complex)
    for n in range(2):
        for m in range(2):
            for i in range(2):
                for j in range(2):
                    acc = 0j
                    for x, y, w in pairs:
                        sx, sy = sig[x], sig[y]
                        acc += sx[n, i] * sy[j, m] * (w.W(de(n, i)) + np.conj(w.W(de(m, j))))
                        if m == j:
                            acc -= sum(sx[n, l] * sy[l, i] * w.W(de(l, i)) for l in range(2))
                        if n == i:
                            acc -= sum(sx[j, l] * sy[l, m] * np.conj(w.W(de(l, j))) for l in range(2))
                    r[n, m, i, j] = acc
    return r


def spin_boson_q_closed(model: DissipativeModel) -> np.ndarray:
    """Compact ``Q^{kl}_{ij}`` with A/B coefficients; returns ``Q[i, j, k, l]``.

    The ``i = k`` combination ``A_ii - B_ii`` is evaluated in its finite
    form ``-beta sigma^x_ii sigma^y_ii Im W(0)``.
    """
    sig, wm, wp = _spin_boson_pieces(model)
    beta = model.beta
    e = model.eig.energies
    r = spin_boson_redfield_closed(model)
    pairs = [("+", "-", wm), ("-", "+", wm), ("+", "+", wp), ("-", "-", wp)]

    def a_coef(x, y, w, i, k):
        return sig[x][i, k] * sig[y][k, i] * w.dW(e[i] - e[k]).imag

    def b_coef(x, y, w, i, k):
        lam = e[i] - e[k]
        return sig[y][k, i] * sig[x][i, k] * (w.dW(lam).imag + beta * w.W(lam).imag)

    q = np.zeros((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    if i != j:
                        q[i, j, k, l] = r[i, j, k, l] / (1j * (e[i] - e[j]))
                        continue
                    if k != l:
                        continue
                    acc = 0j
                    for x, y, w in pairs:
                        if k != i:
                            acc += a_coef(x, y, w, i, k)
                        else:
                            acc += -beta * sig[x][i, i] * sig[y][i, i] * w.W(0.0).imag
                            # B^{yx}_{ri} = sigma^x_ir sigma^y_ri (...)(dE_ri), r != i
                            acc -= sum(b_coef(y, x, w, r_, i) for r_ in range(2) if r_ != i)
                    q[i, j, k, l] = acc
    return q


def four_index_to_matrix(t):
    """``T[n, m, i, j]`` (``d rho_nm = T rho_ij``) to a column-stacked matrix."""
    n = t.shape[0]
    m = np.zeros((n * n, n * n), dtype=complex)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    m[a + n * b, c + n * d] = t[a, b, c, d]
    return m
