"""Bath-derived scalars and functions.

Conventions
-----------
For a channel pair with coupling-difference product ``p = d d'`` the exponent
is ``eps(tau) = (p / pi) I(tau)`` with

    I(tau) = int_0^inf dw J(w)/w^2 [coth(beta w / 2) cos(w tau) - i sin(w tau)],

and the correlation function is ``C(tau) = kk' (exp(-eps(tau)) - 1)`` where
``kk'`` is the product of the two renormalization factors. Its half-sided
Fourier transform is ``W(lam) = int_0^inf C(tau) exp(-i lam tau) dtau``.

``W`` is evaluated through its spectral representation. The real part
``Phi(lam) = Re W(lam)`` is a multi-phonon series

    Phi = pi kk' sum_{k>=1} sigma^k a^{*k} / k!,   sigma = -sign(p),
    a(w) = (|p| / pi) J_odd(w) n(w) / w^2,

summed by direct convolution on a symmetric frequency grid (so detailed
balance holds to rounding), and the imaginary part is its Hilbert transform.
A direct time-domain quadrature of ``W`` and ``dW/dlam`` is kept as an
independent reference (:func:`half_fourier_quadrature`).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import AccuracyError, DivergentIntegralError
from .model import BathSpec, SuperOhmic, Tabulated

log = logging.getLogger(__name__)

# Bernoulli numbers B_2k for the asymptotic trigamma series.
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def trigamma(z):
    """Trigamma function ``psi_1(z) = sum_{n>=0} (z + n)^-2``.

    Accepts real or complex scalars and arrays. The argument is shifted up by
    the recurrence ``psi_1(z) = psi_1(z + 1) + 1/z^2`` until ``|z| >= 20`` and
    the asymptotic Bernoulli series is used there.

    Raises
    ------
    ValueError
        If any argument has a non-positive real part.
    """
    is_complex = np.iscomplexobj(z)
    zz = np.array(z, dtype=complex, ndmin=1)
    if np.any(zz.real <= 0):
        raise ValueError("trigamma is only implemented for Re z > 0")
    acc = np.zeros_like(zz)
    small = np.abs(zz) < 20.0
    while small.any():
        acc[small] += 1.0 / zz[small] ** 2
        zz[small] += 1.0
        small = np.abs(zz) < 20.0
    inv = 1.0 / zz
    inv2 = inv * inv
    series = inv + 0.5 * inv2
    power = inv * inv2
    for b in _BERNOULLI:
        series += b * power
        power = power * inv2
    out = acc + series
    if not is_complex:
        out = out.real
    if np.ndim(z) == 0:
        return out[0]
    return out.reshape(np.shape(z))


def _bose_weight(x):
    """``B(x) = x / (exp(x) - 1)`` with ``B(0) = 1``, stable for all real x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-6
    xs = x[small]
    out[small] = 1.0 - 0.5 * xs + xs * xs / 12.0
    pos = (~small) & (x > 0)
    xp = x[pos]
    out[pos] = xp * np.exp(-xp) / (-np.expm1(-xp))
    neg = (~small) & (x < 0)
    out[neg] = x[neg] / np.expm1(x[neg])
    return out


def _bose_weight_derivative(x):
    """``dB/dx``."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = -0.5 + xs / 6.0 - xs**3 / 180.0
    pos = (~small) & (x > 0)
    xp = x[pos]
    q = np.exp(-xp)
    one_minus_q = -np.expm1(-xp)
    out[pos] = q / one_minus_q - xp * q / one_minus_q**2
    neg = (~small) & (x < 0)
    xn = x[neg]
    em = np.expm1(xn)
    out[neg] = 1.0 / em - xn * np.exp(xn) / em**2
    return out


def density_key(density):
    """Hashable identity of a spectral density (used for memoization)."""
    if isinstance(density, SuperOhmic):
        return ("super_ohmic", float(density.gamma), float(density.omega_c))
    return ("tabulated", density.omega.tobytes(), density.values.tobytes(), float(density.exponent))


# ----------------------------------------------------------------------------
# Frequency integrals
# ----------------------------------------------------------------------------


def _frequency_integral(density, integrand):
    """``int_0^inf integrand(w) dw`` for integrands weighted by ``J``.

    Semi-infinite densities use the map ``w = w_c x / (1 - x)``; tabulated
    densities are integrated node interval by node interval.
    """
    if isinstance(density, SuperOhmic):
        wc = density.omega_c

        def mapped(x):
            w = wc * x / (1.0 - x)
            return float(integrand(np.array([w]))[0]) * wc / (1.0 - x) ** 2

        val, err = integrate.quad(mapped, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=400)
    else:
        nodes = np.concatenate(([0.0], density.omega))
        x, wts = np.polynomial.legendre.leggauss(24)
        lo, hi = nodes[:-1, None], nodes[1:, None]
        pts = 0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)
        vals = integrand(pts.ravel()).reshape(pts.shape)
        val = float(np.sum(0.5 * (hi - lo) * wts[None, :] * vals))
        err = 0.0
    if not (math.isfinite(val) and math.isfinite(err)):
        raise DivergentIntegralError("bath frequency integral does not converge")
    return val


def coth_moment(bath: BathSpec) -> float:
    """``int_0^inf J(w)/w^2 coth(beta w / 2) dw`` by quadrature."""
    d = bath.density
    beta = bath.beta

    def f(w):
        # J/w^2 coth(bw/2) = (J/w^3) * w coth(bw/2), the second factor is smooth.
        bw = beta * w
        return d.reduced(w) * (2.0 * _bose_weight(bw) / beta + w)

    return _frequency_integral(d, f)


def coth_moment_closed(bath: BathSpec) -> float:
    """Closed trigamma form of :func:`coth_moment` for the super-Ohmic density."""
    d = bath.density
    if not isinstance(d, SuperOhmic):
        raise TypeError("closed form exists only for the super-Ohmic density")
    z = 1.0 / (bath.beta * d.omega_c)
    return d.gamma / bath.beta**2 * (2.0 * trigamma(z) - 1.0 / z**2)


def inverse_moment(density) -> float:
    """``int_0^inf J(w)/w dw`` by quadrature."""
    return _frequency_integral(density, lambda w: density.reduced(w) * w * w)


def kappa_pair(d: float, bath: BathSpec, method: str = "quadrature") -> float:
    """Renormalization ``exp[-(d^2 / 2 pi) int J/w^2 coth(beta w/2) dw]``.

    Parameters
    ----------
    d : float
        Coupling difference ``c_m - c_n``.
    method : {"quadrature", "closed"}
        Quadrature of the defining integral (authoritative) or the trigamma
        closed form (super-Ohmic only).
    """
    if d == 0.0 or bath.density.is_zero:
        return 1.0
    moment = coth_moment(bath) if method == "quadrature" else coth_moment_closed(bath)
    return math.exp(-(d * d) / (2.0 * math.pi) * moment)


def xi_shift(c: float, density, method: str = "quadrature") -> float:
    """Polaron energy shift ``-(c^2 / pi) int J/w dw``."""
    if c == 0.0 or density.is_zero:
        return 0.0
    if method == "closed":
        if not isinstance(density, SuperOhmic):
            raise TypeError("closed form exists only for the super-Ohmic density")
        return -2.0 * density.gamma / math.pi * density.omega_c**3 * c * c
    return -(c * c) / math.pi * inverse_moment(density)


# ----------------------------------------------------------------------------
# Exponent and correlation function
# ----------------------------------------------------------------------------


def exponent_integral(tau, bath: BathSpec, method: str = "auto"):
    """``I(tau)`` for real ``tau`` (complex result).

    ``method="closed"`` (super-Ohmic only) uses the trigamma form
    ``(gamma/beta^2)[psi_1((1 + i w_c tau)/(beta w_c)) + psi_1(1 + (1 - i w_c tau)/(beta w_c))]``;
    ``"quadrature"`` integrates the definition; ``"auto"`` picks the closed
    form when available.
    """
    d = bath.density
    tau_arr = np.asarray(tau, dtype=float)
    if d.is_zero:
        return np.zeros(tau_arr.shape, dtype=complex)[()]
    if method == "auto":
        method = "closed" if isinstance(d, SuperOhmic) else "quadrature"
    if method == "closed":
        if not isinstance(d, SuperOhmic):
            raise TypeError("closed form exists only for the super-Ohmic density")
        b, wc = bath.beta, d.omega_c
        z1 = (1.0 + 1j * wc * tau_arr) / (b * wc)
        z2 = 1.0 + (1.0 - 1j * wc * tau_arr) / (b * wc)
        return (d.gamma / b**2 * (trigamma(z1) + trigamma(z2)))[()]
    flat = np.atleast_1d(tau_arr).ravel()
    out = np.array([_exponent_integral_quad(float(t), bath) for t in flat])
    return out.reshape(tau_arr.shape)[()]


def _frequency_cutoff(density):
    if isinstance(density, SuperOhmic):
        return 60.0 * density.omega_c
    return density.omega_max


def _exponent_integral_quad(tau, bath):
    d, beta = bath.density, bath.beta
    wmax = _frequency_cutoff(d)
    pts = None if isinstance(d, SuperOhmic) else list(d.omega[:: max(1, d.omega.size // 40)])

    def re_f(w):
        return float(d.reduced(np.array([w]))[0] * (2.0 * _bose_weight(np.array([beta * w]))[0] / beta + w))

    def im_f(w):
        return float(d.reduced(np.array([w]))[0] * w)

    kw = dict(epsabs=1e-14, epsrel=1e-12, limit=500)
    if tau == 0.0:
        re = integrate.quad(re_f, 0.0, wmax, points=pts, **kw)[0]
        return complex(re, 0.0)
    # J/w^2 sin(w tau) = (J/w^3) w sin(w tau); QAWO handles the oscillation.
    re = integrate.quad(re_f, 0.0, wmax, weight="cos", wvar=tau, **kw)[0]
    im = integrate.quad(im_f, 0.0, wmax, weight="sin", wvar=tau, **kw)[0]
    return complex(re, -im)


def exponent_integral_imaginary(u, bath: BathSpec, method: str = "auto"):
    """Continuation ``I(-i u)`` for ``0 <= u <= beta`` (real result).

    Evaluates ``int J/w^2 [coth(beta w/2) cosh(w u) - sinh(w u)] dw``, written
    as ``int J/w^2 cosh(w (beta/2 - u)) / sinh(beta w / 2) dw`` to stay stable.
    """
    beta = bath.beta
    d = bath.density
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0) or np.any(u_arr > beta * (1 + 1e-14)):
        raise ValueError(f"imaginary time u must lie in [0, beta={beta}]")
    u_arr = np.clip(u_arr, 0.0, beta)
    if d.is_zero:
        return np.zeros(u_arr.shape)[()]
    if method == "auto":
        method = "closed" if isinstance(d, SuperOhmic) else "quadrature"
    if method == "closed":
        wc = d.omega_c
        z1 = (1.0 + wc * u_arr) / (beta * wc)
        z2 = 1.0 + (1.0 - wc * u_arr) / (beta * wc)
        return (d.gamma / beta**2 * (trigamma(z1) + trigamma(z2)))[()]
    wmax = _frequency_cutoff(d)

    def one(uu):
        def f(w):
            w = np.array([w])
            # J/w^2 cosh(w(b/2-u))/sinh(bw/2) = (J/w^3) [e^{-wu} + e^{-w(b-u)}] w / (1 - e^{-bw})
            num = np.exp(-w * uu) + np.exp(-w * (beta - uu))
            return float(d.reduced(w)[0] * num[0] * _bose_weight(-beta * w)[0] / beta)

        return integrate.quad(f, 0.0, wmax, epsabs=1e-14, epsrel=1e-12, limit=500)[0]

    flat = np.atleast_1d(u_arr).ravel()
    return np.array([one(float(x)) for x in flat]).reshape(u_arr.shape)[()]


def epsilon_exponent(p: float, tau, bath: BathSpec, method: str = "auto"):
    """``eps(tau) = (p / pi) I(tau)`` for pair product ``p = d d'``."""
    if p == 0.0:
        return np.zeros(np.shape(tau), dtype=complex)[()]
    return p / math.pi * exponent_integral(tau, bath, method)


def correlation(p: float, kk: float, tau, bath: BathSpec, method: str = "auto"):
    """``C(tau) = kk (exp(-eps(tau)) - 1)``.

    Negative ``tau`` is handled through ``C(-tau) = C(tau)^*``.
    """
    tau = np.asarray(tau, dtype=float)
    if p == 0.0 or bath.density.is_zero:
        return np.zeros(tau.shape, dtype=complex)[()]
    eps = epsilon_exponent(p, np.abs(tau), bath, method)
    c = kk * np.expm1(-eps)
    return np.where(tau < 0, np.conj(c), c)[()]


def correlation_imaginary(p: float, kk: float, u, bath: BathSpec, method: str = "auto"):
    """``C(-i u) = kk (exp(-(p/pi) I(-i u)) - 1)`` for ``0 <= u <= beta``."""
    u = np.asarray(u, dtype=float)
    if p == 0.0 or bath.density.is_zero:
        return np.zeros(u.shape)[()]
    return (kk * np.expm1(-p / math.pi * exponent_integral_imaginary(u, bath, method)))[()]


# ----------------------------------------------------------------------------
# Spectral rate functions
# ----------------------------------------------------------------------------


def _hilbert_panels(lam, reach, width):
    """Gauss-Legendre nodes on ``(0, reach]`` with a breakpoint at ``|lam|``."""
    edges = [0.0]
    stops = sorted({abs(lam), reach}) if lam != 0.0 else [reach]
    for stop in stops:
        start = edges[-1]
        if stop <= start:
            continue
        n = max(1, int(math.ceil((stop - start) / width)))
        edges.extend(np.linspace(start, stop, n + 1)[1:])
    edges = np.asarray(edges)
    x, w = _LEG
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * w).ravel()
    return nodes, weights


_LEG = np.polynomial.legendre.leggauss(20)


class RateFunction:
    """Half-sided Fourier transform ``W`` of one correlation function.

    Subclasses provide the real part ``Phi(w)`` and its derivative; the
    imaginary part follows by the Hilbert transform

        Im W(lam) = (1/pi) PV int Phi(w) / (w - lam) dw
                  = (1/pi) int_0^inf [Phi(lam + x) - Phi(lam - x)] / x dx.

    Values are memoized per ``lam``.
    """

    beta: float
    reach: float
    panel: float

    def __init__(self):
        self._w_cache = {}
        self._dw_cache = {}

    def phi(self, w):  # pragma: no cover - abstract
        raise NotImplementedError

    def dphi(self, w):  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def is_zero(self):
        return False

    def _hilbert(self, f, lam):
        x, w = _hilbert_panels(lam, self.reach + abs(lam), self.panel)
        return float(np.dot(w, (f(lam + x) - f(lam - x)) / x)) / math.pi

    def W(self, lam) -> complex:
        """``W(lam)``."""
        lam = float(lam)
        if self.is_zero:
            return 0j
        val = self._w_cache.get(lam)
        if val is None:
            val = complex(float(self.phi(np.array([lam]))[0]), self._hilbert(self.phi, lam))
            self._w_cache[lam] = val
        return val

    def dW(self, lam) -> complex:
        """``dW/dlam``; diverges at ``lam = 0`` for super-Ohmic baths."""
        lam = float(lam)
        if self.is_zero:
            return 0j
        if lam == 0.0:
            raise AccuracyError("dW/dlam is singular at lam = 0; use the regularized diagonal form")
        val = self._dw_cache.get(lam)
        if val is None:
            val = complex(float(self.dphi(np.array([lam]))[0]), self._hilbert(self.dphi, lam))
            self._dw_cache[lam] = val
        return val

    def W_many(self, lams):
        return np.array([self.W(x) for x in np.ravel(lams)]).reshape(np.shape(lams))


class ZeroRate(RateFunction):
    """Rate function of a vanishing correlation function."""

    beta = 1.0
    reach = 1.0
    panel = 1.0

    @property
    def is_zero(self):
        return True

    def phi(self, w):
        return np.zeros(np.shape(w))

    dphi = phi


def _grid_params(density, beta, reach=None, step=None):
    scale = density.omega_scale
    if reach is None:
        reach = 40.0 * scale if isinstance(density, SuperOhmic) else 2.0 * density.omega_max
    if step is None:
        step = min(0.02 * scale, 0.1 / beta)
    n = int(math.ceil(reach / step))
    return n * step, step, n


def _one_phonon(density, beta, w):
    """``J_odd(w) n(w) / w^2`` (finite and continuous at ``w = 0``)."""
    return density.reduced(np.abs(w)) * _bose_weight(beta * w) / beta


def _one_phonon_derivative(density, beta, w):
    """Derivative of :func:`_one_phonon`; mean of one-sided limits at 0."""
    aw = np.abs(w)
    return np.sign(w) * density.reduced_derivative(aw) * _bose_weight(beta * w) / beta + density.reduced(
        aw
    ) * _bose_weight_derivative(beta * w)


@dataclass(frozen=True)
class PhononSeries:
    """Multi-phonon sums of ``a(w) = scale * J_odd n / w^2`` on a grid.

    ``even`` and ``odd`` hold ``sum_{k even/odd, k>=2} a^{*k}/k!`` and the
    ``*_deriv`` arrays their frequency derivatives, so that for either sign
    ``sigma`` the multi-phonon part is ``even + sigma * odd``.
    """

    grid: np.ndarray
    even: np.ndarray
    odd: np.ndarray
    even_deriv: np.ndarray
    odd_deriv: np.ndarray
    terms: int


def _series_on_grid(density, beta, scale, n, h, max_terms=400):
    w = np.arange(-n, n + 1) * h
    a = scale * _one_phonon(density, beta, w)
    da = scale * _one_phonon_derivative(density, beta, w)
    # U_sigma = sum_{m>=1} sigma^m a^{*m}/(m+1)!  so that  R = sigma a * U, R' = sigma a' * U
    term = a.copy()  # a^{*m}/m!
    even = np.zeros_like(w)
    odd = np.zeros_like(w)
    u_even = np.zeros_like(w)
    u_odd = 0.5 * a
    window = np.abs(w) <= 0.5 * n * h
    k = 1
    while True:
        k += 1
        term = np.convolve(term, a, mode="same") * (h / k)
        if k % 2 == 0:
            even += term
            u_even += term / (k + 1)
        else:
            odd += term
            u_odd += term / (k + 1)
        total = np.abs(even) + np.abs(odd)
        if np.all(np.abs(term[window]) <= 1e-17 * total[window] + 1e-300):
            break
        if k >= max_terms:
            raise AccuracyError(f"multi-phonon series did not converge in {max_terms} terms")
    # R'_sigma = sigma a' * U_sigma = sigma a' * (u_odd sigma + u_even)
    #          = a' * u_odd + sigma a' * u_even
    even_d = np.convolve(da, u_odd, mode="same") * h
    odd_d = np.convolve(da, u_even, mode="same") * h
    return w, even, odd, even_d, odd_d, k


_SERIES_CACHE: dict = {}


def _phonon_series(density, beta, abs_p, reach, step):
    _, h, n = _grid_params(density, beta, reach, step)
    scale = abs_p / math.pi
    coarse = _series_on_grid(density, beta, scale, n, h)
    fine = _series_on_grid(density, beta, scale, 2 * n, 0.5 * h)
    rich = [(4.0 * f[::2] - c) / 3.0 for c, f in zip(coarse[1:5], fine[1:5])]
    log.debug("phonon series |p|=%g beta=%g: %d terms (coarse), %d (fine)", abs_p, beta, coarse[5], fine[5])
    return PhononSeries(coarse[0], *rich, terms=max(coarse[5], fine[5]))


def phonon_series(bath: BathSpec, abs_p: float, reach=None, step=None) -> PhononSeries:
    """Memoized multi-phonon series for one ``|p|`` (shared by both signs)."""
    key = (density_key(bath.density), bath.beta, float(abs_p), reach, step)
    if key not in _SERIES_CACHE:
        if len(_SERIES_CACHE) >= 32:
            _SERIES_CACHE.pop(next(iter(_SERIES_CACHE)))
        _SERIES_CACHE[key] = _phonon_series(bath.density, bath.beta, float(abs_p), reach, step)
    return _SERIES_CACHE[key]


class _GridFunction:
    """Interpolant of a function given on a grid, positive-log when possible."""

    def __init__(self, grid, values, derivs, beta):
        self.beta = beta
        tiny = 1e-280
        keep = np.abs(values) > tiny
        idx = np.flatnonzero(keep)
        if idx.size < 4:
            self.lo = self.hi = 0.0
            self.kind = "zero"
            return
        sl = slice(idx[0], idx[-1] + 1)
        g, v, dv = grid[sl], values[sl], derivs[sl]
        self.lo, self.hi = float(g[0]), float(g[-1])
        if np.all(v > 0) or np.all(v < 0):
            self.kind = "log"
            self.sign = float(np.sign(v[0]))
            self.log_spline = CubicSpline(g, np.log(np.abs(v)))
            self.ratio_spline = CubicSpline(g, dv / v)
        else:
            # Symmetrized form R exp(beta w / 2) is even under exact detailed balance.
            self.kind = "linear"
            tilt = np.exp(0.5 * beta * g)
            self.val_spline = CubicSpline(g, v * tilt)
            self.der_spline = CubicSpline(g, dv * tilt)

    def _inside(self, w):
        return (w >= self.lo) & (w <= self.hi)

    def value(self, w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        if self.kind == "zero":
            return out
        m = self._inside(w)
        if self.kind == "log":
            out[m] = self.sign * np.exp(self.log_spline(w[m]))
        else:
            out[m] = self.val_spline(w[m]) * np.exp(-0.5 * self.beta * w[m])
        return out

    def derivative(self, w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        if self.kind == "zero":
            return out
        m = self._inside(w)
        if self.kind == "log":
            out[m] = self.sign * np.exp(self.log_spline(w[m])) * self.ratio_spline(w[m])
        else:
            out[m] = self.der_spline(w[m]) * np.exp(-0.5 * self.beta * w[m])
        return out


class PolaronRate(RateFunction):
    """``W`` for a polaron-frame channel pair with product ``p`` and prefactor ``kk``."""

    def __init__(self, bath: BathSpec, p: float, kk: float, reach=None, step=None):
        super().__init__()
        self.bath = bath
        self.beta = bath.beta
        self.p = float(p)
        self.kk = float(kk)
        self._zero = p == 0.0 or kk == 0.0 or bath.density.is_zero
        if self._zero:
            self.reach, self.panel = 1.0, 1.0
            return
        density = bath.density
        self.sigma = -math.copysign(1.0, p)
        self.scale = abs(p) / math.pi
        series = phonon_series(bath, abs(p), reach, step)
        multi = series.even + self.sigma * series.odd
        multi_d = series.even_deriv + self.sigma * series.odd_deriv
        self._multi = _GridFunction(series.grid, multi, multi_d, self.beta)
        self.reach = float(series.grid[-1])
        self.panel = 0.25 * min(density.omega_scale, 1.0 / self.beta)
        self.terms = series.terms

    @property
    def is_zero(self):
        return self._zero

    def phi(self, w):
        w = np.asarray(w, dtype=float)
        one = self.sigma * self.scale * _one_phonon(self.bath.density, self.beta, w)
        return math.pi * self.kk * (one + self._multi.value(w))

    def dphi(self, w):
        w = np.asarray(w, dtype=float)
        one = self.sigma * self.scale * _one_phonon_derivative(self.bath.density, self.beta, w)
        return math.pi * self.kk * (one + self._multi.derivative(w))


class GaussianRate(RateFunction):
    """``W`` for the original-frame (free boson) correlation function.

    ``Re W(lam) = J_odd(lam) n(lam)``, i.e. ``J(lam) n(lam)`` for ``lam > 0``
    and ``J(|lam|) (n(|lam|) + 1)`` for ``lam < 0``.
    """

    def __init__(self, bath: BathSpec, reach=None):
        super().__init__()
        self.bath = bath
        self.beta = bath.beta
        density = bath.density
        if reach is None:
            reach = 60.0 * density.omega_scale if isinstance(density, SuperOhmic) else density.omega_max
        self.reach = float(reach)
        self.panel = 0.25 * min(density.omega_scale, 1.0 / self.beta)

    @property
    def is_zero(self):
        return self.bath.density.is_zero

    def phi(self, w):
        w = np.asarray(w, dtype=float)
        return w * w * _one_phonon(self.bath.density, self.beta, w)

    def dphi(self, w):
        w = np.asarray(w, dtype=float)
        d = self.bath.density
        return 2.0 * w * _one_phonon(d, self.beta, w) + w * w * _one_phonon_derivative(d, self.beta, w)


def gaussian_correlation(tau, bath: BathSpec):
    """Original-frame ``C(tau) = (1/pi) int J [coth(beta w/2) cos w tau - i sin w tau] dw``."""
    d, beta = bath.density, bath.beta
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if d.is_zero:
        return np.zeros(np.shape(tau), dtype=complex)[()]
    wmax = _frequency_cutoff(d)
    out = []
    for t in tau_arr:
        def re_f(w):
            w = np.array([w])
            return float(d.reduced(w)[0] * w[0] ** 2 * (2.0 * _bose_weight(beta * w)[0] / beta + w[0]))

        def im_f(w):
            return float(d(np.array([w]))[0])

        kw = dict(epsabs=1e-14, epsrel=1e-12, limit=500)
        if t == 0.0:
            out.append(complex(integrate.quad(re_f, 0, wmax, **kw)[0], 0.0) / math.pi)
            continue
        with warnings.catch_warnings():
            # at large tau the integrals sit at the absolute floor where QAWO reports roundoff
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            re = integrate.quad(re_f, 0, wmax, weight="cos", wvar=abs(t), **kw)[0]
            im = integrate.quad(im_f, 0, wmax, weight="sin", wvar=abs(t), **kw)[0]
        c = complex(re, -im) / math.pi
        out.append(c if t >= 0 else c.conjugate())
    return np.array(out).reshape(np.shape(tau))[()]


# ----------------------------------------------------------------------------
# Reference routes and identities
# ----------------------------------------------------------------------------


def half_fourier_quadrature(corr, lam, t_max=40.0, derivative=False, tail_tol=1e-8):
    """Direct time-domain ``int_0^inf C(tau) exp(-i lam tau) dtau``.

    Adaptive oscillatory quadrature on ``[0, t_max]`` plus a Fourier-integral
    tail. With ``derivative=True`` the integrand carries an extra ``-i tau``.

    Parameters
    ----------
    corr : callable
        Scalar ``tau -> C(tau)``.
    """
    lam = float(lam)

    def g(t):
        c = complex(corr(t))
        return c * (-1j * t) if derivative else c

    kw = dict(epsabs=1e-13, epsrel=1e-11, limit=2000)

    def part(fun, weight):
        if lam == 0.0:
            if weight == "sin":
                return 0.0
            head = integrate.quad(fun, 0.0, t_max, **kw)[0]
            tail = integrate.quad(fun, t_max, np.inf, epsabs=1e-13, epsrel=1e-10, limit=2000)[0]
            return head + tail
        head = integrate.quad(fun, 0.0, t_max, weight=weight, wvar=abs(lam), **kw)[0]
        tail = integrate.quad(fun, t_max, np.inf, weight=weight, wvar=abs(lam), limlst=200, limit=2000, epsabs=1e-13)[0]
        return head + tail

    rc = part(lambda t: g(t).real, "cos")
    rs = part(lambda t: g(t).real, "sin")
    ic = part(lambda t: g(t).imag, "cos")
    is_ = part(lambda t: g(t).imag, "sin")
    s = math.copysign(1.0, lam) if lam != 0.0 else 0.0
    # exp(-i lam t) = cos(|lam| t) - i s sin(|lam| t)
    re = rc + s * is_
    im = ic - s * rs
    tail_size = abs(complex(g(t_max))) * t_max
    if not derivative and tail_size > tail_tol and abs(complex(g(2 * t_max))) * 2 * t_max > tail_size:
        raise AccuracyError("correlation function does not decay at the cutoff", achieved=tail_size)
    return complex(re, im)


def imag_time_integral(p: float, kk: float, lam: float, bath: BathSpec, method: str = "auto") -> float:
    """``-int_0^beta C(-i u) exp(-lam u) du`` (left side of the imaginary-time relation)."""
    if p == 0.0 or bath.density.is_zero:
        return 0.0
    beta = bath.beta
    x, w = np.polynomial.legendre.leggauss(64)
    edges = np.linspace(0.0, beta, 17)
    lo, hi = edges[:-1, None], edges[1:, None]
    u = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    wt = (0.5 * (hi - lo) * w).ravel()
    c = correlation_imaginary(p, kk, u, bath, method)
    return float(-np.dot(wt, c * np.exp(-lam * u)))


def detailed_balance_error(rate: RateFunction, lam: float) -> float:
    """``|Re W(lam) e^{beta lam} - Re W(-lam)| / |Re W(-lam)|``."""
    a = rate.W(lam).real * math.exp(rate.beta * lam)
    b = rate.W(-lam).real
    return abs(a - b) / abs(b) if b != 0 else abs(a)
