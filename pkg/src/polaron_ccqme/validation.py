"""Self-consistency and oracle checks with a machine-readable report.

Every check measures one number and compares it with a tolerance. Most
checks pass when the measured value is at most the tolerance; checks with
``kind="min"`` (a measured exponent) pass when it is at least the tolerance.
The default tolerances live in :data:`polaron_ccqme.config.DEFAULT_TOLERANCES`
and can be overridden from a config's ``tolerances`` block.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import bath as bathmod
from . import dynamics as dyn
from . import generators as gen
from . import oracle
from .config import DEFAULT_TOLERANCES
from .model import SIGMA_Z, BathSpec, SpinBosonSpec, SuperOhmic, default_initial_state, gibbs_state

log = logging.getLogger(__name__)

# reference parameter sets (epsilon = h = omega_c = 1)
GAMMAS = (0.01, 0.1, 0.5)
BETAS = (1.0, 2.8, 5.6)
GAP = 2.0 * math.sqrt(2.0)
GAP_BETAS = (1.4, 2.8, 5.6)
GAP_GAMMAS = (0.05, 0.3, 1.0)
TENSOR_POINTS = ((0.1, 2.8), (0.3, 2.0), (1.0, 0.5))


@dataclass
class CheckResult:
    name: str
    measured: float
    tolerance: float
    passed: bool
    kind: str = "max"
    detail: str = ""
    seconds: float = 0.0


def _spin_boson(gamma, beta, h=1.0):
    bath = BathSpec(beta, SuperOhmic(gamma, 1.0))
    return SpinBosonSpec(1.0, h, bath).to_system(), bath


def _rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a)


def check_trigamma():
    err = max(
        abs(bathmod.trigamma(1.0) - math.pi**2 / 6),
        abs(bathmod.trigamma(2.0) - (math.pi**2 / 6 - 1.0)),
        abs(bathmod.trigamma(1.37) - bathmod.trigamma(0.37) + 1.0 / 0.37**2),
    )
    return err, "psi_1(1), psi_1(2) and the recurrence at z = 0.37"


def check_closed_forms():
    """kappa and xi: closed trigamma forms against defining-integral quadrature."""
    worst, where = 0.0, ""
    for g in GAMMAS:
        for b in BETAS:
            bath = BathSpec(b, SuperOhmic(g, 1.0))
            ek = _rel(bathmod.kappa_pair(2.0, bath, "closed"), bathmod.kappa_pair(2.0, bath))
            ex = _rel(bathmod.xi_shift(1.0, bath.density, "closed"), bathmod.xi_shift(1.0, bath.density))
            if max(ek, ex) > worst:
                worst, where = max(ek, ex), f"gamma={g}, beta={b}"
    return worst, f"worst at {where}; quadrature is authoritative"


def _lambda_grid():
    return np.linspace(0.1, 4.0, 40) * GAP


def check_detailed_balance():
    """Re W(l) e^{beta l} = Re W(-l) for normal, anomalous and Gaussian rates."""
    worst, where = 0.0, ""
    for g in GAMMAS:
        for b in BETAS:
            bath = BathSpec(b, SuperOhmic(g, 1.0))
            kk = bathmod.kappa_pair(2.0, bath) ** 2
            rates = {
                "normal": bathmod.PolaronRate(bath, -4.0, kk),
                "anomalous": bathmod.PolaronRate(bath, 4.0, kk),
                "gaussian": bathmod.GaussianRate(bath),
            }
            for label, rate in rates.items():
                for lam in _lambda_grid():
                    e = bathmod.detailed_balance_error(rate, lam)
                    if e > worst:
                        worst, where = e, f"{label}, gamma={g}, beta={b}, lambda={lam:.3f}"
    return worst, f"40 lambda x 9 (gamma, beta); worst at {where}"


def check_imaginary_time():
    """-int_0^beta C(-iu) e^{-l u} du = Im W(l) + e^{-beta l} Im W(-l)."""
    worst, where = 0.0, ""
    lams = np.linspace(-4.0, 4.0, 40) * GAP
    for g in GAMMAS:
        for b in BETAS:
            bath = BathSpec(b, SuperOhmic(g, 1.0))
            kk = bathmod.kappa_pair(2.0, bath) ** 2
            for p in (-4.0, 4.0):
                rate = bathmod.PolaronRate(bath, p, kk)
                for lam in lams:
                    lhs = bathmod.imag_time_integral(p, kk, lam, bath)
                    rhs = rate.W(lam).imag + math.exp(-b * lam) * rate.W(-lam).imag
                    e = _rel(rhs, lhs)
                    if e > worst:
                        worst, where = e, f"p={p:+.0f}, gamma={g}, beta={b}, lambda={lam:.3f}"
    return worst, f"40 lambda x 9 (gamma, beta) x 2 channels; worst at {where}"


def check_rate_time_domain():
    """Spectral W against direct time-domain quadrature of C(tau)."""
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    kk = bathmod.kappa_pair(2.0, bath) ** 2
    worst, where = 0.0, ""
    for p in (-4.0, 4.0):
        rate = bathmod.PolaronRate(bath, p, kk)
        for lam in (-2.8, 0.8, 2.8):
            ref = bathmod.half_fourier_quadrature(lambda t: bathmod.correlation(p, kk, t, bath), lam)
            e = _rel(rate.W(lam), ref)
            if e > worst:
                worst, where = e, f"p={p:+.0f}, lambda={lam}"
    return worst, f"gamma=0.1, beta=2; worst at {where}"


def check_rate_derivative():
    """dW at lambda=0.8 against a central difference with step 1e-4."""
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    kk = bathmod.kappa_pair(2.0, bath) ** 2
    worst = 0.0
    for p in (-4.0, 4.0):
        rate = bathmod.PolaronRate(bath, p, kk)
        h = 1e-4
        fd = (rate.W(0.8 + h) - rate.W(0.8 - h)) / (2 * h)
        worst = max(worst, _rel(rate.dW(0.8), fd))
    return worst, "gamma=0.1, beta=2, both channels"


def check_tensor_agreement():
    """General-channel R and Q against the independent spin-boson formulas."""
    worst, where = 0.0, ""
    for g, b in TENSOR_POINTS:
        system, bath = _spin_boson(g, b)
        model = gen.build_model(system, bath)
        r = gen.redfield_eigen(model)
        r_closed = gen.four_index_to_matrix(gen.spin_boson_redfield_closed(model))
        q = gen.q_mfg_tensor(model, r)
        q_closed = gen.four_index_to_matrix(gen.spin_boson_q_closed(model))
        e = max(np.max(np.abs(r - r_closed)), np.max(np.abs(q.coherent + q.lindblad - q_closed)))
        if e > worst:
            worst, where = e, f"gamma={g}, beta={b}"
    return float(worst), f"max elementwise difference of R and Q; worst at {where}"


def check_mfg_imaginary_time():
    """Q[Gibbs] against the imaginary-time (Dyson) quadrature, trace part removed."""
    worst, where = 0.0, ""
    for g, b, frame in ((0.1, 2.0, "polaron"), (0.5, 1.0, "polaron"), (0.1, 2.0, "original")):
        system, bath = _spin_boson(g, b)
        model = gen.build_model(system, bath, frame)
        q = gen.q_mfg_tensor(model)
        ge = gibbs_state(np.diag(model.eig.energies), b)
        mine = gen.unvec((q.coherent + q.lindblad) @ gen.vec(ge))
        mine = mine - ge * np.trace(mine)
        e = float(np.max(np.abs(mine - oracle.mfg_correction_imaginary_time(model))))
        if e > worst:
            worst, where = e, f"{frame}, gamma={g}, beta={b}"
    return worst, f"worst at {where}"


def _generator_grid():
    for g in GAP_GAMMAS:
        for bd in GAP_BETAS:
            system, bath = _spin_boson(g, bd / GAP)
            for frame in ("polaron", "original"):
                model = gen.build_model(system, bath, frame)
                for kind, L in gen.generator_set(model).items():
                    yield f"{kind}, gamma={g}, beta*dE={bd}", L


def check_generator_invariants():
    """Zero mode, non-negative gap, trace annihilation and Hermiticity."""
    rng = np.random.default_rng(7)
    samples = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3)]
    out = {"zero_mode": (0.0, ""), "trace_leakage": (0.0, ""), "hermiticity": (0.0, ""), "gap": (math.inf, "")}
    for label, L in _generator_grid():
        g, mu0, _ = dyn.liouvillian_gap(L)
        for key, val in (
            ("zero_mode", abs(mu0)),
            ("trace_leakage", L.trace_leakage()),
            ("hermiticity", L.hermiticity_error(samples)),
        ):
            if val > out[key][0]:
                out[key] = (val, label)
        if g < out["gap"][0]:
            out["gap"] = (g, label)
    return out


def check_weak_limit():
    system, bath = _spin_boson(1e-3, 1.0)
    rho = dyn.steady_state(gen.liouvillian("pt-ccqme", system=system, bath=bath))
    sz = float(np.trace(SIGMA_Z @ rho).real)
    target = -math.tanh(math.sqrt(2.0)) / math.sqrt(2.0)
    return abs(sz - target), f"<sigma_z> = {sz:.8f}, Gibbs(H_S) = {target:.8f}"


def order_residuals(gamma=0.1, beta=2.8, hs=(0.2, 0.1, 0.05)):
    """``||L_PT-CCQME[rho_MFG]||`` for a sequence of hopping amplitudes."""
    res = []
    for h in hs:
        system, bath = _spin_boson(gamma, beta, h)
        model = gen.build_model(system, bath)
        L = gen.liouvillian("pt-ccqme", model)
        res.append(float(np.linalg.norm(L.apply(dyn.mfg_state(model)))))
    return np.array(res)


def check_order_exponent():
    hs = (0.2, 0.1, 0.05)
    r = order_residuals(hs=hs)
    exps = np.log2(r[:-1] / r[1:])
    detail = "residuals " + ", ".join(f"r({h})={x:.3e}" for h, x in zip(hs, r))
    detail += "; exponents " + ", ".join(f"{e:.3f}" for e in exps)
    return float(np.min(exps)), detail


def check_discrete_correlation():
    """Finite-mode correlation (2000 modes) against the analytic composition."""
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    db = oracle.discretize_bath(bath.density, bath.beta, 2000)
    tau = np.linspace(0.0, 20.0, 81)
    worst = 0.0
    for d1, d2 in ((2.0, -2.0), (2.0, 2.0)):
        kk = bathmod.kappa_pair(d1, bath) * bathmod.kappa_pair(d2, bath)
        exact = bathmod.correlation(d1 * d2, kk, tau, bath)
        worst = max(worst, float(np.max(np.abs(oracle.discrete_correlation(db, d1, d2, tau) - exact))))
    return worst, "gamma=0.1, beta=2, tau in [0, 20], both channels"


def ed_benchmark(modes=4, cutoff=4, steps=80):
    """ED and PT-CCQME ``<sigma_z>`` at gamma=0.05, beta*dE=1.4, t*dE <= 8."""
    beta = 1.4 / GAP
    system, bath = _spin_boson(0.05, beta)
    t_max = 8.0 / GAP
    db = oracle.discretize_bath(bath.density, beta, modes, cutoff, omega_max=8.0)
    rho0 = default_initial_state(2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ed = oracle.exact_evolve(system, db, rho0, t_max, steps)
    traj = dyn.propagate(gen.liouvillian("pt-ccqme", system=system, bath=bath), rho0, t_max, steps=steps)
    return ed, traj


def check_ed_dynamics():
    ed, traj = ed_benchmark()
    diff = np.abs(ed.observables["sz"] - traj.observables["sz"].real)
    k = int(np.argmax(diff))
    detail = f"K=4, cutoff=4; max at t*dE={traj.times[k] * GAP:.2f}; recurrence time {ed.recurrence_time:.3f}"
    return float(diff[k]), detail


SUITE = (
    ("trigamma", check_trigamma, "closed_form"),
    ("closed_form", check_closed_forms, "closed_form"),
    ("detailed_balance", check_detailed_balance, "detailed_balance"),
    ("imaginary_time", check_imaginary_time, "imaginary_time"),
    ("rate_time_domain", check_rate_time_domain, "rate_time_domain"),
    ("rate_derivative", check_rate_derivative, "rate_derivative"),
    ("tensor_agreement", check_tensor_agreement, "tensor_agreement"),
    ("mfg_imaginary_time", check_mfg_imaginary_time, "mfg_imaginary_time"),
    ("weak_limit", check_weak_limit, "weak_limit"),
    ("order_exponent", check_order_exponent, "order_exponent"),
    ("discrete_correlation", check_discrete_correlation, "discrete_correlation"),
    ("ed_dynamics", check_ed_dynamics, "ed_dynamics"),
)


def run_validation(tol: dict | None = None, only=None) -> dict:
    """Run the suite and return ``{"passed": bool, "checks": [...]}``.

    Parameters
    ----------
    tol : dict, optional
        Tolerance overrides keyed like ``DEFAULT_TOLERANCES``.
    only : iterable of str, optional
        Restrict to these check names (``generator_invariants`` included).
    """
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    results = []
    for name, func, key in SUITE:
        if only is not None and name not in only:
            continue
        t0 = time.perf_counter()
        measured, detail = func()
        kind = "min" if name == "order_exponent" else "max"
        ok = measured >= tol[key] if kind == "min" else measured <= tol[key]
        results.append(CheckResult(name, float(measured), tol[key], bool(ok), kind, detail, time.perf_counter() - t0))
        log.info("%s: %.3e (%s %.1e) %s", name, measured, ">=" if kind == "min" else "<=", tol[key], "ok" if ok else "FAIL")
    if only is None or "generator_invariants" in only:
        t0 = time.perf_counter()
        inv = check_generator_invariants()
        dt = time.perf_counter() - t0
        for key, tkey in (("zero_mode", "zero_mode"), ("trace_leakage", "trace_leakage"), ("hermiticity", "hermiticity")):
            val, where = inv[key]
            results.append(CheckResult(key, float(val), tol[tkey], bool(val <= tol[tkey]), "max", f"worst at {where}", dt))
        g, where = inv["gap"]
        results.append(CheckResult("gap_nonnegative", float(g), 0.0, bool(g >= 0.0), "min", f"smallest at {where}", dt))
    return {"passed": all(r.passed for r in results), "checks": [asdict(r) for r in results]}
