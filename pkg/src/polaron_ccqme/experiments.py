"""Batch experiments over (gamma, beta) grids.

Every worker is a pure function of one grid point, so points run in any
order and in separate processes. Results are re-sorted by grid index before
they are returned.
"""

from __future__ import annotations

import logging
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed

import numpy as np

from . import dynamics as dyn
from . import generators as gen
from .config import Point
from .errors import ConfigError, NumericError
from .model import SIGMA_Z

log = logging.getLogger(__name__)

UNPHYSICAL_TOL = 1e-9


def frame_of(method: str) -> str:
    return "polaron" if method.startswith("pt-") else "original"


def build_generators(point: Point, methods):
    """Liouvillians of ``methods`` at one point; one model build per frame.

    Returns
    -------
    gens : dict
        ``method -> Superoperator``.
    models : dict
        ``frame -> DissipativeModel``.
    errors : dict
        ``method -> message`` for methods whose build failed.
    """
    gens, models, errors = {}, {}, {}
    for method in methods:
        frame = frame_of(method)
        try:
            if frame not in models:
                models[frame] = gen.build_model(point.system, point.bath, frame)
            gens[method] = gen.liouvillian(method, models[frame])
        except (NumericError, np.linalg.LinAlgError) as exc:
            errors[method] = f"{type(exc).__name__}: {exc}"
    return gens, models, errors


def _base_row(point: Point, method: str, gap0: float) -> dict:
    return {
        "index": point.index,
        "method": method,
        "gamma": point.gamma,
        "beta": point.beta,
        "beta_dE": point.beta * gap0,
    }


def positivity_point(point: Point, methods, t_max: float, steps: int, rho0, gap0: float) -> list[dict]:
    """Minimum eigenvalue over a trajectory and Liouvillian gap per method."""
    rows = []
    t0 = time.perf_counter()
    gens, _, errors = build_generators(point, methods)
    build_ms = 1e3 * (time.perf_counter() - t0)
    for method in methods:
        row = _base_row(point, method, gap0)
        row.update(min_eig=math.nan, gap=math.nan, error="")
        t1 = time.perf_counter()
        if method in errors:
            row["error"] = errors[method]
        else:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    traj = dyn.propagate(gens[method], rho0, t_max, steps=steps)
                row["min_eig"] = dyn.min_eig_trajectory(traj)
                row["gap"] = dyn.liouvillian_gap(gens[method])[0]
            except (NumericError, np.linalg.LinAlgError) as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
        row["runtime_ms"] = build_ms / len(methods) + 1e3 * (time.perf_counter() - t1)
        rows.append(row)
    return rows


def gap_point(point: Point, methods, gap0: float) -> list[dict]:
    """``g = -Re mu_1`` and ``mu_1`` per method."""
    gens, _, errors = build_generators(point, methods)
    rows = []
    for method in methods:
        row = _base_row(point, method, gap0)
        row.update(gap=math.nan, re_mu1=math.nan, im_mu1=math.nan, abs_mu0=math.nan, error=errors.get(method, ""))
        if method in gens:
            try:
                g, mu0, mu1 = dyn.liouvillian_gap(gens[method])
                row.update(gap=g, re_mu1=mu1.real, im_mu1=mu1.imag, abs_mu0=abs(mu0))
            except np.linalg.LinAlgError as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def _sz(rho) -> float:
    return float(np.trace(SIGMA_Z @ rho).real)


def dynamics_point(point: Point, methods, t_max: float, steps: int, rho0, gap0: float):
    """``<sigma_z>(t)`` per method plus equilibrium anchors.

    Returns
    -------
    series : list of dict
        One row per (method, t).
    anchors : list of dict
        One row per method: final and steady ``<sigma_z>``, the weak-limit
        Gibbs value of ``H_S``, the strong-limit pure-dephasing value, and
        the polaron mean-force Gibbs value.
    """
    if point.system.dim != 2:
        raise ConfigError("dynamics-compare reports <sigma_z> and needs a two-level system")
    gens, models, errors = build_generators(point, methods)
    weak = _sz(dyn.weak_limit_state(point.system, point.beta))
    strong = _sz(dyn.strong_limit_state(point.system, point.beta))
    mfg = math.nan
    if "polaron" in models:
        try:
            mfg = _sz(dyn.mfg_state(models["polaron"]))
        except NumericError as exc:
            log.warning("mean-force state failed at point %d: %s", point.index, exc)
    series, anchors = [], []
    for method in methods:
        anchor = _base_row(point, method, gap0)
        anchor.update(
            final_sz=math.nan,
            steady_sz=math.nan,
            max_abs_sz=math.nan,
            unphysical=False,
            weak_gibbs_sz=weak,
            strong_mfg_sz=strong,
            mfg_sz=mfg,
            error=errors.get(method, ""),
        )
        if method in gens:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    traj = dyn.propagate(gens[method], rho0, t_max, steps=steps)
                sz = traj.observables["sz"].real
                mins = traj.min_eigs
                for k, t in enumerate(traj.times):
                    row = _base_row(point, method, gap0)
                    row.update(t=t, t_dE=t * gap0, sz=sz[k], trace=traj.traces[k], min_eig=mins[k])
                    series.append(row)
                anchor["final_sz"] = sz[-1]
                anchor["max_abs_sz"] = float(np.max(np.abs(sz)))
                anchor["unphysical"] = bool(anchor["max_abs_sz"] > 1.0 + UNPHYSICAL_TOL)
                anchor["steady_sz"] = _sz(dyn.steady_state(gens[method]))
            except (NumericError, np.linalg.LinAlgError) as exc:
                anchor["error"] = f"{type(exc).__name__}: {exc}"
        anchors.append(anchor)
    return series, anchors


def run_grid(func, points, workers: int = 1, progress: bool = True, **kwargs):
    """Apply ``func(point, **kwargs)`` over ``points``; results in grid order.

    ``workers > 1`` distributes points over a process pool. A point whose
    worker raises is reported through the returned error list instead of
    aborting the scan.
    """
    results = [None] * len(points)
    errors = {}
    total = len(points)

    tty = sys.stderr.isatty()
    stride = max(1, total // 10)

    def report(done):
        if not progress:
            return
        if tty:
            print(f"\r[{done}/{total}] points", end="" if done < total else "\n", file=sys.stderr, flush=True)
        elif done % stride == 0 or done == total:
            print(f"[{done}/{total}] points", file=sys.stderr, flush=True)

    if workers <= 1:
        for i, p in enumerate(points):
            try:
                results[i] = func(p, **kwargs)
            except (NumericError, ConfigError, np.linalg.LinAlgError) as exc:
                errors[i] = f"{type(exc).__name__}: {exc}"
            report(i + 1)
        return results, errors
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(func, p, **kwargs): i for i, p in enumerate(points)}
        for done, fut in enumerate(as_completed(futures), start=1):
            i = futures[fut]
            try:
                results[i] = fut.result()
            except (NumericError, ConfigError, np.linalg.LinAlgError) as exc:
                errors[i] = f"{type(exc).__name__}: {exc}"
            report(done)
    return results, errors

