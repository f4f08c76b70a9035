"""Command-line front end.

Every command writes its results into ``--out`` (CSV or JSON) together with
a JSON sidecar holding the resolved configuration and the package version.
Progress goes to standard error.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from . import bath as bathmod
from . import config as cfgmod
from . import dynamics as dyn
from . import experiments as exp
from . import generators as gen
from . import oracle
from .errors import ConfigError, NumericError
from .polaron import build_polaron_frame

log = logging.getLogger("polaron_ccqme")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3


# ----------------------------------------------------------------------------
# Output helpers
# ----------------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def matrix_json(m):
    """Row-major nested list of ``[re, im]`` pairs."""
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_sidecar(out_dir, name, args, cfg, outputs, extra=None):
    meta = {
        "command": args.command,
        "version": __version__,
        "preset": args.preset,
        "config": cfg,
        "outputs": outputs,
    }
    if extra:
        meta.update(extra)
    write_json(os.path.join(out_dir, f"{name}.meta.json"), meta)


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------


def cmd_correlation(args, cfg):
    point = cfgmod.resolve_point(cfg)
    model = gen.build_model(point.system, point.bath)
    corr = cfg.get("correlation", {})
    taus = cfgmod.expand_range(corr.get("tau", {"start": 0.0, "stop": 20.0, "num": 201}))
    gap0 = cfgmod.gap_of(point.system)
    lams = cfgmod.expand_range(corr.get("lam", {"start": -4.0 * gap0, "stop": 4.0 * gap0, "num": 80}))
    pairs = {}
    pf = model.polaron
    for a, ca in enumerate(pf.channels):
        for b, cb in enumerate(pf.channels):
            key = (ca.d * cb.d, pf.kappa[ca.m, ca.n] * pf.kappa[cb.m, cb.n])
            pairs.setdefault(key, (f"{ca.m}{ca.n}-{cb.m}{cb.n}", model.rates[a][b]))
    crow, rrow = [], []
    for (p, kk), (label, rate) in pairs.items():
        c = bathmod.correlation(p, kk, taus, point.bath)
        for t, v in zip(taus, np.atleast_1d(c)):
            crow.append({"channel": label, "p": p, "tau": t, "re": v.real, "im": v.imag})
        for lam in lams:
            w = rate.W(lam)
            dw = rate.dW(lam) if lam != 0.0 else complex(math.nan, math.nan)
            rrow.append({"channel": label, "p": p, "lam": lam, "re_W": w.real, "im_W": w.imag, "re_dW": dw.real, "im_dW": dw.imag})
    g = bathmod.GaussianRate(point.bath)
    cg = bathmod.gaussian_correlation(taus, point.bath)
    for t, v in zip(taus, np.atleast_1d(cg)):
        crow.append({"channel": "gaussian", "p": "", "tau": t, "re": v.real, "im": v.imag})
    for lam in lams:
        w = g.W(lam)
        dw = g.dW(lam) if lam != 0.0 else complex(math.nan, math.nan)
        rrow.append({"channel": "gaussian", "p": "", "lam": lam, "re_W": w.real, "im_W": w.imag, "re_dW": dw.real, "im_dW": dw.imag})
    write_csv(os.path.join(args.out, "correlation.csv"), crow, ["channel", "p", "tau", "re", "im"])
    write_csv(os.path.join(args.out, "rates.csv"), rrow, ["channel", "p", "lam", "re_W", "im_W", "re_dW", "im_dW"])
    write_sidecar(args.out, "correlation", args, cfg, ["correlation.csv", "rates.csv"])
    return EXIT_OK


def cmd_frame(args, cfg):
    point = cfgmod.resolve_point(cfg)
    pf = build_polaron_frame(point.system, point.bath)
    model = gen.build_model(point.system, point.bath)
    e = model.eig.energies
    out = {
        "tilde_hs": matrix_json(pf.tilde_hs),
        "kappa": pf.kappa,
        "shift": pf.shift,
        "channels": [{"m": c.m, "n": c.n, "d": c.d, "op": matrix_json(c.op)} for c in pf.channels],
        "energies": e,
        "gap": float(e[1] - e[0]) if e.size > 1 else 0.0,
        "bare_gap": cfgmod.gap_of(point.system),
    }
    write_json(os.path.join(args.out, "frame.json"), out)
    write_sidecar(args.out, "frame", args, cfg, ["frame.json"])
    return EXIT_OK


def cmd_generator(args, cfg):
    point = cfgmod.resolve_point(cfg)
    method = cfg.get("method", "pt-ccqme")
    model = gen.build_model(point.system, point.bath, exp.frame_of(method))
    r = gen.redfield_tensor(model)
    n = model.dim
    q = gen.q_mfg_tensor(model).q.matrix if method in ("pt-ccqme", "ccqme") else np.zeros((n * n, n * n))
    L = gen.liouvillian(method, model)
    out = {"method": method, "vectorization": "column-stacking", "basis": "site", "R": matrix_json(r.matrix), "Q": matrix_json(q), "L": matrix_json(L.matrix)}
    write_json(os.path.join(args.out, "generator.json"), out)
    write_sidecar(args.out, "generator", args, cfg, ["generator.json"])
    return EXIT_OK


def _series_rows(traj, gap0, engine=None):
    rows = []
    n = traj.states.shape[1]
    for k, t in enumerate(traj.times):
        row = {"t": t, "t_dE": t * gap0, "trace": traj.traces[k], "min_eig": traj.min_eigs[k]}
        if n == 2:
            row["sz"] = traj.observables["sz"][k].real
        for j in range(n):
            row[f"p{j}"] = traj.states[k, j, j].real
        if engine:
            row["engine"] = engine
        rows.append(row)
    return rows


def _series_columns(n, engine=False):
    cols = ["t", "t_dE"] + (["sz"] if n == 2 else []) + ["trace", "min_eig"] + [f"p{j}" for j in range(n)]
    return cols + (["engine"] if engine else [])


def cmd_evolve(args, cfg):
    point = cfgmod.resolve_point(cfg)
    method = cfg.get("method", "pt-ccqme")
    L = gen.liouvillian(method, system=point.system, bath=point.bath)
    rho0 = cfgmod.initial_state(cfg, point.system.dim)
    t_max, steps = cfgmod.time_grid(cfg, point.system)
    traj = dyn.propagate(L, rho0, t_max, steps=steps)
    gap0 = cfgmod.gap_of(point.system)
    write_csv(os.path.join(args.out, "evolve.csv"), _series_rows(traj, gap0), _series_columns(point.system.dim))
    write_sidecar(args.out, "evolve", args, cfg, ["evolve.csv"], {"method": method, "t_max": t_max, "steps": steps})
    return EXIT_OK


def cmd_steady(args, cfg):
    point = cfgmod.resolve_point(cfg)
    method = cfg.get("method", "pt-ccqme")
    model = gen.build_model(point.system, point.bath, exp.frame_of(method))
    L = gen.liouvillian(method, model)
    rho = dyn.steady_state(L)
    out = {"method": method, "rho": matrix_json(rho), "min_eig": float(np.linalg.eigvalsh(rho)[0])}
    if model.frame == "polaron":
        out["mfg"] = matrix_json(dyn.mfg_state(model))
    if point.system.dim == 2:
        out["sz"] = exp._sz(rho)
        if "mfg" in out:
            out["mfg_sz"] = exp._sz(dyn.mfg_state(model))
    write_json(os.path.join(args.out, "steady.json"), out)
    write_sidecar(args.out, "steady", args, cfg, ["steady.json"])
    return EXIT_OK


def _grid_setup(cfg, default_methods=cfgmod.METHODS):
    points = cfgmod.resolve_grid(cfg)
    methods = cfgmod.scan_methods(cfg, default_methods)
    system = points[0].system
    return points, methods, cfgmod.gap_of(system), system


def _collect(results, errors, points, methods, gap0, empty):
    rows = []
    for i, res in enumerate(results):
        if res is None:
            for m in methods:
                row = exp._base_row(points[i], m, gap0)
                row.update(empty)
                row["error"] = errors.get(i, "unknown failure")
                rows.append(row)
        else:
            rows.extend(res)
    return rows


def cmd_positivity_scan(args, cfg):
    points, methods, gap0, system = _grid_setup(cfg)
    t_max, steps = cfgmod.time_grid(cfg, system)
    rho0 = cfgmod.initial_state(cfg, system.dim)
    res, errs = exp.run_grid(
        exp.positivity_point, points, args.workers, methods=methods, t_max=t_max, steps=steps, rho0=rho0, gap0=gap0
    )
    rows = _collect(res, errs, points, methods, gap0, {"min_eig": math.nan, "gap": math.nan, "runtime_ms": math.nan})
    cols = ["index", "method", "gamma", "beta", "beta_dE", "min_eig", "gap", "runtime_ms", "error"]
    write_csv(os.path.join(args.out, "positivity.csv"), rows, cols)
    write_sidecar(args.out, "positivity", args, cfg, ["positivity.csv"], {"t_max": t_max, "steps": steps, "bare_gap": gap0})
    return EXIT_OK


def cmd_gap_scan(args, cfg):
    points, methods, gap0, _ = _grid_setup(cfg, ("pt-ccqme", "pt-redfield", "redfield"))
    res, errs = exp.run_grid(exp.gap_point, points, args.workers, methods=methods, gap0=gap0)
    nan = {k: math.nan for k in ("gap", "re_mu1", "im_mu1", "abs_mu0")}
    rows = _collect(res, errs, points, methods, gap0, nan)
    cols = ["index", "method", "gamma", "beta", "beta_dE", "gap", "re_mu1", "im_mu1", "abs_mu0", "error"]
    write_csv(os.path.join(args.out, "gap.csv"), rows, cols)
    write_sidecar(args.out, "gap", args, cfg, ["gap.csv"], {"bare_gap": gap0})
    return EXIT_OK


def cmd_dynamics_compare(args, cfg):
    points, methods, gap0, system = _grid_setup(cfg)
    t_max, steps = cfgmod.time_grid(cfg, system)
    rho0 = cfgmod.initial_state(cfg, system.dim)
    res, errs = exp.run_grid(
        exp.dynamics_point, points, args.workers, methods=methods, t_max=t_max, steps=steps, rho0=rho0, gap0=gap0
    )
    series, anchors = [], []
    for i, r in enumerate(res):
        if r is None:
            for m in methods:
                row = exp._base_row(points[i], m, gap0)
                row["error"] = errs.get(i, "unknown failure")
                anchors.append(row)
            continue
        series.extend(r[0])
        anchors.extend(r[1])
    scols = ["index", "method", "gamma", "beta", "beta_dE", "t", "t_dE", "sz", "trace", "min_eig"]
    acols = [
        "index", "method", "gamma", "beta", "beta_dE", "final_sz", "steady_sz", "max_abs_sz", "unphysical",
        "weak_gibbs_sz", "strong_mfg_sz", "mfg_sz", "error",
    ]
    write_csv(os.path.join(args.out, "dynamics.csv"), series, scols)
    write_csv(os.path.join(args.out, "anchors.csv"), anchors, acols)
    write_sidecar(args.out, "dynamics", args, cfg, ["dynamics.csv", "anchors.csv"], {"t_max": t_max, "steps": steps, "bare_gap": gap0})
    return EXIT_OK


def cmd_oracle(args, cfg):
    point = cfgmod.resolve_point(cfg)
    o = cfg.get("oracle", {})
    density = point.bath.density
    omega_max = o.get("omega_max", 8.0 * density.omega_scale)
    db = oracle.discretize_bath(density, point.beta, o.get("modes", 4), o.get("fock_cutoff", 4), omega_max=omega_max)
    rho0 = cfgmod.initial_state(cfg, point.system.dim)
    t_max, steps = cfgmod.time_grid(cfg, point.system)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ed = oracle.exact_evolve(point.system, db, rho0, t_max, steps)
    if ed.warning:
        log.warning(ed.warning)
    traj = dyn.Trajectory(ed.times, ed.states, {"sz": ed.observables.get("sz", np.zeros(ed.times.size))})
    gap0 = cfgmod.gap_of(point.system)
    write_csv(os.path.join(args.out, "oracle.csv"), _series_rows(traj, gap0, "ed"), _series_columns(point.system.dim, True))
    extra = {
        "modes": db.size,
        "fock_cutoff": db.fock_cutoff,
        "omega_max": omega_max,
        "recurrence_time": ed.recurrence_time,
        "recurrence_warning": ed.warning,
        "discretization_error": oracle.discretization_report(db, density),
    }
    write_sidecar(args.out, "oracle", args, cfg, ["oracle.csv"], extra)
    return EXIT_OK


def cmd_validate(args, cfg):
    from .validation import run_validation

    report = run_validation(cfgmod.tolerances(cfg))
    report["version"] = __version__
    write_json(os.path.join(args.out, "validation.json"), report)
    for c in report["checks"]:
        op = ">=" if c["kind"] == "min" else "<="
        status = "pass" if c["passed"] else "FAIL"
        print(f"{status:4s} {c['name']:22s} {c['measured']:.3e} {op} {c['tolerance']:.1e}  {c['detail']}", file=sys.stderr)
    write_sidecar(args.out, "validation", args, cfg, ["validation.json"])
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


COMMANDS = {
    "correlation": (cmd_correlation, "bath correlation functions and rates"),
    "frame": (cmd_frame, "polaron-frame Hamiltonian, renormalizations and channels"),
    "generator": (cmd_generator, "dump R, Q and L as JSON matrices"),
    "evolve": (cmd_evolve, "propagate one initial state"),
    "steady": (cmd_steady, "steady state and mean-force Gibbs state"),
    "positivity-scan": (cmd_positivity_scan, "minimum eigenvalue over trajectories on a grid"),
    "dynamics-compare": (cmd_dynamics_compare, "<sigma_z>(t) per method plus equilibrium anchors"),
    "gap-scan": (cmd_gap_scan, "Liouvillian gap on a grid"),
    "oracle": (cmd_oracle, "exact diagonalization with a discretized bath"),
    "validate": (cmd_validate, "identity, cross-check and oracle suite"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="polaron-ccqme", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--preset", choices=sorted(cfgmod.PRESETS), help="start from a shipped parameter set")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for grid scans")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = cfgmod.load_config(args.config, args.preset)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command][0](args, cfg)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (NumericError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
