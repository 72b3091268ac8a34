"""Command-line front end.

    openkpz COMMAND [key=value ...] [--config FILE] [--out DIR] [--format csv|json]

Configuration files hold one ``key=value`` per line (``#`` starts a comment);
command-line pairs override them. Every run writes ``<command>.<format>`` and
``manifest.json`` into the output directory (``--out``, else
``$OPENKPZ_OUTPUT_DIR``, else ``./openkpz_out``).

Exit status: 0 on success, 1 if a numerical check failed, 2 on invalid input.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import CouplingViolation, DomainError

EXIT_OK, EXIT_CHECK, EXIT_INVALID = 0, 1, 2
COMMANDS = ("phase", "stationary", "current", "simulate", "couple", "mpa", "aw-check",
            "laplace", "sample-kpz", "qgamma", "converge")


class ConfigError(DomainError):
    pass


# --------------------------------------------------------------------------
# typed parameters

def _floats(s):
    return tuple(float(x) for x in str(s).split(",") if x.strip())


def _ints(s):
    return tuple(int(x) for x in str(s).split(",") if x.strip())


def _opt_float(s):
    return None if s in (None, "", "none") else float(s)


_ASEP = {"q": (float, 0.5), "alpha": (float, 0.5), "beta": (float, 0.5), "gamma": (float, 0.0),
         "delta": (float, 0.0), "N": (int, 4), "rho_left": (_opt_float, None), "rho_right": (_opt_float, None),
         "u": (_opt_float, None), "v": (_opt_float, None)}

SCHEMA = {
    "phase": {"rho_left": (float, 0.6), "rho_right": (float, 0.3)},
    "stationary": dict(_ASEP),
    "current": dict(_ASEP, horizon=(float, 2000.0), n_batches=(int, 20), seed=(int, 0)),
    "simulate": dict(_ASEP, horizon=(float, 10.0), seed=(int, 0)),
    "couple": dict(_ASEP, alpha2=(float, 0.6), beta2=(float, 0.4), gamma2=(float, 0.0), delta2=(float, 0.1),
                   horizon=(float, 100.0), seed=(int, 0)),
    "mpa": dict(_ASEP, M=(int, 0), tol=(float, 1e-8)),
    "aw-check": {"u": (_floats, (0.5, 1.0, 2.0)), "v": (_floats, (0.5, 1.0, 2.0)), "N": (_ints, (2, 4, 6)),
                 "s": (_floats, (-0.1, -0.05, 0.05, 0.1)), "tol": (float, 1e-5)},
    "laplace": {"u": (float, 1.0), "v": (float, 1.0), "s": (_floats, (0.25, 0.5, 1.0)), "r_max": (float, 12.0),
                "tol": (float, 1e-12)},
    "sample-kpz": {"u": (float, 1.0), "v": (float, 1.0), "n_paths": (int, 1000), "n_steps": (int, 1024),
                   "record_every": (int, 64), "description": (str, "BLD"), "seed": (int, 0)},
    "qgamma": {"z": (_floats, (0.5, 1.5, 3.0)), "eps": (_floats, tuple(0.1 * 2.0 ** -k for k in range(6)))},
    "converge": {"u": (float, 0.0), "v": (float, 0.0), "N": (_ints, (16, 64, 256)), "n_paths": (int, 20000),
                 "n_steps": (int, 1024), "seed": (int, 0), "method": (str, "auto")},
}


def parse_pairs(pairs):
    out = {}
    for item in pairs:
        item = item.strip()
        if not item or item.startswith("#"):
            continue
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def read_config(path):
    with open(path) as fh:
        return parse_pairs(line.split("#", 1)[0] for line in fh)


def validate(command, raw):
    if command not in SCHEMA:
        raise ConfigError(f"unknown command {command!r}")
    schema = SCHEMA[command]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) for {command}: {', '.join(unknown)}")
    cfg = {}
    for k, (typ, default) in schema.items():
        if k in raw:
            try:
                cfg[k] = typ(raw[k])
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {k}: {raw[k]!r}") from None
        else:
            cfg[k] = default
    return cfg


def _asep_params(cfg):
    from .asep_model import AsepParams, liggett_params, weak_asymmetry_params
    if cfg.get("u") is not None or cfg.get("v") is not None:
        if cfg.get("u") is None or cfg.get("v") is None:
            raise ConfigError("u and v must be given together")
        return weak_asymmetry_params(cfg["N"], cfg["u"], cfg["v"])
    if cfg.get("rho_left") is not None or cfg.get("rho_right") is not None:
        if cfg.get("rho_left") is None or cfg.get("rho_right") is None:
            raise ConfigError("rho_left and rho_right must be given together")
        return liggett_params(cfg["q"], cfg["rho_left"], cfg["rho_right"], cfg["N"])
    return AsepParams(cfg["q"], cfg["alpha"], cfg["beta"], cfg["gamma"], cfg["delta"], cfg["N"])


# --------------------------------------------------------------------------
# commands; each returns (columns, rows, checks)

def _check(name, passed, residual):
    return {"name": name, "passed": bool(passed), "residual": float(residual)}


def cmd_phase(cfg):
    from .asep_model import classify_phase
    c = classify_phase(cfg["rho_left"], cfg["rho_right"])
    return ["phase", "region", "J"], [[c.phase.value, c.region.value, c.current_limit_J]], []


def cmd_stationary(cfg):
    from .asep_model import stationary_exact
    tab = stationary_exact(_asep_params(cfg))
    rows = [[b, p] for b, p in zip(tab.state_bits(), tab.probabilities)]
    return ["state_bits", "probability"], rows, [_check("generator_residual", tab.residual < 1e-10, tab.residual)]


def cmd_current(cfg):
    from .asep_dynamics import empirical_current
    from .asep_model import stationary_current, stationary_exact
    p = _asep_params(cfg)
    rows, checks = [], []
    mean, se = empirical_current(p, cfg["horizon"], cfg["seed"], cfg["n_batches"])
    rows.append(["simulation", mean, se])
    if p.n_sites <= 14:
        exact = stationary_current(stationary_exact(p), p)
        rows.append(["exact", exact, 0.0])
        z = abs(mean - exact) / se if se > 0 else math.inf
        checks.append(_check("current_z_score", z < 4.0, z))
    return ["source", "J", "se"], rows, checks


def cmd_simulate(cfg):
    from .asep_dynamics import simulate
    p = _asep_params(cfg)
    tr = simulate(p, cfg["horizon"], cfg["seed"])
    rows = [[t, k, m, int(n)] for (t, k, m), n in zip(tr.event_rows(), tr.net_current)]
    return ["t", "bond", "move", "net_current"], rows, []


def cmd_couple(cfg):
    from .asep_dynamics import coupled_simulate
    from .asep_model import AsepParams
    p = _asep_params(cfg)
    pp = AsepParams(p.q, cfg["alpha2"], cfg["beta2"], cfg["gamma2"], cfg["delta2"], p.n_sites)
    ct = coupled_simulate(p, pp, cfg["horizon"], cfg["seed"], strict=False, record_events=False)
    occ = ct.occupation_time / cfg["horizon"]
    rows = [[i + 1, occ[0, i], occ[1, i]] for i in range(p.n_sites)]
    return (["site", "density", "density_prime"], rows,
            [_check("coupling_violations", ct.violations == 0, ct.violations),
             _check("n_events", True, ct.n_events)])


def cmd_mpa(cfg):
    from .asep_model import stationary_exact
    from .mpa import dehp_residuals, mpa_measure, usw_rep
    p = _asep_params(cfg)
    M = cfg["M"] or p.n_sites + 2
    rep = usw_rep(p, M)
    res = dehp_residuals(rep, p)
    meas = mpa_measure(rep, p.n_sites)
    tv = meas.total_variation(stationary_exact(p))
    rows = [[b, x] for b, x in zip(meas.state_bits(), meas.probabilities)]
    tol = cfg["tol"]
    return (["state_bits", "probability"], rows,
            [_check("dehp_bulk", res.bulk <= tol, res.bulk), _check("dehp_left", res.left <= tol, res.left),
             _check("dehp_right", res.right <= tol, res.right), _check("tv_vs_exact", tv <= tol, tv)])


def cmd_aw_check(cfg):
    from .askey_wilson import height_laplace_aw
    from .asep_model import stationary_exact, weak_asymmetry_params
    rows, checks = [], []
    for N in cfg["N"]:
        for u in cfg["u"]:
            for v in cfg["v"]:
                try:
                    p = weak_asymmetry_params(N, u, v)
                except DomainError:
                    continue
                tab = stationary_exact(p)
                for s in cfg["s"]:
                    r = height_laplace_aw(p, s, table=tab)
                    rows.append([r.exact, r.aw, r.abs_diff, {"N": N, "u": u, "v": v, "s": s}])
                    checks.append(_check(f"laplace N={N} u={u} v={v} s={s}", r.rel_diff <= cfg["tol"], r.rel_diff))
    return ["lhs", "rhs", "abs_diff", "params"], rows, checks


def cmd_laplace(cfg):
    from .kpz_stationary import laplace_height_total
    rows = []
    for s in sorted(cfg["s"]):
        r = laplace_height_total(cfg["u"], cfg["v"], s, cfg["r_max"], cfg["tol"])
        rows.append([s, r.value, r.quadrature_error_estimate])
    return ["s", "value", "error"], rows, []


def cmd_sample_kpz(cfg):
    from .kpz_stationary import PathGrid, sample_stationary
    ens = sample_stationary(cfg["u"], cfg["v"], PathGrid(cfg["n_steps"], cfg["record_every"]), cfg["n_paths"],
                            cfg["seed"], cfg["description"])
    header, rows = ens.csv_rows()
    return header, rows, [_check("ess", ens.ess > 0, ens.ess)]


def cmd_qgamma(cfg):
    from .qspecial import q_gamma
    rows = []
    checks = []
    for z in cfg["z"]:
        prev = math.inf
        for eps in cfg["eps"]:
            val = q_gamma(z, math.exp(-eps)).real
            diff = abs(val - math.gamma(z))
            rows.append([z, eps, val, math.gamma(z), diff])
            checks.append(_check(f"monotone z={z} eps={eps}", diff < prev, diff))
            prev = diff
    return ["z", "eps", "q_gamma", "gamma", "abs_diff"], rows, checks


def cmd_converge(cfg):
    from .kpz_stationary import PathGrid, convergence_diag
    rows = convergence_diag(cfg["u"], cfg["v"], cfg["N"], PathGrid(cfg["n_steps"]), cfg["n_paths"], cfg["seed"],
                            cfg["method"])
    out = [[r.N, r.ks, r.asep_mean, r.asep_se, r.kpz_mean, r.kpz_se, r.source] for r in rows]
    ks = [r.ks for r in rows]
    dec = all(b < a for a, b in zip(ks, ks[1:]))
    return (["N", "ks", "asep_mean", "asep_se", "kpz_mean", "kpz_se", "source"], out,
            [_check("ks_decreasing", dec, ks[-1] if ks else 0.0)])


HANDLERS = {"phase": cmd_phase, "stationary": cmd_stationary, "current": cmd_current, "simulate": cmd_simulate,
            "couple": cmd_couple, "mpa": cmd_mpa, "aw-check": cmd_aw_check, "laplace": cmd_laplace,
            "sample-kpz": cmd_sample_kpz, "qgamma": cmd_qgamma, "converge": cmd_converge}


# --------------------------------------------------------------------------
# emission

def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    if isinstance(x, dict):
        return json.dumps(x, sort_keys=True)
    return str(x)


def _json_value(x):
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def emit(columns, rows, fmt, path):
    """Write rows as CSV or as a JSON list of records with the same keys."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(x) for x in r])
        text = buf.getvalue()
    else:
        recs = [{c: _json_value(x) for c, x in zip(columns, r)} for r in rows]
        text = json.dumps(recs, indent=1, sort_keys=True) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return path


def run(command, raw, out_dir, fmt=None, seed=None):
    """Validate, dispatch, write outputs and the manifest. Returns the exit status."""
    t0 = time.perf_counter()
    fmt = fmt or ("json" if command == "aw-check" else "csv")
    manifest = {"command": command, "config": dict(raw), "version": __version__, "format": fmt,
                "checks": [], "outputs": []}
    status, error = EXIT_OK, None
    os.makedirs(out_dir, exist_ok=True)
    try:
        if fmt not in ("csv", "json"):
            raise ConfigError(f"unknown format {fmt!r}")
        if seed is not None:
            raw = dict(raw, seed=str(seed))
        cfg = validate(command, raw)
        manifest["config"] = {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.items()}
        manifest["seed"] = cfg.get("seed")
        columns, rows, checks = HANDLERS[command](cfg)
        path = emit(columns, rows, fmt, os.path.join(out_dir, f"{command}.{fmt}"))
        manifest["outputs"].append(os.path.basename(path))
        manifest["checks"] = checks
        if any(not c["passed"] for c in checks):
            status = EXIT_CHECK
            error = "check failed: " + ", ".join(c["name"] for c in checks if not c["passed"])
    except (DomainError, ValueError) as exc:
        status, error = EXIT_INVALID, f"{type(exc).__name__}: {exc}"
    except (ArithmeticError, CouplingViolation) as exc:
        status, error = EXIT_CHECK, f"{type(exc).__name__}: {exc}"
    manifest["wall_clock_s"] = time.perf_counter() - t0
    return _finish(manifest, out_dir, status, error)


def _finish(manifest, out_dir, status, error):
    manifest["exit_status"] = status
    manifest["error"] = error
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True, default=str)
        fh.write("\n")
    if error:
        print(f"openkpz: {manifest['command']}: {error}".replace("\n", " "), file=sys.stderr)
    return status


def main(argv=None):
    ap = argparse.ArgumentParser(prog="openkpz", description="Open ASEP and open KPZ stationary-measure tools")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("pairs", nargs="*", help="key=value overrides")
    ap.add_argument("--config", help="key=value configuration file")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--version", action="version", version=f"openkpz {__version__}")
    args = ap.parse_intermixed_args(argv)
    out = args.out or os.environ.get("OPENKPZ_OUTPUT_DIR") or "openkpz_out"
    try:
        raw = read_config(args.config) if args.config else {}
        raw.update(parse_pairs(args.pairs))
    except (OSError, ConfigError) as exc:
        manifest = {"command": args.command, "config": {}, "version": __version__, "checks": [], "outputs": []}
        return _finish(manifest, out, EXIT_INVALID, f"{type(exc).__name__}: {exc}")
    return run(args.command, raw, out, args.format, args.seed)


if __name__ == "__main__":
    sys.exit(main())
