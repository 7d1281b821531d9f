"""Command-line interface: classify | sweep | curves | simulate | phase-portrait.

All numeric output is bit-stable: floats print as %.12e, rows follow the
configured axis order, and parallel sweeps reduce in deterministic
order, so identical configs produce byte-identical files.  Exit codes:
0 globally bounded / success, 1 usage or config error, 2 finite-time
blowup (or crossing), 3 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .alignment import (CURVE_KINDS, INFLUENCE_LIBRARY, constant_influence,
                        enhanced_curve, exponential_influence,
                        power_law_influence)
from .config import ConfigError, RunConfig, config_hash, parse_config
from .core import Model
from .euler_poisson import (compute_threshold_constants, explicit_sigma_plus,
                            qs_phase_portrait)
from .odeint import Verdict
from .pde import diagnostics_series, simulate_ea, simulate_ep
from .profiles import (constant, gaussian_bump, gaussian_velocity, indicator,
                       linear_velocity, polynomial_decay, rexp_velocity,
                       zero_velocity)
from .sweep import (VERDICT_CODES, bounds_from, classify_from_config,
                    integrator_from, model_params_from, run_sweep)

log = logging.getLogger("radial_euler")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BLOWUP = 2
EXIT_INCONCLUSIVE = 3


def _f(x) -> str:
    return "%.12e" % float(x)


def _json_num(x):
    return float(_f(x))


def _prov(cfg: RunConfig) -> str:
    return f"config_sha256={config_hash(cfg)} tool=radial-euler {__version__}"


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def _influence_from(cfg: RunConfig):
    a = cfg["alignment"]
    name = a["phi"]
    if name == "constant":
        return constant_influence(a["phi_value"])
    if name == "power-law":
        return power_law_influence(a["phi_exponent"], a["phi_scale"])
    if name == "exponential":
        return exponential_influence(a["phi_scale"])
    raise ConfigError(f"[alignment] phi must be one of {sorted(INFLUENCE_LIBRARY)} "
                      f"for PDE runs, got {name!r}")


def _profiles_from(cfg: RunConfig):
    ini = cfg["initial"]
    nodes = ini["profile_nodes"]
    r_max = ini["r_max"]
    kind = ini["rho_profile"]
    if kind == "gaussian-bump":
        rho = gaussian_bump(ini["rho_amp"], ini["rho_width"], r_max, nodes)
    elif kind == "indicator":
        rho = indicator(ini["rho_amp"], ini["rho_radius"], nodes)
    elif kind == "constant":
        rho = constant(ini["rho_amp"], r_max, nodes)
    elif kind == "polynomial-decay":
        rho = polynomial_decay(ini["rho_amp"], ini["rho_width"], ini["rho_k"],
                               r_max, nodes)
    else:
        raise ConfigError(f"unknown rho_profile {kind!r}")
    ukind = ini["u_profile"]
    if ukind == "linear":
        u = linear_velocity(ini["u_amp"], rho.r_max, nodes)
    elif ukind == "rexp":
        u = rexp_velocity(ini["u_amp"], ini["u_width"], rho.r_max, nodes)
    elif ukind == "gaussian":
        u = gaussian_velocity(ini["u_amp"], ini["u_width"], rho.r_max, nodes)
    elif ukind == "zero":
        u = zero_velocity(rho.r_max, nodes)
    else:
        raise ConfigError(f"unknown u_profile {ukind!r}")
    return rho, u


def cmd_classify(cfg: RunConfig, out_dir: str, fmt: str, threads: int) -> int:
    out = classify_from_config(cfg)
    payload = {"verdict": out.verdict.value}
    if out.t_estimate is not None:
        payload["t_estimate"] = _json_num(out.t_estimate)
    if out.reason:
        payload["reason"] = out.reason
    diag = {}
    for key in ("t_final", "max_norm"):
        if key in out.diagnostics:
            diag[key] = _json_num(out.diagnostics[key])
    if "early_exit" in out.diagnostics:
        diag["early_exit"] = out.diagnostics["early_exit"]
    payload["diagnostics"] = diag
    print(json.dumps(payload, sort_keys=True, indent=2))
    return {Verdict.GLOBAL_BOUNDED: EXIT_OK,
            Verdict.FINITE_TIME_BLOWUP: EXIT_BLOWUP,
            Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE}[out.verdict]


def cmd_sweep(cfg: RunConfig, out_dir: str, fmt: str, threads: int) -> int:
    result = run_sweep(cfg, threads=threads)
    if fmt == "json":
        path = os.path.join(out_dir, "sweep.json")
        _write(path, result.to_json())
    else:
        path = os.path.join(out_dir, "sweep.csv")
        _write(path, result.to_csv())
    print(path)
    return EXIT_OK


def cmd_curves(cfg: RunConfig, out_dir: str, fmt: str, threads: int) -> int:
    cur = cfg["curves"]
    n = cfg["model"]["n"]
    bounds = bounds_from(cfg)
    which = (list(CURVE_KINDS) if cur["which"] == "all"
             else [w.strip() for w in cur["which"].split(",")])
    lines = [f"# {_prov(cfg)}", "curve,x,value"]
    xs = np.linspace(0.0, cur["x_max"], cur["samples"])
    for kind in which:
        if kind not in CURVE_KINDS:
            raise ConfigError(f"unknown curve kind {kind!r}")
        curve = enhanced_curve(kind, bounds, n, cur["x_max"])
        for x, v in zip(xs, curve(xs)):
            lines.append(f"{kind},{_f(x)},{_f(v)}")
    if cur["include_ep"]:
        try:
            params = model_params_from(cfg)
            consts = compute_threshold_constants(params,
                                                 (cur["ep_q0"], cur["ep_s0"]))
            v0s = np.linspace(cur["v0_max"] / cur["samples"], cur["v0_max"],
                              cur["samples"])
            for v0 in v0s:
                w0 = explicit_sigma_plus(float(v0), consts,
                                         params.kappa, params.n)
                lines.append(f"ep_w0_threshold,{_f(v0)},{_f(w0)}")
        except ValueError as exc:
            lines.append(f"# ep_w0_threshold: unsupported ({exc})")
    path = os.path.join(out_dir, "curves.csv")
    _write(path, "\n".join(lines) + "\n")
    print(path)
    return EXIT_OK


def _snapshot_csv(snap, prov: str) -> str:
    cols = ["r", "rho", "u", "p", "q"]
    arrays = [snap.r, snap.rho, snap.u, snap.p, snap.q]
    if snap.extras.get("psi") is not None:
        cols += ["psi", "G"]
        arrays += [snap.extras["psi"], snap.extras["G"]]
    lines = [f"# {prov}", f"# t = {_f(snap.time)}", ",".join(cols)]
    for row in zip(*arrays):
        lines.append(",".join(_f(v) for v in row))
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: RunConfig, out_dir: str, fmt: str, threads: int) -> int:
    params = model_params_from(cfg)
    rho0, u0 = _profiles_from(cfg)
    sim = cfg["simulate"]
    ini = cfg["initial"]
    if params.model is Model.EULER_ALIGNMENT:
        phi = _influence_from(cfg)
        result = simulate_ea(rho0, u0, phi, params, n_paths=ini["n_paths"],
                             t_end=sim["t_end"], n_snapshots=sim["snapshots"],
                             theta_order=sim["theta_order"],
                             dt=sim["dt"] or None)
    else:
        result = simulate_ep(rho0, u0, params, n_paths=ini["n_paths"],
                             config=integrator_from(cfg), t_end=sim["t_end"],
                             n_snapshots=sim["snapshots"])
    prov = _prov(cfg)
    for i, snap in enumerate(result.snapshots):
        _write(os.path.join(out_dir, f"snapshot_{i:03d}.csv"),
               _snapshot_csv(snap, prov))
    series = diagnostics_series(result.snapshots)
    keys = ["t", "max_grad", "V", "support_radius", "min_radius",
            "mass_total", "bkm_integral"]
    lines = [f"# {prov}", ",".join(keys)]
    for k in range(len(series["t"])):
        lines.append(",".join(_f(series[key][k]) for key in keys))
    _write(os.path.join(out_dir, "diagnostics.csv"), "\n".join(lines) + "\n")

    meta = {"snapshots": len(result.snapshots), "n_paths": result.n_paths,
            "blowup": None}
    if result.blowup is not None:
        meta["blowup"] = {"time": _json_num(result.blowup.time),
                          "kind": result.blowup.kind,
                          "path_index": result.blowup.path_index,
                          "radius": _json_num(result.blowup.radius)}
    _write(os.path.join(out_dir, "metadata.json"),
           json.dumps(meta, sort_keys=True, indent=2) + "\n")
    print(os.path.join(out_dir, "metadata.json"))
    if result.blowup is not None:
        return EXIT_INCONCLUSIVE if result.blowup.kind == "step-collapse" \
            else EXIT_BLOWUP
    return EXIT_OK


def cmd_phase_portrait(cfg: RunConfig, out_dir: str, fmt: str, threads: int) -> int:
    ph = cfg["phase"]
    params = model_params_from(cfg)
    integ = integrator_from(cfg)
    from dataclasses import replace
    integ = replace(integ, t_max=ph["t_end"])
    seeds = []
    for chunk in ph["seeds"].split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            q0, s0 = (float(v) for v in chunk.split(":"))
        except ValueError:
            raise ConfigError(f"bad seed {chunk!r}; expected q0:s0")
        seeds.append((q0, s0))
    if not seeds:
        raise ConfigError("phase portrait needs at least one seed")
    trajectories = qs_phase_portrait(params, seeds, integ)
    rescaled = ph["rescaled"]
    cols = "seed,t,qhat,shat" if rescaled else "seed,t,q,s"
    lines = [f"# {_prov(cfg)}", cols]
    for idx, traj in enumerate(trajectories):
        if traj.record is None:
            log.warning("seed %s invalid (s0 <= -c/n); skipped", traj.seed)
            continue
        tt = np.linspace(0.0, traj.record.t_final, ph["samples"])
        ys = traj.record.sample_many(tt)
        for t, (q, s) in zip(tt, ys):
            if rescaled:
                q, s = (t + 1.0) * q, (t + 1.0) ** 2 * s
            lines.append(f"{idx},{_f(t)},{_f(q)},{_f(s)}")
    path = os.path.join(out_dir, "portrait.csv")
    _write(path, "\n".join(lines) + "\n")
    print(path)
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "sweep": cmd_sweep,
    "curves": cmd_curves,
    "simulate": cmd_simulate,
    "phase-portrait": cmd_phase_portrait,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radial-euler",
        description="Critical-threshold classification and simulation for "
                    "radially symmetric pressure-less Eulerian flow.")
    parser.add_argument("--version", action="version",
                        version=f"radial-euler {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the run config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--format", choices=("csv", "json"), default=None)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("CT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        cfg = parse_config(args.config)
        out_dir = args.out if args.out is not None else cfg["output"]["out_dir"]
        os.makedirs(out_dir, exist_ok=True)
        fmt = args.format if args.format is not None else cfg["output"]["format"]
        return COMMANDS[args.command](cfg, out_dir, fmt, max(args.threads, 1))
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
