"""Classification dispatch and deterministic parallel parameter sweeps."""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentBounds, comparison_classify
from .config import RunConfig, config_hash, parse_config_text, serialize_config
from .core import CharState, Model, ModelParams
from .euler_poisson import classify_ep
from .odeint import ClassificationOutcome, IntegratorConfig, Verdict

MAX_SWEEP_CELLS = 1_000_000

VERDICT_CODES = {Verdict.GLOBAL_BOUNDED: 0,
                 Verdict.FINITE_TIME_BLOWUP: 2,
                 Verdict.INCONCLUSIVE: 3}

_MODEL_KINDS = {
    "euler-poisson": Model.EULER_POISSON,
    "euler-alignment": Model.EULER_ALIGNMENT,
    "inviscid-burgers": Model.INVISCID_BURGERS,
    "damped-burgers": Model.DAMPED_BURGERS,
}


def model_params_from(cfg: RunConfig) -> ModelParams:
    m = cfg["model"]
    if m["kind"] not in _MODEL_KINDS:
        raise ValueError(f"unknown model kind {m['kind']!r}")
    return ModelParams(n=m["n"], kappa=m["kappa"], c=m["c"],
                       model=_MODEL_KINDS[m["kind"]], kappa_damp=m["kappa_damp"])


def integrator_from(cfg: RunConfig) -> IntegratorConfig:
    i = cfg["integrator"]
    return IntegratorConfig(rel_tol=i["rel_tol"], abs_tol=i["abs_tol"],
                            h_init=i["h_init"], h_min=i["h_min"],
                            h_max=i["h_max"], t_max=i["t_max"],
                            magnitude_cap=i["magnitude_cap"])


def bounds_from(cfg: RunConfig) -> AlignmentBounds:
    a = cfg["alignment"]
    return AlignmentBounds.explicit(psi_min=a["psi_min"], psi_max=a["psi_max"],
                                    nu=a["nu"], C0=a["C0"])


def classify_from_config(cfg: RunConfig,
                         overrides: dict | None = None) -> ClassificationOutcome:
    """Classify the configured initial state, with optional axis overrides.

    Override keys: p0, q0, s0, rho0 patch the characteristic state;
    y0, C0 patch the alignment comparison inputs.
    """
    overrides = overrides or {}
    params = model_params_from(cfg)
    integ = integrator_from(cfg)
    if params.model is Model.EULER_ALIGNMENT:
        a = cfg["alignment"]
        y0 = overrides.get("y0", a["y0"])
        c0 = overrides.get("C0", a["C0"])
        bounds = bounds_from(cfg)
        return comparison_classify(a["kind"], y0, c0, bounds, params.n,
                                   config=integ, side=a["side"])
    st = cfg["state"]
    state = CharState(p=overrides.get("p0", st["p0"]),
                      q=overrides.get("q0", st["q0"]),
                      s=overrides.get("s0", st["s0"]),
                      rho=overrides.get("rho0", st["rho0"]))
    return classify_ep(state, params, integ, confirm=cfg["integrator"]["confirm"])


@dataclass
class SweepResult:
    axis_names: tuple[str, str]
    axis1: np.ndarray
    axis2: np.ndarray
    codes: np.ndarray          # shape (len(axis1), len(axis2)), row-major
    provenance: str

    def to_csv(self) -> str:
        """Header row carries axis2 values; one row per axis1 value."""
        lines = [f"# {self.provenance}",
                 f"# rows: {self.axis_names[0]}, columns: {self.axis_names[1]}, "
                 "codes: 0=global-bounded 2=finite-time-blowup 3=inconclusive"]
        header = [f"{self.axis_names[0]}\\{self.axis_names[1]}"] + \
                 ["%.12e" % v for v in self.axis2]
        lines.append(",".join(header))
        for i, v1 in enumerate(self.axis1):
            row = ["%.12e" % v1] + [str(int(c)) for c in self.codes[i]]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        import json
        payload = {
            "provenance": self.provenance,
            "axis_names": list(self.axis_names),
            "axis1": [float("%.12e" % v) for v in self.axis1],
            "axis2": [float("%.12e" % v) for v in self.axis2],
            "codes": self.codes.tolist(),
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


_WORKER_CFG: RunConfig | None = None


def _init_worker(cfg_text: str):
    global _WORKER_CFG
    _WORKER_CFG = parse_config_text(cfg_text)


def _sweep_cell(cell) -> int:
    name1, v1, name2, v2 = cell
    out = classify_from_config(_WORKER_CFG, {name1: v1, name2: v2})
    return VERDICT_CODES[out.verdict]


def run_sweep(cfg: RunConfig, threads: int = 1) -> SweepResult:
    """Row-major sweep over the two configured axes; deterministic output."""
    s = cfg["sweep"]
    axis1 = np.linspace(s["axis1_min"], s["axis1_max"], s["axis1_steps"])
    axis2 = np.linspace(s["axis2_min"], s["axis2_max"], s["axis2_steps"])
    n_cells = len(axis1) * len(axis2)
    if n_cells > MAX_SWEEP_CELLS:
        raise ValueError(f"sweep grid has {n_cells} cells "
                         f"(limit {MAX_SWEEP_CELLS}); refuse to run")
    cells = [(s["axis1"], float(v1), s["axis2"], float(v2))
             for v1 in axis1 for v2 in axis2]
    if threads <= 1:
        _init_worker(serialize_config(cfg))
        codes = [_sweep_cell(c) for c in cells]
    else:
        chunk = max(len(cells) // (threads * 24), 1)
        with multiprocessing.Pool(threads, initializer=_init_worker,
                                  initargs=(serialize_config(cfg),)) as pool:
            codes = pool.map(_sweep_cell, cells, chunksize=chunk)
    matrix = np.array(codes, dtype=int).reshape(len(axis1), len(axis2))
    prov = f"config_sha256={config_hash(cfg)} tool=radial-euler"
    return SweepResult((s["axis1"], s["axis2"]), axis1, axis2, matrix, prov)
