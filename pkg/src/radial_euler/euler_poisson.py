"""Characteristic dynamics and threshold theory for radial Euler-Poisson flow.

Along a characteristic path the scalars p = u_r, q = u/r, s = -phi_r/r
and the density rho obey the closed system

    p'   = -p^2 + kappa (rho - c - (n-1) s),
    q'   = -q^2 + kappa s,
    s'   = -(n s + c) q,
    rho' = -rho (p + (n-1) q).

Global regularity of the PDE reduces to global boundedness of this ODE
per path.  The (q, s) block is closed on its own: with zero background
it decays algebraically to the origin, with positive background it
travels periodic orbits, and in both cases only p or rho can escape.
This module provides the numeric classifier for that dichotomy plus the
explicit threshold machinery: the exact 1D region, the rescaled
(q-hat, s-hat) system and its decay constants, the drift threshold
D_crit, and the resulting explicit multi-D subcritical bound on p0/rho0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import CharState, Model, ModelParams, Region
from .odeint import (ClassificationOutcome, EventSpec, IntegratorConfig, OdeSystem,
                     Termination, TrajectoryRecord, Verdict, integrate)
from .profiles import RadialProfile, integrate_weighted

DEFAULT_CONFIG = IntegratorConfig()

# early-exit basin: (q, s) negligible and (p, rho) inside a forward-invariant
# Riccati-safe region
_BASIN_QS = 1e-3
_BASIN_RHO_FLOOR = 1e-2


def qs_system(params: ModelParams) -> OdeSystem:
    """The closed (q, s) block: q' = -q^2 + kappa s, s' = -(n s + c) q."""
    n, kappa, c = params.n, params.kappa, params.c

    def rhs(t, y):
        q, s = y
        return (-q * q + kappa * s, -(n * s + c) * q)

    return OdeSystem(2, rhs, labels=("q", "s"))


def ep_full_system(params: ModelParams) -> OdeSystem:
    """The full (p, q, s, rho) characteristic system."""
    n, kappa, c = params.n, params.kappa, params.c
    nm1 = n - 1.0

    def rhs(t, y):
        p, q, s, rho = y
        return (-p * p + kappa * (rho - c - nm1 * s),
                -q * q + kappa * s,
                -(n * s + c) * q,
                -rho * (p + nm1 * q))

    return OdeSystem(4, rhs, labels=("p", "q", "s", "rho"))


def ep_1d_system(params: ModelParams) -> OdeSystem:
    """1D reduction: the (q, s) pair does not feed back into (p, rho)."""
    kappa, c = params.kappa, params.c

    def rhs(t, y):
        p, rho = y
        return (-p * p + kappa * (rho - c), -rho * p)

    return OdeSystem(2, rhs, labels=("p", "rho"))


def burgers_system(params: ModelParams) -> OdeSystem:
    """Inviscid or damped Burgers: p and q decouple, rho rides along."""
    nm1 = params.n - 1.0
    kd = params.kappa_damp if params.model is Model.DAMPED_BURGERS else 0.0

    def rhs(t, y):
        p, q, rho = y
        return (-p * p - kd * p,
                -q * q - kd * q,
                -rho * (p + nm1 * q))

    return OdeSystem(3, rhs, labels=("p", "q", "rho"))


def qshat_system(params: ModelParams) -> OdeSystem:
    """(q, s) rescaled by powers of (t+1), in logarithmic time.

    q_hat' = -q_hat^2 + q_hat + kappa s_hat,  s_hat' = (2 - n q_hat) s_hat.
    The zero-background (q, s) decay rates are the approach of this
    autonomous system to its attractor (1, 0).
    """
    n, kappa = params.n, params.kappa

    def rhs(t, y):
        qh, sh = y
        return (-qh * qh + qh + kappa * sh, (2.0 - n * qh) * sh)

    return OdeSystem(2, rhs, labels=("q_hat", "s_hat"))


def wv_system(params: ModelParams, qs_record: TrajectoryRecord,
              s0: float) -> OdeSystem:
    """(w, v) = (p/rho, 1/rho) * exp((n-1) A) driven by a (q, s) trajectory.

    A(t) = (1/n) log(s_tilde(t)/s_tilde(0)) with s_tilde = s + c/n, and

        w' = kappa exp((n-1) A) - kappa (c + (n-1) s) v,   v' = w.
    """
    n, kappa, c = params.n, params.kappa, params.c
    st0 = s0 + c / n
    if st0 <= 0:
        raise ValueError("s0 + c/n must be positive for the (w, v) transform")

    def rhs(t, y):
        w, v = y
        s = float(qs_record.sample(t)[1])
        a = math.log((s + c / n) / st0) / n
        return (kappa * math.exp((n - 1.0) * a)
                - kappa * (c + (n - 1.0) * s) * v, w)

    return OdeSystem(2, rhs, labels=("w", "v"))


def initial_s_from_density(rho0: RadialProfile, c: float, r: float,
                           n: float) -> float:
    """s(r) = r^-n * integral_0^r tau^(n-1) (rho0(tau) - c) d tau.

    Exceeds -c/n whenever the central density is positive.
    """
    if not (0.0 < r <= rho0.r_max + 1e-12):
        raise ValueError(f"radius {r} outside the density profile support")
    w = integrate_weighted(rho0.nodes, rho0.values, 0.0, r, n - 1.0)
    return (w - c * r ** n / n) / r ** n


@dataclass
class QsRun:
    """A (q, s) trajectory with excursion diagnostics.

    ``record`` is parametrized by real time (strictly increasing, suited
    for decay fits); ``record_tau`` is the underlying regularized-time
    record resolving the full excursion.
    """

    record: TrajectoryRecord
    record_tau: TrajectoryRecord
    q_min: float
    q_max: float
    s_max: float
    blowup_time: Optional[float] = None

    @property
    def bounded(self) -> bool:
        return self.blowup_time is None


def integrate_qs(params: ModelParams, q0: float, s0: float, t_end: float,
                 config: Optional[IntegratorConfig] = None,
                 extra_events: Sequence[EventSpec] = ()) -> QsRun:
    """Integrate the (q, s) block through arbitrarily deep excursions.

    Compressive data with small s makes q dive to roughly
    -|q0| exp(q0^2 / (2 kappa s0)) (for n = 2) before the s-term turns it
    around; the turn happens on a timescale ~1/|q| that can sit far below
    the floating-point resolution of t.  Integrating in a regularized
    pseudo-time tau with dt = d tau / w, w = sqrt(1 + q^2 + kappa(|s| + c)),
    makes every e-fold of the excursion cost O(1) steps while t simply
    stalls through the spike.  Genuine blowup (possible for n < 2) shows
    up as the state escaping while t stalls, and is reported with the
    stalling time.
    """
    n, kappa, c = params.n, params.kappa, params.c
    if s0 <= -c / n:
        raise ValueError(f"s0 must exceed -c/n = {-c / n}")

    def rhs(tau, y):
        q, s, t = y
        w = math.sqrt(1.0 + q * q + kappa * (abs(s) + c))
        return ((-q * q + kappa * s) / w, -(n * s + c) * q / w, 1.0 / w)

    system = OdeSystem(3, rhs, labels=("q", "s", "t"))
    if config is None:
        config = IntegratorConfig()
    cfg = replace(config,
                  t_max=t_end + 500.0,
                  abs_tol=np.array([1e-12, 1e-280, 1e-12]),
                  magnitude_cap=1e250)
    done = EventSpec("t-end", lambda tau, y: y[2] - t_end,
                     direction=+1, terminal=True)
    rec = integrate(system, [q0, s0, 0.0], cfg, events=(done,) + tuple(extra_events))

    q_min = float(np.min(rec.ys[:, 0]))
    q_max = float(np.max(rec.ys[:, 0]))
    s_max = float(np.max(rec.ys[:, 1]))
    blowup_time = None
    if rec.termination is Termination.BLOWUP_DETECTED:
        blowup_time = float(rec.y_final[2])
    elif rec.termination is Termination.STEP_COLLAPSE:
        raise RuntimeError(f"regularized (q, s) integration collapsed: {rec.note}")

    # re-parametrize by real time, dropping stalled duplicates
    t_samples = rec.ys[:, 2]
    keep = np.concatenate((np.diff(t_samples) > 0, [True]))
    ts = t_samples[keep]
    ys = rec.ys[keep][:, :2]
    fs = np.column_stack([-ys[:, 0] ** 2 + kappa * ys[:, 1],
                          -(n * ys[:, 1] + c) * ys[:, 0]])
    record_t = TrajectoryRecord(ts, ys, fs, rec.termination,
                                event_name=rec.event_name, hits=rec.hits,
                                note=rec.note)
    return QsRun(record_t, rec, q_min, q_max, s_max, blowup_time)


def sigma_1d(p0: float, rho0: float, kappa: float, c: float) -> Region:
    """Exact membership in the 1D subcritical region.

    Zero background: p0 > -sqrt(2 kappa rho0).  Positive background:
    |p0| < sqrt(kappa (2 rho0 - c)).  Both inequalities are strict; the
    boundary itself blows up.
    """
    if rho0 < 0:
        raise ValueError("rho0 must be nonnegative")
    if c == 0.0:
        return Region.SUBCRITICAL if p0 > -math.sqrt(2.0 * kappa * rho0) \
            else Region.SUPERCRITICAL
    gap = kappa * (2.0 * rho0 - c)
    if gap <= 0.0:
        return Region.SUPERCRITICAL
    return Region.SUBCRITICAL if abs(p0) < math.sqrt(gap) else Region.SUPERCRITICAL


def _basin_event(params: ModelParams) -> Optional[EventSpec]:
    """Forward-invariant bounded region, entered => globally bounded.

    Zero-background Euler-Poisson: once (q, s) is negligible and either
    p >= 0 or p^2 < kappa rho / 2 (with rho away from vacuum), p' > 0
    until p reaches 0 and then stays nonnegative, so the Riccati channel
    is closed.  Burgers: the sharp region {p >= -kd, q >= -kd} is itself
    invariant with bounded dynamics.
    """
    model, n, kappa = params.model, params.n, params.kappa
    if model is Model.EULER_POISSON:
        if params.c != 0.0:
            return None

        if n == 1.0:
            def g(t, y):
                return y[0]  # p >= 0 is invariant when rho >= 0
        else:
            nm1 = n - 1.0

            def g(t, y):
                p, q, s, rho = y
                riccati_safe = max(p, 0.5 * kappa * rho - p * p)
                return min(_BASIN_QS - (abs(q) + abs(s)),
                           rho - _BASIN_RHO_FLOOR,
                           rho - 4.0 * nm1 * abs(s),
                           riccati_safe)
        return EventSpec("bounded-basin", g, direction=+1, terminal=True)

    kd = params.kappa_damp if model is Model.DAMPED_BURGERS else 0.0

    def g(t, y):
        return min(y[0] + kd, y[1] + kd)

    return EventSpec("bounded-basin", g, direction=+1, terminal=True)


def _initial_state(y0: CharState, params: ModelParams) -> np.ndarray:
    if params.model is Model.EULER_POISSON:
        if params.n == 1.0:
            return np.array([y0.p, y0.rho])
        return np.array([y0.p, y0.q, y0.s, y0.rho])
    return np.array([y0.p, y0.q, y0.rho])


def _system_for(params: ModelParams) -> OdeSystem:
    if params.model is Model.EULER_POISSON:
        return ep_1d_system(params) if params.n == 1.0 else ep_full_system(params)
    if params.model in (Model.INVISCID_BURGERS, Model.DAMPED_BURGERS):
        return burgers_system(params)
    raise ValueError(f"classify_ep does not handle model {params.model}")


def _classify_once(y0: CharState, params: ModelParams,
                   config: IntegratorConfig) -> ClassificationOutcome:
    system = _system_for(params)
    state0 = _initial_state(y0, params)
    basin = _basin_event(params)

    diag = {"t_final": 0.0, "max_norm": float(np.max(np.abs(state0))),
            "final_state": state0, "labels": system.labels}

    if basin is not None and basin.func(0.0, state0) >= 0.0:
        diag["early_exit"] = "initial state inside bounded basin"
        return ClassificationOutcome(Verdict.GLOBAL_BOUNDED, diagnostics=diag)

    cfg = config
    periodic_check = (params.model is Model.EULER_POISSON and params.c > 0.0
                      and params.n == 1.0)
    if periodic_check:
        # the (w, v) = (p/rho, 1/rho) dynamics is an exact linear oscillator
        # with period 2 pi / sqrt(kappa c); one clean return certifies the orbit
        period = 2.0 * math.pi / math.sqrt(params.kappa * params.c)
        if 1.05 * period < config.t_max:
            cfg = replace(config, t_max=1.05 * period)

    events = (basin,) if basin is not None else ()
    rec = integrate(system, state0, cfg, events=events)

    diag["t_final"] = rec.t_final
    diag["max_norm"] = max(diag["max_norm"], rec.max_abs())
    diag["final_state"] = rec.y_final

    if rec.termination is Termination.EVENT:
        diag["early_exit"] = f"entered bounded basin at t={rec.t_event:.6g}"
        return ClassificationOutcome(Verdict.GLOBAL_BOUNDED, diagnostics=diag)
    if rec.termination is Termination.BLOWUP_DETECTED:
        comp = system.label(rec.blowup_component)
        diag["blowup_component"] = comp
        return ClassificationOutcome(Verdict.FINITE_TIME_BLOWUP,
                                     t_estimate=rec.blowup_time, diagnostics=diag)
    if rec.termination is Termination.STEP_COLLAPSE:
        return ClassificationOutcome(Verdict.INCONCLUSIVE, reason=rec.note,
                                     diagnostics=diag)

    if periodic_check and rec.t_final < config.t_max - 1e-9:
        period = 2.0 * math.pi / math.sqrt(params.kappa * params.c)
        y_ret = rec.sample(period)
        scale = float(np.max(np.abs(state0))) + 1.0
        if float(np.max(np.abs(y_ret - state0))) < 1e-5 * scale:
            diag["early_exit"] = "closed periodic orbit after one period"
            return ClassificationOutcome(Verdict.GLOBAL_BOUNDED, diagnostics=diag)
        # ambiguous return: integrate the full horizon instead
        rec = integrate(system, state0, config, events=events)
        diag["t_final"] = rec.t_final
        diag["max_norm"] = max(diag["max_norm"], rec.max_abs())
        diag["final_state"] = rec.y_final
        if rec.termination is Termination.BLOWUP_DETECTED:
            return ClassificationOutcome(Verdict.FINITE_TIME_BLOWUP,
                                         t_estimate=rec.blowup_time,
                                         diagnostics=diag)
        if rec.termination is Termination.STEP_COLLAPSE:
            return ClassificationOutcome(Verdict.INCONCLUSIVE, reason=rec.note,
                                         diagnostics=diag)
        if rec.termination is Termination.EVENT:
            return ClassificationOutcome(Verdict.GLOBAL_BOUNDED, diagnostics=diag)

    return ClassificationOutcome(Verdict.GLOBAL_BOUNDED, diagnostics=diag)


def classify_ep(y0: CharState, params: ModelParams,
                config: IntegratorConfig = DEFAULT_CONFIG,
                confirm: bool = True) -> ClassificationOutcome:
    """Classify one characteristic initial state as bounded or escaping.

    Integrates the characteristic system with blowup detection; the only
    escape channels are p -> -inf and rho -> +inf (plus q for the Burgers
    models).  With ``confirm``, the run is repeated at 10x tighter
    tolerances and a verdict flip is reported as INCONCLUSIVE, which is
    the honest answer near the sharp threshold surface.
    """
    if y0.rho < 0.0:
        raise ValueError("rho0 must be nonnegative")
    if params.model is Model.EULER_POISSON and params.n > 1.0:
        if y0.s <= -params.c / params.n:
            raise ValueError(f"s0 must exceed -c/n = {-params.c / params.n}")

    out = _classify_once(y0, params, config)
    if not confirm or out.verdict is Verdict.INCONCLUSIVE:
        return out
    check = _classify_once(y0, params, config.tightened(0.1))
    if check.verdict is not out.verdict:
        return ClassificationOutcome(
            Verdict.INCONCLUSIVE,
            reason="classification flips under 10x tighter tolerances",
            diagnostics=out.diagnostics)
    return out


@dataclass
class PortraitTrajectory:
    seed: tuple
    record: Optional[TrajectoryRecord]
    outcome: str            # converges-to-origin | periodic-orbit | bounded | invalid
    final_distance: Optional[float] = None
    period: Optional[float] = None
    closure: Optional[float] = None


def qs_phase_portrait(params: ModelParams, seeds: Sequence[tuple],
                      config: IntegratorConfig = DEFAULT_CONFIG
                      ) -> list[PortraitTrajectory]:
    """Integrate the (q, s) block from each seed and describe the orbit.

    Zero background: trajectories are attracted to the origin and the
    final distance is reported.  Positive background: orbits are closed;
    the period is measured between successive downward crossings of
    q = 0 and the closure is the distance back to the seed after one
    period.  Seeds violating s0 > -c/n are marked invalid.
    """
    n, c = params.n, params.c
    out = []
    for seed in seeds:
        q0, s0 = seed
        if s0 <= -c / n or (c == 0.0 and s0 <= 0.0):
            out.append(PortraitTrajectory(seed, None, "invalid"))
            continue
        if c == 0.0:
            run = integrate_qs(params, q0, s0, config.t_max, config)
            dist = float(np.hypot(*run.record.y_final))
            kind = "converges-to-origin" if dist < 1e-2 else "bounded"
            if not run.bounded:
                kind = "blowup"
            out.append(PortraitTrajectory(seed, run.record, kind,
                                          final_distance=dist))
        else:
            section = EventSpec("q-falling", lambda tau, y: y[0],
                                direction=-1, terminal=False)
            run = integrate_qs(params, q0, s0, config.t_max, config,
                               extra_events=(section,))
            hits = [h for h in run.record_tau.hits if h.name == "q-falling"]
            if len(hits) >= 2:
                # the third state component of a hit is the real time
                period = float(hits[1].y[2] - hits[0].y[2])
                closure = float(np.max(np.abs(run.record.sample(period)
                                              - np.array([q0, s0]))))
                out.append(PortraitTrajectory(seed, run.record, "periodic-orbit",
                                              period=period, closure=closure))
            else:
                out.append(PortraitTrajectory(seed, run.record, "bounded"))
    return out


@dataclass
class QsHatResult:
    record: TrajectoryRecord
    shat_max: float
    that_star: float
    qhat_max: float


def qshat_integrate(params: ModelParams, y0: tuple,
                    config: IntegratorConfig = DEFAULT_CONFIG,
                    t_hat_max: float = 40.0) -> QsHatResult:
    """Integrate the rescaled (q_hat, s_hat) system in logarithmic time.

    Records the maximum of s_hat and the time t_hat_* where it is
    attained: s_hat peaks when q_hat crosses 2/n from below, or at
    t_hat_* = 0 if q_hat already starts at or above 2/n.
    """
    qh0, sh0 = y0
    if sh0 < 0:
        raise ValueError("s_hat0 must be nonnegative")
    system = qshat_system(params)
    cfg = replace(config, t_max=t_hat_max)
    thresh = 2.0 / params.n
    crossing = EventSpec("qhat-crossing", lambda t, y: y[0] - thresh,
                         direction=+1, terminal=False)
    rec = integrate(system, [qh0, sh0], cfg, events=(crossing,))

    tt = np.linspace(rec.ts[0], rec.t_final, 4001)
    dense = rec.sample_many(tt)
    qhat_max = float(max(np.max(dense[:, 0]), qh0))

    if qh0 >= thresh:
        shat_max, that_star = sh0, 0.0
    else:
        hits = [h for h in rec.hits if h.name == "qhat-crossing"]
        if hits:
            that_star = hits[0].t
            shat_max = float(hits[0].y[1])
        else:
            k = int(np.argmax(dense[:, 1]))
            that_star, shat_max = float(tt[k]), float(dense[k, 1])
    return QsHatResult(rec, shat_max, that_star, qhat_max)


@dataclass(frozen=True)
class ThresholdConstants:
    """Decay/drift constants controlling the explicit subcritical bound.

    C_q bounds (t+1) q(t); C_s bounds (t+1)^n s(t); C = C(q0, s0) bounds
    the total forcing drift of w; gamma = C_q (n-1) - 2 > 0 is the decay
    exponent entering D_crit.
    """

    C_q: float
    C_s: float
    C: float
    gamma: float


def compute_threshold_constants(params: ModelParams, y0: tuple,
                                config: IntegratorConfig = DEFAULT_CONFIG
                                ) -> ThresholdConstants:
    if params.n <= 2:
        raise ValueError("threshold constants require n > 2 "
                         "(the n = 2 regime has only the numeric classifier)")
    if params.c != 0.0:
        raise ValueError("threshold constants apply to the zero-background case")
    q0, s0 = y0
    if s0 <= 0:
        raise ValueError("s0 must be positive")

    n, kappa = params.n, params.kappa
    res = qshat_integrate(params, (q0, s0), config)
    c_q = max(res.qhat_max, 1.0)
    c_s = res.shat_max * math.exp((n - 2.0) * res.that_star
                                  + n * (n - 2.0) / 2.0)
    c_drift = kappa / (n - 2.0) * (c_s / s0) ** ((n - 1.0) / n)
    gamma = c_q * (n - 1.0) - 2.0
    if gamma <= 0.0:
        raise ValueError(f"gamma = {gamma} <= 0; bound degenerates")
    return ThresholdConstants(C_q=c_q, C_s=c_s, C=c_drift, gamma=gamma)


def compute_dcrit(v0: float, gamma: float, kappa: float,
                  z_tol: float = 1e-12) -> float:
    """Largest drift D keeping y(t) = v0 + (kappa/(gamma+1) - D) t
    - kappa/(gamma (gamma+1)) (1 - (t+1)^-gamma) positive forever.

    For v0 >= kappa/(gamma (gamma+1)) every D < kappa/(gamma+1) works;
    below that, D_crit = kappa/(gamma+1) (1 - z_*) with z_* the unique
    root in (0, 1) of the minimum-value function
    F(z) = v0 + (kappa/gamma) z^(gamma/(gamma+1))
    - kappa/(gamma+1) (z + 1/gamma), located by bisection (F is
    increasing with F(0) < 0 < F(1)).
    """
    if v0 <= 0 or gamma <= 0 or kappa <= 0:
        raise ValueError("compute_dcrit requires positive v0, gamma, kappa")
    d_max = kappa / (gamma + 1.0)
    if v0 >= kappa / (gamma * (gamma + 1.0)):
        return d_max

    def f(z):
        return (v0 + kappa / gamma * z ** (gamma / (gamma + 1.0))
                - d_max * (z + 1.0 / gamma))

    lo, hi = 0.0, 1.0
    while hi - lo > z_tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    z_star = 0.5 * (lo + hi)
    return d_max * (1.0 - z_star)


def explicit_sigma_plus(v0: float, constants: ThresholdConstants,
                        kappa: float, n: float) -> float:
    """Explicit sufficient threshold on w0 = p0/rho0 (zero background).

    Returns the number -sigma_+(v0): every state with
    w0 > -sigma_+(1/rho0) is guaranteed globally bounded.  Requires
    n >= 3 and C_s < n - 2 (otherwise the bound degenerates).
    """
    if n < 3:
        raise ValueError("the explicit bound is available for n >= 3")
    if constants.C_s >= n - 2.0:
        raise ValueError(f"C_s = {constants.C_s:.6g} >= n - 2; bound degenerates")
    d_crit = compute_dcrit(v0, constants.gamma, kappa)
    num = -d_crit + constants.C_s * (v0 / (n - 1.0) + constants.C / (n - 2.0))
    return num / (1.0 - constants.C_s / (n - 2.0))
