"""Acceptance criteria for the switched controller and simulator.

Each criterion is a standalone check with its tolerances pinned here; the
CLI ``verify`` command and the acceptance test module both run this list.
Expensive closed-loop runs are memoized so criteria sharing a scenario
(e.g. the mode-independence and rate checks) pay for it once.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import flc, mecanum
from .baselines import BaselineGains
from .bridge import LiveSession, OperatorCommand
from .config import bundled_config
from .engine import (NoiseState, SimLog, SwitchSchedule, decay_rate_estimate,
                     default_gain_set, run_scenario)
from .mecanum import ExtendedState, wrap_angle
from .references import circle_reference, line_reference

CIRCLE_R = 8.0
CIRCLE_OMEGA = 0.15
S0_CIRCLE = (0.0, -4.0, 0.0, 0.5, 0.0)
# four switches; dexterous windows kept short so the sagittal speed stays
# well away from zero whenever the energy-saving mode takes over
SQUARE_WAVE = ((0.0, 1), (2.0, 0), (14.0, 1), (16.0, 0), (28.0, 1))


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str
    seconds: float


@lru_cache(maxsize=32)
def _cached_run(ref_kind: str, heading_offset: float | None, schedule, s0, dt: float,
                duration: float, noise_seed: int | None, controller: str) -> SimLog:
    if ref_kind == "circle":
        kw = {} if heading_offset is None else {"heading_offset": heading_offset}
        ref = circle_reference(CIRCLE_R, CIRCLE_OMEGA, **kw)
    else:
        ref = line_reference()
    noise = None if noise_seed is None else NoiseState(rng_seed=noise_seed)
    ctrl = default_gain_set() if controller == "unified" else BaselineGains()
    return run_scenario("mecanum", ctrl, ref, SwitchSchedule(schedule), noise,
                        ExtendedState(*s0), dt, duration)


def _e1_norm(log: SimLog) -> np.ndarray:
    return np.hypot(log.e1[:, 0], log.e1[:, 1])


def criterion_determinant_identity(dt: float) -> tuple[bool, str]:
    """Mode-selected determinant equals the convex read of the two mode
    determinants and the closed form, over randomized states."""
    rng = np.random.default_rng(20240601)
    n = 10_000
    states = np.column_stack([
        rng.uniform(-10, 10, n), rng.uniform(-10, 10, n),
        rng.uniform(-math.pi, math.pi, n),
        rng.uniform(-3, 3, n), rng.uniform(-3, 3, n),
    ])
    full = {0: np.empty((n, 3, 3)), 1: np.empty((n, 3, 3))}
    for i in range(n):
        blocks = mecanum.interaction_blocks(ExtendedState(*states[i]))
        full[1][i] = flc.compose_interaction_matrix(blocks, 1)
        full[0][i] = flc.compose_interaction_matrix(blocks, 0)
    det1 = np.linalg.det(full[1])
    det0 = np.linalg.det(full[0])
    v1 = states[:, 3]
    worst_identity = 0.0
    worst_closed = 0.0
    for sigma, det in ((1, det1), (0, det0)):
        identity = np.abs(det - (sigma * det1 + (1 - sigma) * det0)).max()
        closed = np.abs(det - (sigma - (1 - sigma) * v1)).max()
        worst_identity = max(worst_identity, identity)
        worst_closed = max(worst_closed, closed)
    ok = worst_identity < 1e-10 and worst_closed < 1e-12
    return ok, (f"identity residual {worst_identity:.2e} (<1e-10), "
                f"closed-form residual {worst_closed:.2e} (<1e-12), n={n}")


def criterion_sigma_independence(dt: float) -> tuple[bool, str]:
    """Position-error trace unchanged between an always-dexterous run and a
    four-switch square wave (noise off, same start)."""
    tol = 1e-6 * (dt / 1e-3) ** 4  # integrator error is fourth order in dt
    log_a = _cached_run("circle", None, ((0.0, 1),), S0_CIRCLE, dt, 40.0, None, "unified")
    log_b = _cached_run("circle", None, SQUARE_WAVE, S0_CIRCLE, dt, 40.0, None, "unified")
    sup = float(np.abs(log_a.e1 - log_b.e1).max())
    return sup < tol, f"sup|e1_A - e1_B| = {sup:.3e} (<{tol:.1e})"


def criterion_exponential_rates(dt: float) -> tuple[bool, str]:
    """Fitted log-slopes match the placed poles; first-order channels also
    match their analytic exponentials pointwise."""
    log_dex = _cached_run("circle", None, ((0.0, 1),), S0_CIRCLE, dt, 40.0, None, "unified")
    # start on the circle with matched speed and a unit transversal offset, so the
    # e3 channel is exposed while the sagittal speed stays away from zero
    s0_lat = (0.0, -8.0, 0.0, 1.2, 1.0)
    log_eco = _cached_run("circle", None, ((0.0, 0),), s0_lat, dt, 20.0, None, "unified")

    rate_e2 = decay_rate_estimate(log_dex, "e2", (2.0, 9.0))
    rate_e3 = decay_rate_estimate(log_eco, "e3", (1.0, 15.0))
    period = 2.0 * math.pi / math.sqrt(3.0 / 4.0)  # damped period of the position poles
    rate_e1 = decay_rate_estimate(log_dex, "e1", (3.0, 3.0 + 4.0 * period))

    checks = [abs(rate_e2 + 0.75) <= 0.02 * 0.75,
              abs(rate_e3 + 0.65) <= 0.02 * 0.65,
              abs(rate_e1 + 0.50) <= 0.05 * 0.50]

    # analytic pointwise oracles for the first-order channels
    err_e2 = float(np.abs(log_dex.e2 - log_dex.e2[0] * np.exp(-0.75 * log_dex.t)).max())
    err_e3 = float(np.abs(log_eco.e3 - log_eco.e3[0] * np.exp(-0.65 * log_eco.t)).max())
    checks += [err_e2 < 1e-6, err_e3 < 1e-6]
    return all(checks), (f"rates e2={rate_e2:.4f} (-0.75±2%), e3={rate_e3:.4f} (-0.65±2%), "
                         f"e1={rate_e1:.4f} (-0.50±5%); pointwise e2 {err_e2:.1e}, "
                         f"e3 {err_e3:.1e} (<1e-6)")


def criterion_continuity_vs_naive(dt: float) -> tuple[bool, str]:
    """At a dexterous-to-energy-saving switch carrying ~0.4 m/s of
    transversal speed, the unified controller stays state-continuous while
    the naive pair drops that speed in a single step."""
    offset = -math.asin(1.0 / 3.0)  # steady transversal speed r*omega/3 = 0.4
    sched = ((0.0, 1), (10.0, 0))
    uni = _cached_run("circle", offset, sched, S0_CIRCLE, dt, 20.0, None, "unified")
    nai = _cached_run("circle", offset, sched, S0_CIRCLE, dt, 20.0, None, "naive-pair")

    i_switch = round(10.0 / dt)
    v2_pre = float(uni.state[i_switch - 1, 4])
    dv2_uni = float(np.abs(np.diff(uni.state[:, 4])).max())
    bound = 10.0 * dt * float(np.abs(uni.u[:, 1]).max())
    dv2_nai = float(np.abs(np.diff(nai.state[:, 4])).max())
    ok = (abs(v2_pre - 0.4) <= 0.02) and (dv2_uni < bound) and (dv2_nai >= 0.39)
    return ok, (f"v2 before switch {v2_pre:.4f} (~0.4); unified max step |dv2| "
                f"{dv2_uni:.2e} < {bound:.2e}; naive single-step jump {dv2_nai:.4f} (>=0.39)")


def criterion_singularity_guard(dt: float) -> tuple[bool, str]:
    """Energy-saving mode at zero sagittal speed is refused, batch and live;
    logs stay free of non-finite values."""
    ref = circle_reference(CIRCLE_R, CIRCLE_OMEGA)
    raised = False
    try:
        run_scenario("mecanum", default_gain_set(), ref, SwitchSchedule.constant(0),
                     None, ExtendedState(0.0, -8.0, 0.0, 0.0, 0.0), dt, 1.0)
    except flc.SingularInteractionMatrix:
        raised = True

    # live contract: the mode command is refused, the session flags it and keeps running state finite
    session = LiveSession(reference=ref, gains=default_gain_set(),
                          s0=ExtendedState(0.0, -8.0, 0.0, 0.0, 0.0), dt=dt, sigma=1)
    session.submit(OperatorCommand(kind="set_sigma", sigma=0))
    frames = session.advance(0.1)
    refused = session.sigma == 1 and any(f.singular_flag for f in frames)

    log = _cached_run("circle", None, SQUARE_WAVE, S0_CIRCLE, dt, 40.0, 7, "unified")
    finite = all(np.all(np.isfinite(getattr(log, f))) for f in
                 ("t", "state", "u_cmd", "u", "e1", "e2", "e3", "noise", "power", "energy", "det"))
    ok = raised and refused and finite
    return ok, (f"batch raise={raised}, live refusal+flag={refused}, "
                f"noisy 40 s log all-finite={finite}")


def criterion_unicycle_heading(dt: float) -> tuple[bool, str]:
    """In energy-saving mode the body axis settles onto the velocity
    direction while the position keeps tracking."""
    log = _cached_run("circle", None, ((0.0, 0),), S0_CIRCLE, dt, 40.0, None, "unified")
    mask = log.t >= 20.0  # past the transient (||e1|| needs ~17 s to fall below 1e-3 from 4 m out)
    th = log.state[mask, 2]
    v1 = log.state[mask, 3]
    v2 = log.state[mask, 4]
    vel_heading = np.arctan2(v1 * np.sin(th) + v2 * np.cos(th),
                             v1 * np.cos(th) - v2 * np.sin(th))
    dth = np.array([abs(wrap_angle(a - b)) for a, b in zip(th, vel_heading)])
    worst_heading = float(dth.max())
    worst_e1 = float(_e1_norm(log)[mask].max())
    ok = worst_heading < 1e-3 and worst_e1 < 1e-3
    return ok, (f"max|heading - velocity direction| = {worst_heading:.2e} rad (<1e-3), "
                f"max||e1|| = {worst_e1:.2e} m (<1e-3) over t in [20, 40]")


def criterion_scenario_regressions(dt: float) -> tuple[bool, str]:
    """Bundled scenarios finish, converge noise-free, and stay bounded with
    the pinned noise process.

    Always runs the configs exactly as bundled (their own step size): the
    noisy RMS is a golden metric pinned to seed and discretization, and the
    Euler noise reading makes its stationary level scale with sqrt(dt).
    """
    details = []
    ok = True
    for name, bound_terminal in (("sim1_circle", 1e-3), ("sim2_line", 1e-3)):
        cfg = bundled_config(name)
        ref = cfg.build_reference()
        quiet = run_scenario(cfg.plant, cfg.build_controller(), ref, cfg.build_schedule(),
                             None, cfg.build_initial_state(), cfg.dt, cfg.duration)
        term = float(_e1_norm(quiet)[-1])
        cfg.noise.enabled = True
        noisy = run_scenario(cfg.plant, cfg.build_controller(), ref, cfg.build_schedule(),
                             cfg.build_noise(), cfg.build_initial_state(), cfg.dt, cfg.duration)
        # the deterministic settle from the far initial state is covered by the
        # terminal check; the noise bound pins the steady tracking band
        settled = noisy.t >= 0.5 * cfg.duration
        rms = float(np.sqrt(np.mean(_e1_norm(noisy)[settled] ** 2)))
        rerun = run_scenario(cfg.plant, cfg.build_controller(), ref, cfg.build_schedule(),
                             cfg.build_noise(), cfg.build_initial_state(), cfg.dt, cfg.duration)
        deterministic = noisy.equals(rerun)
        ok = ok and term < bound_terminal and rms < 0.2 and deterministic
        details.append(f"{name}: terminal ||e1||={term:.2e} (<1e-3), "
                       f"noisy settled RMS={rms:.3f} (<0.2), seed-deterministic={deterministic}")
    return ok, "; ".join(details)


def criterion_rk4_order(dt: float) -> tuple[bool, str]:
    """Richardson ratio of terminal-state errors when halving the step on a
    smooth no-switch run sits at fourth order."""
    ref = circle_reference(CIRCLE_R, CIRCLE_OMEGA)
    base_dt = 4e-3
    duration = 2.0

    def terminal(step):
        log = run_scenario("mecanum", default_gain_set(), ref, SwitchSchedule.constant(1),
                           None, ExtendedState(*S0_CIRCLE), step, duration)
        # unwrapped angle is what the integrator propagates; e2 recovers it exactly
        theta = float(log.e2[-1])
        row = log.state[-1]
        return np.array([row[0], row[1], theta, row[3], row[4]])

    ref_state = terminal(base_dt / 16.0)
    err_coarse = float(np.linalg.norm(terminal(base_dt) - ref_state))
    err_fine = float(np.linalg.norm(terminal(base_dt / 2.0) - ref_state))
    ratio = err_coarse / err_fine
    ok = 12.0 <= ratio <= 20.0
    return ok, (f"terminal errors {err_coarse:.3e} -> {err_fine:.3e}, "
                f"ratio {ratio:.2f} (in [12, 20])")


CRITERIA = (
    ("determinant identity", criterion_determinant_identity, 1.0),
    ("mode-independence of the main task", criterion_sigma_independence, 10.0),
    ("exponential error rates", criterion_exponential_rates, None),
    ("switch continuity vs naive pair", criterion_continuity_vs_naive, None),
    ("singularity guard", criterion_singularity_guard, None),
    ("unicycle-like heading in energy-saving mode", criterion_unicycle_heading, None),
    ("bundled scenario regressions", criterion_scenario_regressions, None),
    ("integrator order", criterion_rk4_order, None),
)


def run_criterion(index: int, dt: float = 1e-3) -> CriterionResult:
    name, fn, budget = CRITERIA[index - 1]
    start = time.perf_counter()
    try:
        passed, detail = fn(dt)
    except Exception as err:  # a crash is a failure with the reason attached
        passed, detail = False, f"raised {type(err).__name__}: {err}"
    elapsed = time.perf_counter() - start
    if budget is not None and elapsed >= budget:
        passed = False
        detail += f"; runtime {elapsed:.2f}s exceeded budget {budget:.0f}s"
    return CriterionResult(index, name, passed, detail, elapsed)


def run_all(dt: float = 1e-3) -> list[CriterionResult]:
    return [run_criterion(i, dt) for i in range(1, len(CRITERIA) + 1)]
