"""Deterministic closed-loop simulation.

Fixed-step integration of plant + controller + switching schedule +
actuation noise.  The feedback law is treated as continuous: it is
re-evaluated at every RK4 stage, so the closed loop is integrated at
fourth order (the plant-level ``rk4_step`` op keeps its zero-order-hold
contract for stepping with a frozen input).  The switching signal and the
filtered noise are held constant within a step; switch times must sit on
the integration grid so a step never straddles a mode change.

The unified-controller hot path uses scalar math and a closed-form
elimination of the composed 3x3 system (equivalent to the LU solve); the
generic path through the flc ops is retained behind ``fast=False`` and
the two are asserted equivalent in the test suite.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import flc, mecanum
from .baselines import BaselineGains, naive_dexterous, naive_energy_saving
from .flc import GainSet, SingularInteractionMatrix, VirtualInput, check_mode
from .mecanum import ControlInput, EnergyMeter, ExtendedState, wrap_angle
from .references import ReferenceTrajectory

DEFAULT_DT = 1e-3
DEFAULT_SINGULARITY_TOL = 1e-6
GRID_ALIGN_RTOL = 1e-9


def default_gain_set() -> GainSet:
    """Gains used by the bundled scenarios: unit position gains, 0.75 heading, 0.65 lateral."""
    eye2 = np.eye(2)
    return GainSet(position=(eye2, eye2),
                   heading=(np.array([[0.75]]),),
                   lateral=(np.array([[0.65]]),))


class ChannelUnderflow(RuntimeError):
    """Error channel too small inside the requested window for a log-slope fit."""


@dataclass(frozen=True)
class SwitchSchedule:
    """Right-continuous piecewise-constant switching signal on {0, 1}."""

    breakpoints: tuple[tuple[float, int], ...]

    def __post_init__(self):
        bps = tuple((float(t), check_mode(s)) for t, s in self.breakpoints)
        if not bps:
            raise ValueError("schedule needs at least one breakpoint")
        if bps[0][0] != 0.0:
            raise ValueError("first breakpoint must be at t=0")
        times = [t for t, _ in bps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("breakpoint times must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def constant(cls, sigma) -> "SwitchSchedule":
        return cls(((0.0, check_mode(sigma)),))

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.breakpoints)

    def value_at(self, t: float) -> int:
        idx = bisect_right(self.times, t) - 1
        if idx < 0:
            raise ValueError(f"schedule undefined for t={t} < 0")
        return self.breakpoints[idx][1]

    def contains_mode(self, sigma: int) -> bool:
        return any(s == sigma for _, s in self.breakpoints)

    def step_indices(self, dt: float) -> list[tuple[int, int]]:
        """Breakpoints as (grid index, sigma); every time must lie on the dt grid."""
        out = []
        for t, s in self.breakpoints:
            k = round(t / dt)
            if abs(t - k * dt) > GRID_ALIGN_RTOL * max(1.0, abs(t)):
                raise ValueError(f"switch time {t} is not an integer multiple of dt={dt}")
            out.append((k, s))
        return out

    def sigma_per_step(self, dt: float, n_steps: int) -> np.ndarray:
        """Signal sampled at grid indices 0..n_steps (integer-exact, no float compare)."""
        idx = self.step_indices(dt)
        sig = np.empty(n_steps + 1, dtype=np.int64)
        for (k, s), nxt in zip(idx, idx[1:] + [(n_steps + 1, 0)]):
            lo, hi = max(k, 0), min(nxt[0], n_steps + 1)
            if lo < hi:
                sig[lo:hi] = s
        return sig


@dataclass
class NoiseState:
    """Low-pass-filtered Gaussian actuation disturbance.

    dn/dt = -k n + mu with mu drawn once per step from N(0, q^2 I3) and
    held; advanced with explicit Euler.  Deterministic under a fixed seed.
    """

    k: float = 0.1
    q: float = 0.4
    rng_seed: int = 0
    n: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rng: np.random.Generator = None

    def __post_init__(self):
        if self.k <= 0.0:
            raise ValueError("filter pole k must be positive")
        if self.q < 0.0:
            raise ValueError("noise intensity q cannot be negative")
        self.n = np.asarray(self.n, dtype=float).copy()
        if self.n.shape != (3,) or not np.all(np.isfinite(self.n)):
            raise ValueError("noise state must be a finite 3-vector")
        if self.rng is None:
            self.rng = np.random.default_rng(self.rng_seed)


def noise_step(ns: NoiseState, dt: float) -> NoiseState:
    """Advance the filter one step; the returned state shares ns's generator."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    mu = ns.rng.normal(0.0, ns.q, 3)
    n = ns.n + dt * (-ns.k * ns.n + mu)
    return NoiseState(k=ns.k, q=ns.q, rng_seed=ns.rng_seed, n=n, rng=ns.rng)


def rk4_step(s: ExtendedState, u: ControlInput, dt: float) -> ExtendedState:
    """Classical RK4 update of the plant with the input frozen over the step."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    x0 = s.as_array()
    k1 = mecanum.state_derivative(s, u)
    k2 = mecanum.state_derivative(ExtendedState.from_array(x0 + 0.5 * dt * k1), u)
    k3 = mecanum.state_derivative(ExtendedState.from_array(x0 + 0.5 * dt * k2), u)
    k4 = mecanum.state_derivative(ExtendedState.from_array(x0 + dt * k3), u)
    x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x1)):
        raise RuntimeError(f"non-finite state after step from {x0}")
    return ExtendedState.from_array(x1)


@dataclass(frozen=True)
class ErrorState:
    """Tracking errors: position, heading, and negated transversal velocity."""

    e1: np.ndarray
    e2: float
    e3: float


def error_state(s: ExtendedState, ref: ReferenceTrajectory, t: float) -> ErrorState:
    y1d, _, _ = ref.position(t)
    y2d, _ = ref.heading(t)
    return ErrorState(e1=np.array([y1d[0] - s.x, y1d[1] - s.y]),
                      e2=y2d - s.theta,
                      e3=-s.v2)


class LogRow(NamedTuple):
    t: float
    x: float
    y: float
    theta: float     # wrapped for reporting
    v1: float
    v2: float
    u1_cmd: float
    u2_cmd: float
    u3_cmd: float
    u1: float        # post-noise (applied)
    u2: float
    u3: float
    sigma: int
    e1x: float
    e1y: float
    e2: float
    e3: float
    n1: float
    n2: float
    n3: float
    power: float
    energy: float
    det: float


_CSV_FIELDS = ("t", "x", "y", "theta", "v1", "v2", "u1", "u2", "u3", "sigma",
               "e1x", "e1y", "e2", "e3", "n1", "n2", "n3", "power", "energy", "detA")


@dataclass(eq=False)
class SimLog:
    """Column-major record of a run on a uniform time grid (rows = steps + 1)."""

    t: np.ndarray
    state: np.ndarray    # (N+1, 5): x, y, theta (wrapped), v1, v2
    u_cmd: np.ndarray    # (N+1, 3) controller output before noise
    u: np.ndarray        # (N+1, 3) applied input (after noise)
    sigma: np.ndarray    # (N+1,) int
    e1: np.ndarray       # (N+1, 2)
    e2: np.ndarray
    e3: np.ndarray
    noise: np.ndarray    # (N+1, 3)
    power: np.ndarray
    energy: np.ndarray
    det: np.ndarray

    csv_fields = _CSV_FIELDS

    def __post_init__(self):
        n = self.t.shape[0]
        shapes = {"state": (n, 5), "u_cmd": (n, 3), "u": (n, 3), "sigma": (n,),
                  "e1": (n, 2), "e2": (n,), "e3": (n,), "noise": (n, 3),
                  "power": (n,), "energy": (n,), "det": (n,)}
        for name, shape in shapes.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"log column {name} has shape {getattr(self, name).shape}, expected {shape}")
        for name in ("t", "state", "u_cmd", "u", "sigma", "e1", "e2", "e3",
                     "noise", "power", "energy", "det"):
            getattr(self, name).flags.writeable = False

    @property
    def n_steps(self) -> int:
        return self.t.shape[0] - 1

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def csv_column(self, name: str) -> np.ndarray:
        cols = {"t": self.t,
                "x": self.state[:, 0], "y": self.state[:, 1], "theta": self.state[:, 2],
                "v1": self.state[:, 3], "v2": self.state[:, 4],
                "u1": self.u[:, 0], "u2": self.u[:, 1], "u3": self.u[:, 2],
                "sigma": self.sigma,
                "e1x": self.e1[:, 0], "e1y": self.e1[:, 1], "e2": self.e2, "e3": self.e3,
                "n1": self.noise[:, 0], "n2": self.noise[:, 1], "n3": self.noise[:, 2],
                "power": self.power, "energy": self.energy, "detA": self.det}
        return cols[name]

    def equals(self, other: "SimLog") -> bool:
        """Exact (bitwise) column equality; the determinism contract."""
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("t", "state", "u_cmd", "u", "sigma", "e1", "e2", "e3",
                             "noise", "power", "energy", "det"))

    @classmethod
    def from_rows(cls, rows: list[LogRow]) -> "SimLog":
        arr = np.asarray(rows, dtype=float)
        return cls(t=arr[:, 0].copy(),
                   state=arr[:, 1:6].copy(),
                   u_cmd=arr[:, 6:9].copy(),
                   u=arr[:, 9:12].copy(),
                   sigma=arr[:, 12].astype(np.int64),
                   e1=arr[:, 13:15].copy(),
                   e2=arr[:, 15].copy(),
                   e3=arr[:, 16].copy(),
                   noise=arr[:, 17:20].copy(),
                   power=arr[:, 20].copy(),
                   energy=arr[:, 21].copy(),
                   det=arr[:, 22].copy())


class ScenarioStepper:
    """Incremental unified-controller simulation; one caller-supplied mode per step.

    ``step(sigma)`` returns the log row at the current grid point and
    advances one step with that mode and the current noise value held.
    ``snapshot(sigma)`` returns the row without advancing (used for the
    final log row and for live telemetry).  Batch runs and the live bridge
    drive this same object, which is what makes their outputs identical.
    """

    def __init__(self, reference: ReferenceTrajectory, gains: GainSet,
                 s0: ExtendedState, dt: float, noise: NoiseState | None = None,
                 singularity_tol: float = DEFAULT_SINGULARITY_TOL, fast: bool = True):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        if len(gains.position) != 2 or gains.position[0].shape != (2, 2):
            raise ValueError("unified controller needs two 2x2 position gain matrices")
        if len(gains.heading) != 1 or len(gains.lateral) != 1 or gains.heading[0].shape != (1, 1):
            raise ValueError("unified controller needs scalar heading and lateral gains")
        self.reference = reference
        self.gains = gains
        self.dt = float(dt)
        self.tol = float(singularity_tol)
        self.fast = bool(fast)
        self.noise = noise
        self.step_index = 0
        self._x = (s0.x, s0.y, s0.theta, s0.v1, s0.v2)
        self._n = (0.0, 0.0, 0.0) if noise is None else tuple(noise.n)
        self._meter = EnergyMeter(0.0, mecanum.power(s0))
        # gain scalars for the fast path
        L1, L2 = gains.position
        self._l1 = (L1[0, 0], L1[0, 1], L1[1, 0], L1[1, 1])
        self._l2 = (L2[0, 0], L2[0, 1], L2[1, 0], L2[1, 1])
        self._lh = float(gains.heading[0][0, 0])
        self._ll = float(gains.lateral[0][0, 0])

    @property
    def t(self) -> float:
        return self.step_index * self.dt

    @property
    def state(self) -> ExtendedState:
        return ExtendedState(*self._x)

    def would_be_singular(self, sigma) -> bool:
        det = mecanum.det_sigma(self.state, sigma)
        return abs(det) <= self.tol

    def reset(self, s0: ExtendedState, noise: NoiseState | None = None) -> None:
        self.step_index = 0
        self._x = (s0.x, s0.y, s0.theta, s0.v1, s0.v2)
        self.noise = noise
        self._n = (0.0, 0.0, 0.0) if noise is None else tuple(noise.n)
        self._meter = EnergyMeter(0.0, mecanum.power(s0))

    def _control_fast(self, tau, x, sigma):
        """Pre-noise input (u1, u2, u3): closed-form elimination of the composed system."""
        px, py, th, v1, v2 = x
        (y1dx, y1dy), (dy1dx, dy1dy), (ddy1dx, ddy1dy) = self.reference.position(tau)
        y2d, dy2d = self.reference.heading(tau)
        c, si = math.cos(th), math.sin(th)
        dxw = v1 * c - v2 * si
        dyw = v1 * si + v2 * c
        e0x, e0y = y1dx - px, y1dy - py
        e1x, e1y = dy1dx - dxw, dy1dy - dyw
        l1 = self._l1
        l2 = self._l2
        wx = ddy1dx + l1[0] * e0x + l1[1] * e0y + l2[0] * e1x + l2[1] * e1y
        wy = ddy1dy + l1[2] * e0x + l1[3] * e0y + l2[2] * e1x + l2[3] * e1y
        a13 = -dyw  # -(v1 sin + v2 cos)
        a23 = dxw
        if sigma == 1:
            u3 = dy2d + self._lh * (y2d - th)
            r1 = wx - a13 * u3
            r2 = wy - a23 * u3
            return c * r1 + si * r2, -si * r1 + c * r2, u3
        det = -v1
        if abs(det) <= self.tol:
            raise SingularInteractionMatrix(det, 0, t=tau, state=np.array(x))
        u2 = -self._ll * v2
        r1 = wx + si * u2
        r2 = wy - c * u2
        inv = 1.0 / det
        u1 = (-a23 * r1 + a13 * r2) * inv
        u3 = (si * r1 - c * r2) * inv
        return u1, u2, u3

    def _control_generic(self, tau, x, sigma):
        """Same input through the generic flc ops; the reference path."""
        s = ExtendedState(*x)
        blocks = mecanum.interaction_blocks(s)
        out = mecanum.output_stack(s)
        y1d, dy1d, ddy1d = self.reference.position(tau)
        y2d, dy2d = self.reference.heading(tau)
        v1v = flc.tracking_virtual_input(1, [y1d, dy1d, ddy1d], [out.y1, out.dy1], self.gains)
        v2v = flc.tracking_virtual_input(2, [[y2d], [dy2d]], [[out.y2]], self.gains)
        v3v = flc.tracking_virtual_input(3, [[0.0], [0.0]], [[out.y3]], self.gains)
        try:
            u = flc.control_input(blocks, VirtualInput(v1v, v2v, v3v), sigma, self.tol)
        except SingularInteractionMatrix as err:
            raise SingularInteractionMatrix(err.det, sigma, t=tau, state=np.array(x)) from None
        return float(u[0]), float(u[1]), float(u[2])

    def _control(self, tau, x, sigma):
        if self.fast:
            return self._control_fast(tau, x, sigma)
        return self._control_generic(tau, x, sigma)

    def _rhs(self, tau, x, sigma, n):
        u1, u2, u3 = self._control(tau, x, sigma)
        px, py, th, v1, v2 = x
        c, si = math.cos(th), math.sin(th)
        return (v1 * c - v2 * si, v1 * si + v2 * c, u3 + n[2], u1 + n[0], u2 + n[1])

    def _row(self, sigma, energy) -> LogRow:
        t = self.t
        px, py, th, v1, v2 = self._x
        n1, n2, n3 = self._n
        u1c, u2c, u3c = self._control(t, self._x, sigma)
        y1d, _, _ = self.reference.position(t)
        y2d, _ = self.reference.heading(t)
        s = check_mode(sigma)
        return LogRow(t=t, x=px, y=py, theta=wrap_angle(th), v1=v1, v2=v2,
                      u1_cmd=u1c, u2_cmd=u2c, u3_cmd=u3c,
                      u1=u1c + n1, u2=u2c + n2, u3=u3c + n3,
                      sigma=s,
                      e1x=y1d[0] - px, e1y=y1d[1] - py, e2=y2d - th, e3=-v2,
                      n1=n1, n2=n2, n3=n3,
                      power=v1 * v1 + 2.0 * v2 * v2, energy=energy,
                      det=float(s - (1 - s) * v1))

    def snapshot(self, sigma) -> LogRow:
        return self._row(sigma, self._meter.accumulated_energy)

    def step(self, sigma) -> LogRow:
        """Log the current grid point, then advance one step under this mode."""
        s = check_mode(sigma)
        row = self.snapshot(s)
        t, dt, x, n = self.t, self.dt, self._x, self._n
        k1 = self._rhs(t, x, s, n)
        h2 = 0.5 * dt
        x2 = tuple(x[i] + h2 * k1[i] for i in range(5))
        k2 = self._rhs(t + h2, x2, s, n)
        x3 = tuple(x[i] + h2 * k2[i] for i in range(5))
        k3 = self._rhs(t + h2, x3, s, n)
        x4 = tuple(x[i] + dt * k3[i] for i in range(5))
        k4 = self._rhs(t + dt, x4, s, n)
        h6 = dt / 6.0
        xn = tuple(x[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(5))
        for v in xn:
            if not math.isfinite(v):
                raise RuntimeError(f"non-finite state at t={t + dt:.6f} (from {x})")
        self._x = xn
        if self.noise is not None:
            self.noise = noise_step(self.noise, dt)
            self._n = tuple(self.noise.n)
        self.step_index += 1
        self._meter.advance(xn[3] * xn[3] + 2.0 * xn[4] * xn[4], dt)
        return row


class _NaivePairRun:
    """Hard-switched pair of per-mode baseline controllers (the broken design).

    Dexterous mode acts at velocity level on the pose; energy-saving mode
    integrates the sagittal speed and pins the transversal one to zero.
    The u columns of the log carry the mode-native commands.
    """

    def __init__(self, reference, gains: BaselineGains, s0: ExtendedState, dt: float,
                 noise: NoiseState | None):
        self.reference = reference
        self.g = gains
        self.dt = float(dt)
        self.noise = noise
        self._n = (0.0, 0.0, 0.0) if noise is None else tuple(noise.n)
        self.step_index = 0
        self._pose = (s0.x, s0.y, s0.theta)
        self._v1 = s0.v1
        self._meter = EnergyMeter(0.0, mecanum.power(s0))

    @property
    def t(self) -> float:
        return self.step_index * self.dt

    def _commands(self, tau, pose, v1_state, sigma):
        y1d, dy1d, ddy1d = self.reference.position(tau)
        y2d, dy2d = self.reference.heading(tau)
        if sigma == 1:
            return naive_dexterous(pose, y1d, dy1d, y2d, dy2d, self.g)
        state4 = (pose[0], pose[1], pose[2], v1_state)
        try:
            dv1, v3 = naive_energy_saving(state4, y1d, dy1d, ddy1d, self.g)
        except SingularInteractionMatrix as err:
            raise SingularInteractionMatrix(err.det, 0, t=tau, state=np.array(state4)) from None
        return dv1, 0.0, v3

    def _rhs(self, tau, z, sigma, n):
        if sigma == 1:
            x, y, th = z
            v1c, v2c, v3c = self._commands(tau, (x, y, th), 0.0, 1)
            v1c, v2c, v3c = v1c + n[0], v2c + n[1], v3c + n[2]
            c, si = math.cos(th), math.sin(th)
            return (v1c * c - v2c * si, v1c * si + v2c * c, v3c)
        x, y, th, v1 = z
        dv1, _, v3 = self._commands(tau, (x, y, th), v1, 0)
        dv1, v3 = dv1 + n[0], v3 + n[2]
        c, si = math.cos(th), math.sin(th)
        return (v1 * c, v1 * si, v3, dv1)

    def _rk4(self, tau, z, sigma, n):
        dt = self.dt
        h2 = 0.5 * dt
        k1 = self._rhs(tau, z, sigma, n)
        k2 = self._rhs(tau + h2, tuple(z[i] + h2 * k1[i] for i in range(len(z))), sigma, n)
        k3 = self._rhs(tau + h2, tuple(z[i] + h2 * k2[i] for i in range(len(z))), sigma, n)
        k4 = self._rhs(tau + dt, tuple(z[i] + dt * k3[i] for i in range(len(z))), sigma, n)
        h6 = dt / 6.0
        zn = tuple(z[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(len(z)))
        for v in zn:
            if not math.isfinite(v):
                raise RuntimeError(f"non-finite state at t={tau + dt:.6f}")
        return zn

    def _row(self, sigma) -> LogRow:
        t = self.t
        x, y, th = self._pose
        n1, n2, n3 = self._n
        y1d, _, _ = self.reference.position(t)
        y2d, _ = self.reference.heading(t)
        if sigma == 1:
            v1c, v2c, v3c = self._commands(t, self._pose, 0.0, 1)
            v1, v2 = v1c, v2c
            u = (v1c, v2c, v3c)
            det = 1.0
        else:
            dv1, _, v3 = self._commands(t, self._pose, self._v1, 0)
            v1, v2 = self._v1, 0.0
            u = (dv1, 0.0, v3)
            det = self._v1
        return LogRow(t=t, x=x, y=y, theta=wrap_angle(th), v1=v1, v2=v2,
                      u1_cmd=u[0], u2_cmd=u[1], u3_cmd=u[2],
                      u1=u[0] + n1, u2=u[1] + n2, u3=u[2] + n3,
                      sigma=sigma,
                      e1x=y1d[0] - x, e1y=y1d[1] - y, e2=y2d - th, e3=-v2,
                      n1=n1, n2=n2, n3=n3,
                      power=v1 * v1 + 2.0 * v2 * v2,
                      energy=self._meter.accumulated_energy,
                      det=det)

    def step(self, sigma, prev_sigma) -> LogRow:
        if sigma == 0 and prev_sigma == 1:
            # hand-off: the extended mode inherits the commanded sagittal speed;
            # the transversal one is killed instantaneously (the demonstrated jump)
            v1c, _, _ = self._commands(self.t, self._pose, 0.0, 1)
            self._v1 = v1c
        row = self._row(sigma)
        t, n = self.t, self._n
        if sigma == 1:
            self._pose = self._rk4(t, self._pose, 1, n)
            v1c, v2c, _ = self._commands(t + self.dt, self._pose, 0.0, 1)
            new_power = v1c * v1c + 2.0 * v2c * v2c
        else:
            z = self._rk4(t, (*self._pose, self._v1), 0, n)
            self._pose, self._v1 = z[:3], z[3]
            new_power = self._v1 * self._v1
        if self.noise is not None:
            self.noise = noise_step(self.noise, self.dt)
            self._n = tuple(self.noise.n)
        self.step_index += 1
        self._meter.advance(new_power, self.dt)
        return row


def run_scenario(plant: str, controller, reference: ReferenceTrajectory,
                 schedule: SwitchSchedule, noise: NoiseState | None,
                 s0: ExtendedState, dt: float, duration: float, *,
                 fast: bool = True,
                 singularity_tol: float = DEFAULT_SINGULARITY_TOL) -> SimLog:
    """Closed-loop run on a uniform grid; returns the full log.

    ``controller`` is a GainSet (unified switched controller) or
    BaselineGains (hard-switched naive pair).  Switch times must be
    integer multiples of dt.  Raises SingularInteractionMatrix with time
    and state context if the active mode's decoupling matrix degenerates.
    """
    if plant != "mecanum":
        raise ValueError(f"unknown plant {plant!r}")
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    n_steps = round(duration / dt)
    if n_steps < 1 or abs(duration - n_steps * dt) > GRID_ALIGN_RTOL * max(1.0, duration):
        raise ValueError(f"duration {duration} is not an integer multiple of dt={dt}")
    sigma_seq = schedule.sigma_per_step(dt, n_steps)
    if schedule.contains_mode(0) and abs(s0.v1) <= singularity_tol:
        raise SingularInteractionMatrix(-s0.v1, 0, t=0.0, state=s0.as_array())

    rows: list[LogRow] = []
    if isinstance(controller, GainSet):
        stepper = ScenarioStepper(reference, controller, s0, dt, noise=noise,
                                  singularity_tol=singularity_tol, fast=fast)
        for i in range(n_steps):
            rows.append(stepper.step(int(sigma_seq[i])))
        rows.append(stepper.snapshot(int(sigma_seq[n_steps])))
    elif isinstance(controller, BaselineGains):
        run = _NaivePairRun(reference, controller, s0, dt, noise)
        prev = int(sigma_seq[0])
        for i in range(n_steps):
            rows.append(run.step(int(sigma_seq[i]), prev))
            prev = int(sigma_seq[i])
        if int(sigma_seq[n_steps]) == 0 and prev == 1:
            run._v1 = run._commands(run.t, run._pose, 0.0, 1)[0]
        rows.append(run._row(int(sigma_seq[n_steps])))
    else:
        raise TypeError(f"controller must be GainSet or BaselineGains, got {type(controller)}")
    return SimLog.from_rows(rows)


def decay_rate_estimate(log: SimLog, channel: str, window: tuple[float, float]) -> float:
    """Least-squares slope of log||e(t)|| over the window.

    For the mode-gated channels (e2, e3) the window must lie inside a
    constant-mode interval, otherwise the fitted rate has no meaning.
    """
    t_a, t_b = window
    if not t_a < t_b:
        raise ValueError("window must satisfy t_a < t_b")
    series = {"e1": np.hypot(log.e1[:, 0], log.e1[:, 1]),
              "e2": np.abs(log.e2),
              "e3": np.abs(log.e3)}.get(channel)
    if series is None:
        raise ValueError(f"channel must be e1, e2 or e3, got {channel!r}")
    mask = (log.t >= t_a) & (log.t <= t_b)
    if mask.sum() < 2:
        raise ValueError("window contains fewer than two samples")
    if channel in ("e2", "e3") and len(set(log.sigma[mask].tolist())) != 1:
        raise ValueError(f"window {window} spans a mode switch; {channel} rate is mode-dependent")
    vals = series[mask]
    if vals.min() < 1e-12:
        raise ChannelUnderflow(f"|{channel}| drops below 1e-12 inside {window}")
    slope = np.polyfit(log.t[mask], np.log(vals), 1)[0]
    return float(slope)
