"""Four-Mecanum-wheel omnidirectional vehicle with dynamically extended velocities.

Planar rigid body with body-frame sagittal velocity v1, transversal
velocity v2 and turn rate.  The linear velocities are promoted to states
(integrators on their rates) so that both operating modes have well-defined
vector relative degrees; the remaining inputs are

    u1 = dv1/dt,  u2 = dv2/dt,  u3 = turn rate.

Outputs: position y1 = (x, y) (main task), heading y2 = theta (dexterous
mode) and transversal velocity y3 = v2 (driven to zero in energy-saving
mode).  The wheel-level map to the four wheel speeds is one-to-one and is
not modeled here; inputs stay at the (v1, v2, v3) level.

Transversal motion costs twice the sagittal power at equal speed, hence
the unit-normalized power model v1^2 + 2 v2^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flc import InteractionBlocks, RelativeDegree, check_mode

STATE_DIM = 5
RELATIVE_DEGREE = RelativeDegree(rho1=(2, 2), rho2=(1,), rho3=(1,))
RELATIVE_DEGREE.check_state_dimension(STATE_DIM)


class UndefinedHeading(ValueError):
    """Velocity heading requested at zero translational velocity."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    if -math.pi < a <= math.pi:
        return a
    m = math.fmod(math.pi - a, 2.0 * math.pi)
    if m < 0.0:
        m += 2.0 * math.pi
    return math.pi - m


@dataclass(frozen=True)
class ExtendedState:
    """Pose plus dynamically extended body-frame linear velocities.

    theta is stored as given (unwrapped); wrap only for reporting via
    ``theta_wrapped`` so heading references that grow without bound need
    no branch logic.
    """

    x: float
    y: float
    theta: float
    v1: float
    v2: float

    def __post_init__(self):
        for name in ("x", "y", "theta", "v1", "v2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"state field {name} is not finite")

    @property
    def theta_wrapped(self) -> float:
        return wrap_angle(self.theta)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, self.v1, self.v2])

    @classmethod
    def from_array(cls, arr) -> "ExtendedState":
        x, y, theta, v1, v2 = (float(v) for v in arr)
        return cls(x, y, theta, v1, v2)


@dataclass(frozen=True)
class ControlInput:
    """Physical input: linear-velocity rates and turn rate."""

    u1: float
    u2: float
    u3: float

    def __post_init__(self):
        for name in ("u1", "u2", "u3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"input field {name} is not finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3])

    @classmethod
    def from_array(cls, arr) -> "ControlInput":
        u1, u2, u3 = (float(v) for v in arr)
        return cls(u1, u2, u3)


@dataclass(frozen=True)
class OutputStack:
    """Outputs and the closed-form first derivative of the position block."""

    y1: np.ndarray   # (x, y)
    dy1: np.ndarray  # world-frame velocity
    y2: float        # theta
    y3: float        # v2


@dataclass
class EnergyMeter:
    """Trapezoidal accumulator of the unit-normalized power v1^2 + 2 v2^2."""

    accumulated_energy: float = 0.0
    instantaneous_power: float = 0.0

    def advance(self, new_power: float, dt: float) -> float:
        if new_power < 0.0:
            raise ValueError("power cannot be negative")
        self.accumulated_energy += 0.5 * dt * (self.instantaneous_power + new_power)
        self.instantaneous_power = new_power
        return self.accumulated_energy


def state_derivative(s: ExtendedState, u: ControlInput) -> np.ndarray:
    """Time derivative of (x, y, theta, v1, v2)."""
    c, si = math.cos(s.theta), math.sin(s.theta)
    return np.array([s.v1 * c - s.v2 * si,
                     s.v1 * si + s.v2 * c,
                     u.u3,
                     u.u1,
                     u.u2])


def interaction_blocks(s: ExtendedState) -> InteractionBlocks:
    """Decoupling blocks at the given state; drift is identically zero.

    Top rows (shared by both modes) are the position-block rows; the
    third row is (0, 0, 1) in dexterous mode and (0, 1, 0) in
    energy-saving mode.
    """
    c, si = math.cos(s.theta), math.sin(s.theta)
    a11 = np.array([[c, -si], [si, c]])
    a12 = np.array([[-s.v1 * si - s.v2 * c], [s.v1 * c - s.v2 * si]])
    return InteractionBlocks(
        a11=a11, a12=a12,
        a21=np.array([[0.0, 0.0]]), a22=np.array([[1.0]]),
        abar21=np.array([[0.0, 1.0]]), abar22=np.array([[0.0]]),
        b1=np.zeros(2), b2=np.zeros(1), b3=np.zeros(1),
    )


def output_stack(s: ExtendedState) -> OutputStack:
    """Exact closed-form outputs; no numerical differentiation."""
    c, si = math.cos(s.theta), math.sin(s.theta)
    return OutputStack(
        y1=np.array([s.x, s.y]),
        dy1=np.array([s.v1 * c - s.v2 * si, s.v1 * si + s.v2 * c]),
        y2=s.theta,
        y3=s.v2,
    )


def det_sigma(s: ExtendedState, sigma) -> float:
    """Closed-form determinant of the mode-selected decoupling matrix.

    1 in dexterous mode, -v1 in energy-saving mode: the latter is singular
    exactly when the vehicle has no sagittal speed.
    """
    sg = check_mode(sigma)
    return float(sg - (1 - sg) * s.v1)


def heading_of_velocity(s: ExtendedState) -> float:
    """Direction of the world-frame velocity; the angle a unicycle would show."""
    c, si = math.cos(s.theta), math.sin(s.theta)
    dx = s.v1 * c - s.v2 * si
    dy = s.v1 * si + s.v2 * c
    if dx * dx + dy * dy == 0.0:
        raise UndefinedHeading("velocity heading undefined at zero translational velocity")
    return math.atan2(dy, dx)


def power(s: ExtendedState) -> float:
    """Unit-normalized instantaneous power; transversal motion costs double."""
    return s.v1 * s.v1 + 2.0 * s.v2 * s.v2
