"""Desired output trajectories with exact derivatives.

A reference supplies the position target with derivatives up to order two
and the heading target with its first derivative; the transversal-velocity
target is identically zero by construction.  Derivative channels are
spot-checked against central finite differences at construction so a
mismatched hand-derived derivative fails fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

_FD_STEP = 1e-5
_FD_TOL = 1e-6
_FD_TIMES = (0.0, 0.381, 1.7, 9.3, 23.0)

PositionFn = Callable[[float], tuple[tuple[float, float], tuple[float, float], tuple[float, float]]]
HeadingFn = Callable[[float], tuple[float, float]]


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Callable pair: position(t) -> (y1d, dy1d, ddy1d), heading(t) -> (y2d, dy2d)."""

    position: PositionFn
    heading: HeadingFn
    name: str = "custom"

    def __post_init__(self):
        h = _FD_STEP
        for t in _FD_TIMES:
            pm, p0, pp = self.position(t - h), self.position(t), self.position(t + h)
            hm, h0, hp = self.heading(t - h), self.heading(t), self.heading(t + h)
            for k in range(2):
                fd1 = (pp[0][k] - pm[0][k]) / (2 * h)
                fd2 = (pp[1][k] - pm[1][k]) / (2 * h)
                if abs(fd1 - p0[1][k]) > _FD_TOL or abs(fd2 - p0[2][k]) > _FD_TOL:
                    raise ValueError(f"reference '{self.name}': position derivatives inconsistent at t={t}")
            if abs((hp[0] - hm[0]) / (2 * h) - h0[1]) > _FD_TOL:
                raise ValueError(f"reference '{self.name}': heading derivative inconsistent at t={t}")


def circle_reference(r: float, omega: float, heading_offset: float = math.pi / 2) -> ReferenceTrajectory:
    """Circular position target of radius r at angular rate omega.

    The heading target leads the motion direction by heading_offset; the
    default quarter-turn makes the dexterous mode carry the body sideways
    (load reorientation), which is what makes that mode expensive.
    """
    if r <= 0.0:
        raise ValueError("circle radius must be positive")
    if omega == 0.0:
        raise ValueError("circle rate must be nonzero")

    def position(t: float):
        wt = omega * t
        s, c = math.sin(wt), math.cos(wt)
        return ((r * s, -r * c),
                (r * omega * c, r * omega * s),
                (-r * omega * omega * s, r * omega * omega * c))

    def heading(t: float):
        return (omega * t + heading_offset, omega)

    return ReferenceTrajectory(position, heading, name="circle")


def line_reference() -> ReferenceTrajectory:
    """Diagonal ramp from (5, 5) at constant velocity with a fixed heading target."""

    def position(t: float):
        return ((5.0 + 0.25 * t, 5.0 + 0.25 * t), (0.25, 0.25), (0.0, 0.0))

    def heading(t: float):
        return (0.75 * math.pi, 0.0)

    return ReferenceTrajectory(position, heading, name="line")


def polynomial_reference(x_coeffs, y_coeffs, heading_coeffs) -> ReferenceTrajectory:
    """Polynomial targets; coefficients in increasing order of t."""
    xc = tuple(float(c) for c in x_coeffs)
    yc = tuple(float(c) for c in y_coeffs)
    hc = tuple(float(c) for c in heading_coeffs)
    if not (xc and yc and hc):
        raise ValueError("polynomial reference needs at least one coefficient per channel")

    def _eval(coeffs, t, order):
        # order-th derivative of sum c_k t^k, Horner on the shifted coefficients
        acc = 0.0
        for k in range(len(coeffs) - 1, order - 1, -1):
            fac = 1.0
            for j in range(order):
                fac *= k - j
            acc = acc * t + coeffs[k] * fac
        return acc

    def position(t: float):
        return ((_eval(xc, t, 0), _eval(yc, t, 0)),
                (_eval(xc, t, 1), _eval(yc, t, 1)),
                (_eval(xc, t, 2), _eval(yc, t, 2)))

    def heading(t: float):
        return (_eval(hc, t, 0), _eval(hc, t, 1))

    return ReferenceTrajectory(position, heading, name="polynomial")
