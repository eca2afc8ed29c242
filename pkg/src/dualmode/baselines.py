"""Naive per-mode controllers used to demonstrate the switching problem.

Two unrelated feedback-linearizing designs: a velocity-level pose tracker
for the dexterous mode and a dynamically extended forward-only tracker for
the energy-saving mode.  Hard-switching between them sets the transversal
velocity to zero instantaneously — the discontinuity the unified switched
controller avoids.  Making these safe across switches is explicitly not
the goal; their failure is the point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flc import SingularInteractionMatrix


@dataclass(frozen=True)
class BaselineGains:
    """Proportional gains for the pose tracker, PD gains for the extended one."""

    kp1: float = 1.0
    kp2: float = 1.0
    kp3: float = 1.0
    kd1: float = 1.0
    kd2: float = 1.0

    def __post_init__(self):
        for name in ("kp1", "kp2", "kp3", "kd1", "kd2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"baseline gain {name} must be strictly positive")


def naive_dexterous(pose, y1d, dy1d, theta_d, dtheta_d, g: BaselineGains) -> tuple[float, float, float]:
    """Velocity commands (v1, v2, v3) tracking position and heading independently.

    pose is (x, y, theta).  The body-to-world map is a rotation, always
    invertible, so this mode has no singularity.
    """
    x, y, theta = pose
    w = np.array([dy1d[0] + g.kp1 * (y1d[0] - x),
                  dy1d[1] + g.kp2 * (y1d[1] - y),
                  dtheta_d + g.kp3 * (theta_d - theta)])
    c, s = math.cos(theta), math.sin(theta)
    r = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    v = np.linalg.solve(r, w)
    return float(v[0]), float(v[1]), float(v[2])


def naive_energy_saving(state, y1d, dy1d, ddy1d, g: BaselineGains) -> tuple[float, float]:
    """Rate command (dv1/dt, v3) tracking position with v2 pinned to zero.

    state is (x, y, theta, v1).  The 2x2 map from (dv1/dt, v3) to the
    position acceleration is singular at v1 = 0, so the mode requires a
    nonzero sagittal speed.
    """
    x, y, theta, v1 = state
    c, s = math.cos(theta), math.sin(theta)
    dx, dy = v1 * c, v1 * s
    w1 = ddy1d[0] + g.kp1 * (y1d[0] - x) + g.kd1 * (dy1d[0] - dx)
    w2 = ddy1d[1] + g.kp2 * (y1d[1] - y) + g.kd2 * (dy1d[1] - dy)
    det = v1  # det [[c, -v1 s], [s, v1 c]]
    if det == 0.0:
        raise SingularInteractionMatrix(det, 0, state=np.asarray(state, dtype=float))
    a = np.array([[c, -v1 * s], [s, v1 * c]])
    sol = np.linalg.solve(a, np.array([w1, w2]))
    return float(sol[0]), float(sol[1])
