"""Generic switched feedback linearization.

Plant-agnostic core: a plant exposes the blocks of its two decoupling
matrices (one per operating mode) plus the drift terms, and this module
composes the mode-selected matrix, inverts it and turns virtual tracking
inputs into the physical input.  The switching signal ``sigma`` is a hard
{0, 1} selector; composition never blends the two modes numerically.

Convention for the tracking law: for a block of relative degree rho with
gain matrices L[0], ..., L[rho-1],

    v = ref^(rho) + sum_i L[i] @ (ref^(i) - out^(i)),   i = 0..rho-1

so the closed error channel obeys e^(rho) + sum_i L[i] e^(i) = 0 and the
gain list length always equals the relative degree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularInteractionMatrix(RuntimeError):
    """Composed decoupling matrix is (numerically) singular.

    Carries the offending determinant, the active mode and, when raised
    from inside a simulation, the time and state at which it happened.
    """

    def __init__(self, det, sigma, t=None, state=None):
        self.det = float(det)
        self.sigma = int(sigma)
        self.t = t
        self.state = state
        msg = f"interaction matrix singular (det={self.det:.3e}, sigma={self.sigma}"
        if t is not None:
            msg += f", t={t:.6f}"
        if state is not None:
            msg += f", state={np.asarray(state)}"
        super().__init__(msg + ")")


def check_mode(sigma) -> int:
    """Validate a switching-signal value; exactly 0 or 1, no interpolation."""
    s = int(sigma)
    if s != sigma or s not in (0, 1):
        raise ValueError(f"switching signal must be 0 or 1, got {sigma!r}")
    return s


@dataclass(frozen=True)
class RelativeDegree:
    """Per-block output differentiation orders (main, auxiliary, energy-intense)."""

    rho1: tuple[int, ...]
    rho2: tuple[int, ...]
    rho3: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "rho1", tuple(int(r) for r in self.rho1))
        object.__setattr__(self, "rho2", tuple(int(r) for r in self.rho2))
        object.__setattr__(self, "rho3", tuple(int(r) for r in self.rho3))
        for r in self.rho1 + self.rho2 + self.rho3:
            if r < 1:
                raise ValueError("relative degrees must be positive integers")
        if len(self.rho2) != len(self.rho3):
            raise ValueError("auxiliary and energy-intense blocks must have the same output count")

    @property
    def p1(self) -> int:
        return len(self.rho1)

    @property
    def p2(self) -> int:
        return len(self.rho2)

    def check_state_dimension(self, n: int) -> None:
        """Both mode-wise relative-degree sums must equal the state dimension."""
        if sum(self.rho1) + sum(self.rho2) != n:
            raise ValueError(f"dexterous relative degrees sum to {sum(self.rho1) + sum(self.rho2)}, state dim is {n}")
        if sum(self.rho1) + sum(self.rho3) != n:
            raise ValueError(f"energy-saving relative degrees sum to {sum(self.rho1) + sum(self.rho3)}, state dim is {n}")


@dataclass(frozen=True)
class InteractionBlocks:
    """Mode-specific decoupling-matrix blocks and drift terms.

    The two full matrices share their top rows (the main-task outputs are
    common to both modes):

        dexterous     A    = [[a11, a12], [a21,    a22   ]]
        energy-saving Abar = [[a11, a12], [abar21, abar22]]
    """

    a11: np.ndarray
    a12: np.ndarray
    a21: np.ndarray
    a22: np.ndarray
    abar21: np.ndarray
    abar22: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        for name in ("a11", "a12", "a21", "a22", "abar21", "abar22"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        for name in ("b1", "b2", "b3"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        p1, p2 = self.a11.shape[0], self.a22.shape[0]
        expected = {
            "a11": (p1, p1), "a12": (p1, p2),
            "a21": (p2, p1), "a22": (p2, p2),
            "abar21": (p2, p1), "abar22": (p2, p2),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"block {name} has shape {getattr(self, name).shape}, expected {shape}")
        for name, dim in (("b1", p1), ("b2", p2), ("b3", p2)):
            if getattr(self, name).shape != (dim,):
                raise ValueError(f"drift {name} has shape {getattr(self, name).shape}, expected ({dim},)")

    @property
    def p1(self) -> int:
        return self.a11.shape[0]

    @property
    def p2(self) -> int:
        return self.a22.shape[0]

    def full_dexterous(self) -> np.ndarray:
        return np.block([[self.a11, self.a12], [self.a21, self.a22]])

    def full_energy_saving(self) -> np.ndarray:
        return np.block([[self.a11, self.a12], [self.abar21, self.abar22]])


@dataclass(frozen=True)
class VirtualInput:
    """Assignable virtual inputs, one vector per output block."""

    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray

    def __post_init__(self):
        for name in ("v1", "v2", "v3"):
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if not np.all(np.isfinite(v)):
                raise ValueError(f"virtual input {name} has non-finite entries")
            object.__setattr__(self, name, v)
        if self.v2.shape != self.v3.shape:
            raise ValueError("v2 and v3 must have the same dimension")


# Gains are stable iff every companion eigenvalue satisfies Re < this bound.
STABILITY_MARGIN = -1e-9


def _companion(mats: tuple[np.ndarray, ...]) -> np.ndarray:
    """Block companion matrix of e^(rho) + sum_i L[i] e^(i) = 0."""
    rho = len(mats)
    m = mats[0].shape[0]
    comp = np.zeros((rho * m, rho * m))
    for i in range(rho - 1):
        comp[i * m:(i + 1) * m, (i + 1) * m:(i + 2) * m] = np.eye(m)
    for i, L in enumerate(mats):
        comp[(rho - 1) * m:, i * m:(i + 1) * m] = -L
    return comp


@dataclass(frozen=True)
class GainSet:
    """Tracking gains per output block, one matrix per derivative order.

    ``position`` closes the main task (always active), ``heading`` the
    auxiliary task (dexterous mode), ``lateral`` the energy-intense output
    (energy-saving mode).  Construction rejects gain lists whose companion
    dynamics are not strictly Hurwitz.
    """

    position: tuple[np.ndarray, ...]
    heading: tuple[np.ndarray, ...]
    lateral: tuple[np.ndarray, ...]

    def __post_init__(self):
        for name in ("position", "heading", "lateral"):
            mats = tuple(np.atleast_2d(np.asarray(L, dtype=float)) for L in getattr(self, name))
            if not mats:
                raise ValueError(f"{name} gain list is empty")
            m = mats[0].shape[0]
            for L in mats:
                if L.shape != (m, m):
                    raise ValueError(f"{name} gains must all be square of size {m}, got {L.shape}")
            object.__setattr__(self, name, mats)
            worst = max(np.linalg.eigvals(_companion(mats)).real)
            if worst >= STABILITY_MARGIN:
                raise ValueError(f"{name} gains give an unstable error channel (max Re(eig) = {worst:.3e})")
        if self.heading[0].shape != self.lateral[0].shape:
            raise ValueError("heading and lateral blocks must have the same output dimension")

    def block(self, j: int) -> tuple[np.ndarray, ...]:
        try:
            return {1: self.position, 2: self.heading, 3: self.lateral}[j]
        except KeyError:
            raise ValueError(f"block index must be 1, 2 or 3, got {j}") from None


def compose_interaction_matrix(blocks: InteractionBlocks, sigma) -> np.ndarray:
    """Mode-selected decoupling matrix; exact row selection, no blending."""
    s = check_mode(sigma)
    if s == 1:
        return blocks.full_dexterous()
    return blocks.full_energy_saving()


def compose_drift(blocks: InteractionBlocks, sigma) -> np.ndarray:
    """Mode-selected drift stack [b1; b2] (sigma=1) or [b1; b3] (sigma=0)."""
    s = check_mode(sigma)
    return np.concatenate([blocks.b1, blocks.b2 if s == 1 else blocks.b3])


def compose_virtual(v: VirtualInput, sigma) -> np.ndarray:
    """Mode-selected virtual input stack [v1; v2] (sigma=1) or [v1; v3] (sigma=0)."""
    s = check_mode(sigma)
    return np.concatenate([v.v1, v.v2 if s == 1 else v.v3])


def control_input(blocks: InteractionBlocks, v: VirtualInput, sigma,
                  singularity_tol: float = 1e-6) -> np.ndarray:
    """Physical input u solving A_sigma u = -b_sigma + v_sigma.

    Direct LU solve (no pseudo-inverse).  Raises SingularInteractionMatrix
    when |det| <= singularity_tol instead of regularizing: near-singular
    configurations are a planning problem, not a control-law one.
    """
    a = compose_interaction_matrix(blocks, sigma)
    det = float(np.linalg.det(a))
    if abs(det) <= singularity_tol:
        raise SingularInteractionMatrix(det, sigma)
    rhs = compose_virtual(v, sigma) - compose_drift(blocks, sigma)
    return np.linalg.solve(a, rhs)


def tracking_virtual_input(j: int, ref_derivs, out_derivs, gains: GainSet) -> np.ndarray:
    """Feedforward-plus-error-feedback virtual input for output block j.

    ref_derivs holds the reference and its derivatives up to order rho
    (rho+1 entries); out_derivs holds the measured output derivatives up
    to order rho-1 (rho entries).
    """
    mats = gains.block(j)
    rho = len(mats)
    ref = [np.atleast_1d(np.asarray(r, dtype=float)) for r in ref_derivs]
    out = [np.atleast_1d(np.asarray(o, dtype=float)) for o in out_derivs]
    if len(ref) != rho + 1:
        raise ValueError(f"block {j} needs {rho + 1} reference derivatives, got {len(ref)}")
    if len(out) != rho:
        raise ValueError(f"block {j} needs {rho} output derivatives, got {len(out)}")
    m = mats[0].shape[0]
    for arr in ref + out:
        if arr.shape != (m,):
            raise ValueError(f"block {j} vectors must have dimension {m}, got {arr.shape}")
    v = ref[rho].copy()
    for i in range(rho):
        v += mats[i] @ (ref[i] - out[i])
    return v


def closed_loop_error_poles(gains: GainSet, j: int) -> np.ndarray:
    """Eigenvalues of the closed error channel for block j."""
    return np.linalg.eigvals(_companion(gains.block(j)))
