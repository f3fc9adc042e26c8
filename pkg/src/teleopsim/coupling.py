"""Virtual-coupling teleoperation controller.

Maps the leader end-effector into the follower frame (z-rotation, scale,
offset), runs the two-point grab state machine, computes the bilateral
spring-damper force pair, rotates the leader-side force back into the
leader frame, and maps the follower-side force to joint torques through
the point Jacobian transpose.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .kinematics import GraspablePoints

Vec3 = tuple[float, float, float]

GRASPABLE_POINTS = ("elbow", "wrist")


@dataclass(frozen=True)
class FrameMap:
    """Leader-to-follower frame transform: X' = Rz(theta) X * scale + offset.

    ``rotation_sign`` flips the rotation sense (the physical mounting could
    be either; tests pin the counterclockwise default).
    """

    theta: float = math.pi / 4
    c_scale: float = 10.0
    x_offset: Vec3 = (0.34, 0.0, 1.0)
    rotation_sign: int = 1

    def __post_init__(self) -> None:
        if self.c_scale <= 0:
            raise ValueError("c_scale must be positive")
        if self.rotation_sign not in (1, -1):
            raise ValueError("rotation_sign must be +1 or -1")

    @property
    def _cs(self) -> tuple[float, float]:
        a = self.rotation_sign * self.theta
        return math.cos(a), math.sin(a)


@dataclass(frozen=True)
class CouplingGains:
    """Spring-damper gains of the bilateral coupling."""

    p_s: float = 30.0   # N/m, leader side
    b_s: float = 0.1    # N*s/m
    p_a: float = 80.0   # N/m, follower side
    b_a: float = 4.0    # N*s/m

    def __post_init__(self) -> None:
        if min(self.p_s, self.b_s, self.p_a, self.b_a) < 0:
            raise ValueError("gains must be non-negative")


class GrabPhase(Enum):
    FREE = "free"
    NEAR = "near"
    ENGAGED = "engaged"


@dataclass(frozen=True)
class CouplingState:
    """Grab state machine plus the last computed coupling outputs."""

    phase: GrabPhase = GrabPhase.FREE
    point: str | None = None          # graspable point id while NEAR/ENGAGED
    grab_radius: float = 0.10         # m
    last_f_s: Vec3 = (0.0, 0.0, 0.0)  # leader frame
    last_f_a: Vec3 = (0.0, 0.0, 0.0)  # follower frame
    last_tau: tuple[float, ...] = (0.0,) * 6

    @property
    def engaged(self) -> bool:
        return self.phase is GrabPhase.ENGAGED


def map_leader_to_follower(x_s, fm: FrameMap) -> Vec3:
    """Leader position into the follower frame (rotate, scale, offset)."""
    c, s = fm._cs
    x, y, z = x_s
    ox, oy, oz = fm.x_offset
    k = fm.c_scale
    return (
        (c * x - s * y) * k + ox,
        (s * x + c * y) * k + oy,
        z * k + oz,
    )


def map_leader_velocity(v_s, fm: FrameMap) -> Vec3:
    """Leader velocity into the follower frame (rotate and scale only)."""
    c, s = fm._cs
    x, y, z = v_s
    k = fm.c_scale
    return ((c * x - s * y) * k, (s * x + c * y) * k, z * k)


def map_follower_to_leader(x_a, fm: FrameMap) -> Vec3:
    """Exact inverse of :func:`map_leader_to_follower`."""
    c, s = fm._cs
    ox, oy, oz = fm.x_offset
    k = fm.c_scale
    x = (x_a[0] - ox) / k
    y = (x_a[1] - oy) / k
    z = (x_a[2] - oz) / k
    return (c * x + s * y, -s * x + c * y, z)


def rotate_force_to_leader(f_follower_frame, fm: FrameMap) -> Vec3:
    """Rotate a force back into the leader frame; no scaling, no offset."""
    c, s = fm._cs
    x, y, z = f_follower_frame
    return (c * x + s * y, -s * x + c * y, z)


def _dist(a, b) -> float:
    return math.sqrt(
        (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2
    )


def update_grab_state(
    state: CouplingState,
    x_mapped,
    grip_closed: bool,
    points: GraspablePoints,
    breakaway_dist: float | None = None,
) -> CouplingState:
    """Advance the grab state machine one step.

    An engaged grab persists regardless of distance until the gripper
    opens; ``breakaway_dist`` optionally adds a safety release beyond a
    given separation (disabled by default).
    """
    radius = state.grab_radius
    if state.phase is GrabPhase.ENGAGED:
        if not grip_closed:
            return CouplingState(GrabPhase.FREE, None, radius)
        if breakaway_dist is not None:
            held = getattr(points, state.point)
            if _dist(x_mapped, held) > breakaway_dist:
                return CouplingState(GrabPhase.FREE, None, radius)
        return state

    d_elbow = _dist(x_mapped, points.elbow)
    d_wrist = _dist(x_mapped, points.wrist)
    nearest, d = ("elbow", d_elbow) if d_elbow <= d_wrist else ("wrist", d_wrist)
    if d > radius:
        if state.phase is GrabPhase.FREE and state.point is None:
            return state
        return CouplingState(GrabPhase.FREE, None, radius)
    if grip_closed:
        return CouplingState(GrabPhase.ENGAGED, nearest, radius)
    if state.phase is GrabPhase.NEAR and state.point == nearest:
        return state
    return CouplingState(GrabPhase.NEAR, nearest, radius)


def coupling_forces(x_mapped, v_mapped, x_a, v_a, gains: CouplingGains):
    """Bilateral spring-damper force pair for an engaged grab.

    Returns (f_s, f_a): the leader-side force still in the follower frame
    and the follower-side force. Callers gate on the grab being engaged.
    """
    out = _kernels.coupling_forces(
        x_mapped[0], x_mapped[1], x_mapped[2],
        v_mapped[0], v_mapped[1], v_mapped[2],
        x_a[0], x_a[1], x_a[2],
        v_a[0], v_a[1], v_a[2],
        gains.p_s, gains.b_s, gains.p_a, gains.b_a,
    )
    return (out[0], out[1], out[2]), (out[3], out[4], out[5])


def force_to_torques(jacobian, f_a, tau_max: float = 30.0) -> np.ndarray:
    """tau = J^T f with each component clamped to +-tau_max."""
    jac = np.asarray(jacobian, dtype=float).reshape(3, 6)
    flat = tuple(jac.reshape(-1))
    return np.asarray(
        _kernels.jac_t_force(flat, f_a[0], f_a[1], f_a[2], tau_max)
    )
