"""Virtual model of the leader end-effector haptic device.

Cylindrical workspace clamping, translational force saturation, a binary
gripper, and a first-order servo of the end-effector toward the operator's
commanded position. The grasp force limit is metadata only: the gripper is
used purely as grab on/off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class DeviceLimits:
    """Force and workspace envelope of the leader device."""

    f_max_translation: float = 20.0   # N
    f_max_grasp: float = 8.0          # N, informational only
    workspace_diameter: float = 0.19  # m, cylinder about +z
    workspace_height: float = 0.13    # m

    def __post_init__(self) -> None:
        if min(self.f_max_translation, self.f_max_grasp,
               self.workspace_diameter, self.workspace_height) <= 0:
            raise ValueError("device limits must be positive")


@dataclass(frozen=True)
class LeaderState:
    """Device end-effector state plus the last force rendered to the hand."""

    pos: Vec3 = (0.0, 0.0, 0.0)
    vel: Vec3 = (0.0, 0.0, 0.0)
    grip_closed: bool = False
    feedback_force: Vec3 = (0.0, 0.0, 0.0)


def clamp_to_workspace(pos, limits: DeviceLimits) -> Vec3:
    """Clamp a point into the cylindrical workspace (radius and |z|)."""
    x, y, z = pos
    r_max = limits.workspace_diameter / 2.0
    r = math.hypot(x, y)
    if r > r_max:
        scale = r_max / r
        x *= scale
        y *= scale
    h = limits.workspace_height / 2.0
    if z > h:
        z = h
    elif z < -h:
        z = -h
    return (x, y, z)


def saturate_force(force, limits: DeviceLimits) -> Vec3:
    """Scale the force down to the translational limit, preserving direction."""
    fx, fy, fz = force
    norm = math.sqrt(fx * fx + fy * fy + fz * fz)
    f_max = limits.f_max_translation
    if norm <= f_max:
        return (fx, fy, fz)
    scale = f_max / norm
    return (fx * scale, fy * scale, fz * scale)


def device_step(
    state: LeaderState,
    operator_target,
    grip_cmd: bool,
    feedback,
    dt: float,
    limits: DeviceLimits = DeviceLimits(),
    tau_dev: float = 0.02,
) -> LeaderState:
    """First-order servo toward the workspace-clamped operator target.

    ``tau_dev`` is the device+hand response time constant; configure it to
    ~0 (e.g. 1e-9) for a deterministic pass-through mode.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    tx, ty, tz = clamp_to_workspace(operator_target, limits)
    alpha = 1.0 - math.exp(-dt / tau_dev) if tau_dev > 0 else 1.0
    px, py, pz = state.pos
    nx = px + (tx - px) * alpha
    ny = py + (ty - py) * alpha
    nz = pz + (tz - pz) * alpha
    return LeaderState(
        pos=(nx, ny, nz),
        vel=((nx - px) / dt, (ny - py) / dt, (nz - pz) / dt),
        grip_closed=grip_cmd,
        feedback_force=saturate_force(feedback, limits),
    )
