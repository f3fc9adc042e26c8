"""Kinematic chain of the simulated 6-DoF exoskeleton arm.

Joint order: q1 shoulder abduction/adduction, q2 shoulder flexion/extension,
q3 humeral internal/external rotation, q4 elbow flexion, q5 forearm
pronation/supination, q6 wrist flexion. Zero pose is the arm hanging
straight down in a right-handed frame with +z up and +x forward. Joints 5
and 6 articulate distal to the wrist joint center, so neither graspable
point (elbow, wrist) depends on them.

Segment lengths, masses and limits are configurable stand-ins, not values
published for any particular device.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

Vec3 = tuple[float, float, float]

DEFAULT_JOINT_LIMITS: tuple[tuple[float, float], ...] = (
    (-0.5, 2.0),   # shoulder abduction/adduction
    (-0.5, 2.8),   # shoulder flexion/extension
    (-1.2, 1.2),   # humeral rotation
    (0.0, 2.4),    # elbow flexion
    (-1.5, 1.5),   # pronation/supination
    (-1.0, 1.0),   # wrist flexion
)


class JointLimitError(ValueError):
    """A joint angle lies outside its configured range."""


@dataclass(frozen=True)
class KinematicParams:
    """Geometry and inertial stand-ins for the simulated arm."""

    shoulder_origin: Vec3 = (0.30, 0.0, 1.20)
    upper_arm_length: float = 0.30
    forearm_length: float = 0.25
    upper_arm_mass: float = 2.0
    forearm_mass: float = 1.5
    com_ratio: float = 0.45
    gravity: float = 9.81
    joint_limits: tuple[tuple[float, float], ...] = DEFAULT_JOINT_LIMITS

    def __post_init__(self) -> None:
        if self.upper_arm_length <= 0 or self.forearm_length <= 0:
            raise ValueError("segment lengths must be positive")
        if self.upper_arm_mass < 0 or self.forearm_mass < 0:
            raise ValueError("segment masses must be non-negative")
        if not 0.0 < self.com_ratio < 1.0:
            raise ValueError("com_ratio must lie in (0, 1)")
        if len(self.joint_limits) != 6:
            raise ValueError("exactly six joint limit pairs required")
        for lo, hi in self.joint_limits:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError("joint limits must be finite with lo < hi")


@dataclass(frozen=True)
class GraspablePoints:
    """World positions of the two graspable interaction points."""

    elbow: Vec3
    wrist: Vec3

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.elbow), np.asarray(self.wrist)


def check_joint_limits(q, params: KinematicParams) -> None:
    """Raise JointLimitError if any angle is outside its range."""
    for i, (lo, hi) in enumerate(params.joint_limits):
        if not lo <= q[i] <= hi:
            raise JointLimitError(
                f"q{i + 1}={q[i]:.4f} outside [{lo}, {hi}]"
            )


def clamp_joint_limits(q, params: KinematicParams) -> tuple[float, ...]:
    """Clamp each angle into its range (used for pose initialization)."""
    return tuple(
        min(max(q[i], lo), hi) for i, (lo, hi) in enumerate(params.joint_limits)
    )


def forward_kinematics(q, params: KinematicParams) -> GraspablePoints:
    """Positions of the elbow and wrist graspable points for joint vector q."""
    check_joint_limits(q, params)
    ox, oy, oz = params.shoulder_origin
    ex, ey, ez, wx, wy, wz = _kernels.fk_points(
        q, params.upper_arm_length, params.forearm_length, ox, oy, oz
    )
    return GraspablePoints(elbow=(ex, ey, ez), wrist=(wx, wy, wz))


def point_jacobian(q, point: str, params: KinematicParams) -> np.ndarray:
    """3x6 Jacobian of a graspable point; ``point`` is "elbow" or "wrist"."""
    check_joint_limits(q, params)
    if point not in ("elbow", "wrist"):
        raise ValueError(f"unknown graspable point {point!r}")
    flat = _kernels.point_jacobian(
        q, params.upper_arm_length, params.forearm_length, point == "wrist"
    )
    return np.asarray(flat).reshape(3, 6)


def gravity_torques(q, params: KinematicParams) -> np.ndarray:
    """Joint torques of the full gravity load, -dU/dq (N*m)."""
    check_joint_limits(q, params)
    return np.asarray(
        _kernels.gravity_torques(
            q,
            params.upper_arm_length,
            params.forearm_length,
            params.upper_arm_mass,
            params.forearm_mass,
            params.com_ratio,
            params.gravity,
        )
    )
