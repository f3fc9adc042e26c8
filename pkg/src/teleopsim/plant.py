"""Simulated trainee-plus-exoskeleton plant.

Zero-torque baseline controller (partial arm-weight compensation minus a
small viscous residual) on top of a damping-only joint-space admittance,
integrated explicitly at the recording rate. Hard joint limits clamp the
angle and zero the velocity on the saturated axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .kinematics import KinematicParams


@lru_cache(maxsize=8)
def _limit_bounds(joint_limits):
    lo = tuple(l for l, _ in joint_limits)
    hi = tuple(h for _, h in joint_limits)
    return lo, hi


class PlantFault(RuntimeError):
    """Non-finite torque input reached the plant."""


@dataclass(frozen=True)
class PlantParams:
    """Admittance and baseline-controller parameters (placeholder defaults)."""

    joint_damping: tuple[float, ...] = (4.0,) * 6      # N*m*s/rad
    weight_comp: float = 0.65                          # arm-weight fraction
    baseline_viscous: tuple[float, ...] = (0.2,) * 6   # N*m*s/rad residual
    dt: float = 0.002                                  # s, 500 Hz

    def __post_init__(self) -> None:
        if len(self.joint_damping) != 6 or len(self.baseline_viscous) != 6:
            raise ValueError("six per-joint coefficients required")
        if min(self.joint_damping) <= 0:
            raise ValueError("joint damping must be positive")
        if not 0.0 <= self.weight_comp <= 1.0:
            raise ValueError("weight_comp must lie in [0, 1]")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class FollowerState:
    """Joint-space state of the follower arm."""

    q: tuple[float, ...]
    qdot: tuple[float, ...] = (0.0,) * 6
    t: float = 0.0


def _gravity(q, kin: KinematicParams):
    return _kernels.gravity_torques(
        q, kin.upper_arm_length, kin.forearm_length,
        kin.upper_arm_mass, kin.forearm_mass, kin.com_ratio, kin.gravity,
    )


def baseline_torques(q, qdot, params: PlantParams, kin: KinematicParams) -> np.ndarray:
    """Transparent-mode controller output: partial weight support minus
    a viscous residual."""
    tau_g = _gravity(q, kin)
    return np.array([
        params.weight_comp * tau_g[i] - params.baseline_viscous[i] * qdot[i]
        for i in range(6)
    ])


def plant_step(
    state: FollowerState,
    tau_coupling,
    tau_voluntary,
    params: PlantParams,
    kin: KinematicParams,
) -> FollowerState:
    """One admittance step under coupling, voluntary and baseline torques."""
    for i in range(6):
        if not (math.isfinite(tau_coupling[i]) and math.isfinite(tau_voluntary[i])):
            raise PlantFault(f"non-finite torque on joint {i + 1}")
    q, qdot = state.q, state.qdot
    tau_g = _gravity(q, kin)
    residual = 1.0 - params.weight_comp
    tau_net = tuple(
        tau_coupling[i] + tau_voluntary[i]
        - residual * tau_g[i]
        - params.baseline_viscous[i] * qdot[i]
        for i in range(6)
    )
    lo, hi = _limit_bounds(kin.joint_limits)
    out = _kernels.plant_advance(q, tau_net, params.joint_damping, params.dt, lo, hi)
    return FollowerState(q=out[:6], qdot=out[6:], t=state.t + params.dt)
