"""Scripted operator stand-ins for batch runs.

The trainer policy drives the leader device through approach / grab /
transport / settle segments on minimum-jerk paths, guiding one graspable
point at a time (elbow first) and re-engaging whichever point has drifted
until the trial confirms. Trainee policies model the person in the
exoskeleton: ``passive`` (limp), ``compliant`` (supports own arm weight,
yields to guidance, returns to base when instructed), and ``imitation``
(drives toward the shown pose after a reaction delay; used for the
visual-demonstration condition).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels
from .coupling import FrameMap, GrabPhase, map_follower_to_leader
from .kinematics import KinematicParams
from .rng import Xoshiro256StarStar
from .tasks import Phase, PoseTarget

Vec3 = tuple[float, float, float]


def min_jerk(x0, xf, duration: float, t: float):
    """Minimum-jerk point between x0 and xf; t clamps to [0, duration]."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    s = t / duration
    if s <= 0.0:
        return tuple(x0)
    if s >= 1.0:
        return tuple(xf)
    blend = s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    return tuple(x0[i] + (xf[i] - x0[i]) * blend for i in range(3))


@dataclass(frozen=True)
class TrainerParams:
    approach_duration: float = 1.5   # s
    transport_duration: float = 2.5  # s
    settle_dist: float = 0.05        # m, per-point done criterion
    settle_time: float = 0.5         # s
    grab_radius: float = 0.10        # m, must match the controller's
    grab_patience: float = 0.3       # s to wait for engagement confirmation
    settle_patience: float = 4.0     # s before re-transporting


@dataclass
class WorldView:
    """What the trainer can see: follower points, grab state, trial state."""

    elbow: Vec3
    wrist: Vec3
    grab_phase: GrabPhase
    engaged_point: str | None
    trial_phase: Phase
    target: PoseTarget | None
    guidance_active: bool   # haptic condition and trial in a guidable phase


class TrainerPolicy:
    """Sequential single-point guidance through the leader device."""

    IDLE = "idle"
    APPROACH = "approach"
    GRAB = "grab"
    TRANSPORT = "transport"
    SETTLE = "settle"

    def __init__(self, frame_map: FrameMap, params: TrainerParams = TrainerParams()):
        self.fm = frame_map
        self.p = params
        self.phase = self.IDLE
        self.point: str | None = None
        self._seg_start: Vec3 = (0.0, 0.0, 0.0)
        self._seg_end: Vec3 = (0.0, 0.0, 0.0)
        self._seg_t0 = 0.0
        self._seg_duration = 1.0
        self._phase_t0 = 0.0
        self._settle_since: float | None = None
        self._leader_pos: Vec3 = (0.0, 0.0, 0.0)

    def _point_pos(self, world: WorldView, point: str) -> Vec3:
        return world.elbow if point == "elbow" else world.wrist

    def _point_target(self, world: WorldView, point: str) -> Vec3:
        tgt = world.target
        return tgt.elbow_target if point == "elbow" else tgt.wrist_target

    def _error(self, world: WorldView, point: str) -> float:
        a = self._point_pos(world, point)
        b = self._point_target(world, point)
        return math.dist(a, b)

    def _pick_point(self, world: WorldView) -> str | None:
        """Next point to guide: elbow first while both are off, then the
        one still outside the settle distance."""
        e = self._error(world, "elbow")
        w = self._error(world, "wrist")
        if e > self.p.settle_dist and w > self.p.settle_dist:
            return "elbow"
        if e > self.p.settle_dist:
            return "elbow"
        if w > self.p.settle_dist:
            return "wrist"
        return None

    def _begin_segment(self, end: Vec3, duration: float, t: float) -> None:
        self._seg_start = self._leader_pos
        self._seg_end = end
        self._seg_t0 = t
        self._seg_duration = duration

    def _enter(self, phase: str, t: float) -> None:
        self.phase = phase
        self._phase_t0 = t

    def step(self, world: WorldView, leader_pos: Vec3, t: float) -> tuple[Vec3, bool]:
        """Returns (operator target in the leader frame, grip command)."""
        self._leader_pos = leader_pos

        if not world.guidance_active or world.target is None:
            self._enter(self.IDLE, t)
            self.point = None
            return leader_pos, False

        if self.phase == self.IDLE:
            point = self._pick_point(world)
            if point is None:
                return leader_pos, False  # both settled; wait out the hold
            self.point = point
            self._begin_segment(
                map_follower_to_leader(self._point_pos(world, point), self.fm),
                self.p.approach_duration, t,
            )
            self._enter(self.APPROACH, t)

        if self.phase == self.APPROACH:
            target = min_jerk(self._seg_start, self._seg_end,
                              self._seg_duration, t - self._seg_t0)
            if t - self._seg_t0 >= self._seg_duration:
                mapped_dist = math.dist(
                    map_follower_to_leader(self._point_pos(world, self.point), self.fm),
                    leader_pos,
                ) * self.fm.c_scale
                if mapped_dist <= 0.8 * self.p.grab_radius:
                    self._enter(self.GRAB, t)
                    return leader_pos, True
                # point moved; re-approach from here
                self._begin_segment(
                    map_follower_to_leader(self._point_pos(world, self.point), self.fm),
                    self.p.approach_duration, t,
                )
                self._seg_t0 = t
            return target, False

        if self.phase == self.GRAB:
            if world.grab_phase is GrabPhase.ENGAGED and world.engaged_point == self.point:
                self._begin_segment(
                    map_follower_to_leader(self._point_target(world, self.point), self.fm),
                    self.p.transport_duration, t,
                )
                self._enter(self.TRANSPORT, t)
            elif t - self._phase_t0 > self.p.grab_patience:
                self._enter(self.IDLE, t)   # confirmation lost; retry
                return leader_pos, False
            else:
                return leader_pos, True

        if self.phase == self.TRANSPORT:
            target = min_jerk(self._seg_start, self._seg_end,
                              self._seg_duration, t - self._seg_t0)
            if t - self._seg_t0 >= self._seg_duration:
                self._settle_since = None
                self._enter(self.SETTLE, t)
            return target, True

        if self.phase == self.SETTLE:
            err = self._error(world, self.point)
            if err <= self.p.settle_dist:
                if self._settle_since is None:
                    self._settle_since = t
                if t - self._settle_since >= self.p.settle_time:
                    self._enter(self.IDLE, t)   # release, then switch point
                    return leader_pos, False
            else:
                self._settle_since = None
                if t - self._phase_t0 > self.p.settle_patience:
                    self._begin_segment(
                        map_follower_to_leader(self._point_target(world, self.point), self.fm),
                        self.p.transport_duration, t,
                    )
                    self._enter(self.TRANSPORT, t)
            return leader_pos, True

        return leader_pos, False


@dataclass(frozen=True)
class TraineeParams:
    mode: str = "compliant"          # passive | compliant | imitation
    kp: float = 8.0                  # N*m/rad
    kd: float = 1.0                  # N*m*s/rad
    reaction_delay: float = 0.8      # s
    noise_std: float = 0.05          # rad, zero-mean target perturbation
    noise_interval: float = 0.5      # s between noise resamples
    gravity_support: bool = True     # tonic support of the uncompensated load

    def __post_init__(self) -> None:
        if self.mode not in ("passive", "compliant", "imitation"):
            raise ValueError(f"unknown trainee mode {self.mode!r}")


def imitation_torques(q, qdot, q_target, elapsed: float,
                      kp: float = 8.0, kd: float = 1.0,
                      reaction_delay: float = 0.8):
    """Joint-space PD toward a shown pose, zero before the reaction delay."""
    if elapsed < reaction_delay:
        return (0.0,) * 6
    return tuple(kp * (q_target[i] - q[i]) - kd * qdot[i] for i in range(6))


class TraineePolicy:
    """Torque source modelling the person wearing the exoskeleton."""

    def __init__(self, params: TraineeParams, kin: KinematicParams,
                 weight_comp: float, seed: int = 0):
        self.p = params
        self.kin = kin
        self.weight_comp = weight_comp
        self._rng = Xoshiro256StarStar.for_stream(seed, "trainee-noise")
        self._noise = (0.0,) * 6
        self._noise_until = 0.0
        self._phase_seen: Phase | None = None
        self._phase_t0 = 0.0

    def _support(self, q):
        if not self.p.gravity_support or self.weight_comp >= 1.0:
            return (0.0,) * 6
        k = self.kin
        tau_g = _kernels.gravity_torques(
            q, k.upper_arm_length, k.forearm_length, k.upper_arm_mass,
            k.forearm_mass, k.com_ratio, k.gravity,
        )
        r = 1.0 - self.weight_comp
        return tuple(r * g for g in tau_g)

    def _drive_target(self, phase: Phase, target_q, base_q):
        if self.p.mode == "imitation" and phase in (Phase.REACHING, Phase.HOLDING):
            return target_q
        if phase is Phase.RETURN_TO_BASE:
            return base_q
        return None

    def torques(self, q, qdot, phase: Phase, target_q, base_q, t: float):
        if self.p.mode == "passive":
            return (0.0,) * 6
        if phase is not self._phase_seen:
            self._phase_seen = phase
            self._phase_t0 = t
        support = self._support(q)
        drive = self._drive_target(phase, target_q, base_q)
        if drive is None:
            return support
        elapsed = t - self._phase_t0
        if elapsed < self.p.reaction_delay:
            return support
        if self.p.noise_std > 0.0:
            if t >= self._noise_until:
                self._noise = tuple(
                    self._rng.gauss(0.0, self.p.noise_std) for _ in range(6)
                )
                self._noise_until = t + self.p.noise_interval
            drive = tuple(drive[i] + self._noise[i] for i in range(6))
        pd = imitation_torques(q, qdot, drive, elapsed, self.p.kp, self.p.kd,
                               self.p.reaction_delay)
        return tuple(support[i] + pd[i] for i in range(6))
