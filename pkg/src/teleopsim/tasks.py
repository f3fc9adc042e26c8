"""Pose-guidance task engine: pose library, trial state machine, schedule.

A trial shows a target pose, waits for both graspable points to match it
within tolerance, requires the match to be held continuously for the hold
duration (the timer resets if the match is lost), then has the arm return
to the base pose. Sessions interleave two demonstration conditions with
seeded per-block pose permutations.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

from .kinematics import KinematicParams, forward_kinematics
from .rng import Xoshiro256StarStar

MATCH_TOL = 0.07       # m, per-point position tolerance
HOLD_DURATION = 3.0    # s, continuous match required to confirm


class Condition(IntEnum):
    HD = 1   # haptic demonstration: coupling active
    VD = 2   # visual demonstration: trainee imitates, coupling off


class Pose(IntEnum):
    EXULT = 1
    DRINK = 2
    PHONE = 3
    HAT = 4
    STOP = 5
    BASE = 6


ADL_POSES = (Pose.EXULT, Pose.DRINK, Pose.PHONE, Pose.HAT, Pose.STOP)

# Plausible stand-in joint angles (rad); override per session config.
DEFAULT_POSE_ANGLES: dict[Pose, tuple[float, ...]] = {
    Pose.EXULT: (0.5, 2.4, 0.0, 0.35, 0.0, 0.0),
    Pose.DRINK: (0.1, 0.8, 0.0, 2.1, 1.2, 0.0),
    Pose.PHONE: (0.35, 0.6, 0.5, 2.3, 0.5, 0.0),
    Pose.HAT: (0.6, 1.8, 0.3, 1.9, 0.0, 0.0),
    Pose.STOP: (0.2, 1.2, 0.0, 1.4, 0.0, 0.3),
    Pose.BASE: (0.1, 0.3, 0.0, 0.9, 0.0, 0.0),
}


@dataclass(frozen=True)
class PoseTarget:
    pose: Pose
    q_target: tuple[float, ...]
    elbow_target: tuple[float, float, float]
    wrist_target: tuple[float, float, float]


def build_pose_library(
    kin: KinematicParams,
    overrides: dict[Pose, tuple[float, ...]] | None = None,
) -> dict[Pose, PoseTarget]:
    """Derive point targets for every pose under the active arm geometry."""
    angles = dict(DEFAULT_POSE_ANGLES)
    if overrides:
        angles.update(overrides)
    library = {}
    for pose, q in angles.items():
        pts = forward_kinematics(q, kin)
        library[pose] = PoseTarget(pose, tuple(q), pts.elbow, pts.wrist)
    return library


def check_pose_match(points, target: PoseTarget, tol: float = MATCH_TOL) -> bool:
    """Both graspable points within ``tol`` of their targets."""
    ex, ey, ez = points.elbow
    tx, ty, tz = target.elbow_target
    t2 = tol * tol
    if (ex - tx) ** 2 + (ey - ty) ** 2 + (ez - tz) ** 2 > t2:
        return False
    wx, wy, wz = points.wrist
    tx, ty, tz = target.wrist_target
    return (wx - tx) ** 2 + (wy - ty) ** 2 + (wz - tz) ** 2 <= t2


class Phase(IntEnum):
    SHOW_TARGET = 1
    REACHING = 2
    HOLDING = 3
    CONFIRMED = 4
    RETURN_TO_BASE = 5
    DONE = 6


class TrialEvent(IntEnum):
    NONE = 0
    TARGET_SHOWN = 1
    HOLD_STARTED = 2
    HOLD_BROKEN = 3
    POSE_CONFIRMED = 4
    RETURN_STARTED = 5
    TRIAL_DONE = 6
    TIMED_OUT = 7


@dataclass(frozen=True)
class TrialState:
    trial_id: int
    condition: Condition
    block: int                    # 0 = familiarization
    pose: Pose
    familiarization: bool
    phase: Phase = Phase.SHOW_TARGET
    shown_at: float | None = None
    holding_since: float | None = None
    confirmed_at: float | None = None
    done_at: float | None = None
    timed_out: bool = False


def trial_step(
    trial: TrialState,
    points,
    t: float,
    library: dict[Pose, PoseTarget],
    tol: float = MATCH_TOL,
    hold_duration: float = HOLD_DURATION,
    timeout: float | None = None,
) -> tuple[TrialState, list[TrialEvent]]:
    """Advance one trial by one tick; returns the new state and any events."""
    events: list[TrialEvent] = []
    target = library[trial.pose]

    if trial.phase is Phase.SHOW_TARGET:
        trial = replace(trial, phase=Phase.REACHING, shown_at=t)
        events.append(TrialEvent.TARGET_SHOWN)

    if (
        timeout is not None
        and trial.phase in (Phase.REACHING, Phase.HOLDING)
        and t - trial.shown_at >= timeout
    ):
        events.append(TrialEvent.TIMED_OUT)
        events.append(TrialEvent.RETURN_STARTED)
        return (
            replace(trial, phase=Phase.RETURN_TO_BASE, holding_since=None,
                    timed_out=True),
            events,
        )

    if trial.phase is Phase.REACHING:
        if check_pose_match(points, target, tol):
            trial = replace(trial, phase=Phase.HOLDING, holding_since=t)
            events.append(TrialEvent.HOLD_STARTED)
        return trial, events

    if trial.phase is Phase.HOLDING:
        if not check_pose_match(points, target, tol):
            events.append(TrialEvent.HOLD_BROKEN)
            return replace(trial, phase=Phase.REACHING, holding_since=None), events
        if t - trial.holding_since >= hold_duration:
            events.append(TrialEvent.POSE_CONFIRMED)
            events.append(TrialEvent.RETURN_STARTED)
            return (
                replace(trial, phase=Phase.RETURN_TO_BASE, confirmed_at=t),
                events,
            )
        return trial, events

    if trial.phase is Phase.RETURN_TO_BASE:
        # return leg: match against base, no hold requirement
        if check_pose_match(points, library[Pose.BASE], tol):
            events.append(TrialEvent.TRIAL_DONE)
            return replace(trial, phase=Phase.DONE, done_at=t), events
        return trial, events

    return trial, events


@dataclass(frozen=True)
class ScheduledTrial:
    condition: Condition
    block: int                 # 0 = familiarization
    pose: Pose
    familiarization: bool


@dataclass(frozen=True)
class SessionSchedule:
    seed: int
    condition_order: tuple[Condition, Condition]
    trials: tuple[ScheduledTrial, ...]

    @property
    def analyzed_count(self) -> int:
        return sum(not t.familiarization for t in self.trials)


def build_session(
    seed: int,
    condition_order: tuple[Condition, Condition] = (Condition.VD, Condition.HD),
    blocks: int = 3,
    familiarization: int = 3,
    poses: tuple[Pose, ...] = ADL_POSES,
) -> SessionSchedule:
    """Deterministic session schedule from the seed alone.

    Per condition: ``familiarization`` random pose draws, then ``blocks``
    blocks each containing every pose exactly once in seeded random order.
    """
    trials: list[ScheduledTrial] = []
    for cond in condition_order:
        rng = Xoshiro256StarStar.for_stream(seed, f"schedule/{cond.name}")
        for _ in range(familiarization):
            pose = poses[rng.randbelow(len(poses))]
            trials.append(ScheduledTrial(cond, 0, pose, True))
        for block in range(1, blocks + 1):
            order = list(poses)
            rng.shuffle(order)
            for pose in order:
                trials.append(ScheduledTrial(cond, block, pose, False))
    return SessionSchedule(seed, tuple(condition_order), tuple(trials))
