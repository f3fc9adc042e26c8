"""Trial state machine and session schedule."""
from collections import Counter

import numpy as np

from teleopsim.kinematics import GraspablePoints, KinematicParams, forward_kinematics
from teleopsim.tasks import (
    ADL_POSES,
    Condition,
    Phase,
    Pose,
    TrialEvent,
    TrialState,
    build_pose_library,
    build_session,
    check_pose_match,
    trial_step,
)

KIN = KinematicParams()
LIB = build_pose_library(KIN)
BASE_POINTS = GraspablePoints(
    elbow=LIB[Pose.BASE].elbow_target, wrist=LIB[Pose.BASE].wrist_target
)


def points_near(target, elbow_off=0.0, wrist_off=0.0):
    e = np.asarray(target.elbow_target) + np.array([elbow_off, 0, 0])
    w = np.asarray(target.wrist_target) + np.array([wrist_off, 0, 0])
    return GraspablePoints(elbow=tuple(e), wrist=tuple(w))


def test_pose_library_targets_consistent_with_fk():
    for pose, target in LIB.items():
        pts = forward_kinematics(target.q_target, KIN)
        np.testing.assert_allclose(pts.elbow, target.elbow_target, atol=1e-12)
        np.testing.assert_allclose(pts.wrist, target.wrist_target, atol=1e-12)


def test_match_both_within_tolerance():
    t = LIB[Pose.DRINK]
    assert check_pose_match(points_near(t, 0.069, 0.069), t)


def test_match_requires_both_points():
    t = LIB[Pose.DRINK]
    assert not check_pose_match(points_near(t, 0.05, 0.071), t)


def test_match_exact_pose():
    t = LIB[Pose.STOP]
    assert check_pose_match(points_near(t), t)


def fresh_trial(pose=Pose.DRINK):
    return TrialState(trial_id=0, condition=Condition.HD, block=1, pose=pose,
                      familiarization=False)


def run_until(trial, schedule, dt=0.01):
    """schedule: callable t -> points; returns (trial, events_by_time)."""
    events = []
    t = 0.0
    while trial.phase is not Phase.DONE and t < 60.0:
        trial, evs = trial_step(trial, schedule(t), t, LIB)
        events.extend((t, e) for e in evs)
        t += dt
    return trial, events


def test_continuous_hold_confirms_after_three_seconds():
    target = LIB[Pose.DRINK]

    def schedule(t):
        return points_near(target) if t >= 5.0 else points_near(target, 1.0, 1.0)

    trial, events = run_until(fresh_trial(), lambda t: schedule(t))
    confirms = [t for t, e in events if e is TrialEvent.POSE_CONFIRMED]
    assert len(confirms) == 1
    assert abs(confirms[0] - 8.0) < 0.02
    assert abs(trial.confirmed_at - 8.0) < 0.02


def test_hold_timer_resets_on_match_loss():
    target = LIB[Pose.DRINK]

    def schedule(t):
        if 5.0 <= t < 7.9 or t >= 8.5:
            return points_near(target)
        return points_near(target, 1.0, 1.0)

    trial, events = run_until(fresh_trial(), schedule)
    assert any(e is TrialEvent.HOLD_BROKEN for _, e in events)
    confirms = [t for t, e in events if e is TrialEvent.POSE_CONFIRMED]
    assert len(confirms) == 1
    assert abs(confirms[0] - 11.5) < 0.02


def test_never_matched_never_confirms():
    trial = fresh_trial()
    for k in range(1000):
        trial, evs = trial_step(trial, points_near(LIB[Pose.DRINK], 1.0, 1.0),
                                k * 0.002, LIB)
        assert TrialEvent.POSE_CONFIRMED not in evs
    assert trial.phase is Phase.REACHING
    assert trial.confirmed_at is None


def test_confirmed_time_includes_hold():
    target = LIB[Pose.HAT]
    trial, _ = run_until(fresh_trial(Pose.HAT), lambda t: points_near(target))
    assert trial.confirmed_at - trial.shown_at >= 3.0 - 1e-9


def test_return_to_base_completes_trial():
    target = LIB[Pose.DRINK]

    def schedule(t):
        if t < 10.0:
            return points_near(target)
        return BASE_POINTS

    trial, events = run_until(fresh_trial(), schedule)
    assert trial.phase is Phase.DONE
    assert any(e is TrialEvent.TRIAL_DONE for _, e in events)
    assert trial.done_at >= 10.0


def test_timeout_marks_trial_and_returns():
    trial = fresh_trial()
    points = points_near(LIB[Pose.DRINK], 1.0, 1.0)
    t = 0.0
    while trial.phase in (Phase.SHOW_TARGET, Phase.REACHING):
        trial, evs = trial_step(trial, points, t, LIB, timeout=5.0)
        t += 0.002
    assert trial.timed_out
    assert trial.phase is Phase.RETURN_TO_BASE
    assert trial.confirmed_at is None


def test_schedule_deterministic():
    a = build_session(123)
    b = build_session(123)
    assert a == b
    c = build_session(124)
    assert c.trials != a.trials


def test_schedule_block_composition():
    sched = build_session(42)
    for cond in (Condition.VD, Condition.HD):
        fams = [t for t in sched.trials if t.condition is cond and t.familiarization]
        assert len(fams) == 3
        for block in (1, 2, 3):
            block_trials = [t for t in sched.trials
                            if t.condition is cond and t.block == block]
            assert len(block_trials) == 5
            assert Counter(t.pose for t in block_trials) == Counter(ADL_POSES)


def test_schedule_analyzed_count():
    assert build_session(7).analyzed_count == 30


def test_schedule_respects_condition_order():
    sched = build_session(9, condition_order=(Condition.HD, Condition.VD))
    conds = [t.condition for t in sched.trials]
    switch = conds.index(Condition.VD)
    assert all(c is Condition.HD for c in conds[:switch])
    assert all(c is Condition.VD for c in conds[switch:])
