"""Session runner: three nodes exchanging datagrams around a tick loop.

Topology mirrors the physical setup: the leader node (device + operator
input) and the follower node (plant + trainee) each talk only to the
controller node, which owns the frame mapping, grab state machine,
coupling forces, task engine, and the per-tick log. In loopback mode all
three tick synchronously every ``dt`` on one thread, which makes a session
a pure function of (config, seed); in UDP mode the same nodes run on
threads against real sockets, paced by the wall clock.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, replace

from . import _kernels, __version__
from ._kernels import BACKEND
from .config import SessionConfig, config_digest
from .coupling import (
    CouplingState,
    GrabPhase,
    coupling_forces,
    map_leader_to_follower,
    map_leader_velocity,
    rotate_force_to_leader,
    update_grab_state,
)
from .kinematics import GraspablePoints
from .leader import LeaderState, device_step
from .plant import FollowerState, plant_step
from .policies import TraineePolicy, TrainerPolicy, WorldView
from .tasks import (
    Condition,
    Phase,
    Pose,
    PoseTarget,
    ScheduledTrial,
    SessionSchedule,
    TrialEvent,
    TrialState,
    build_pose_library,
    build_session,
    trial_step,
)
from .transport import LoopbackHub, UdpEndpoint
from .wire import (
    FollowerStateMsg,
    ForceCmdMsg,
    LeaderStateMsg,
    MalformedDatagram,
    MsgType,
    SequenceTracker,
    TaskEventMsg,
    TorqueCmdMsg,
    decode,
    encode,
)

TICK_COLUMNS = (
    ["t_s"]
    + [f"q{i}" for i in range(1, 7)]
    + ["elbow_x", "elbow_y", "elbow_z", "wrist_x", "wrist_y", "wrist_z"]
    + ["leader_x", "leader_y", "leader_z", "mapped_x", "mapped_y", "mapped_z"]
    + ["grab_state"]
    + ["fs_x", "fs_y", "fs_z", "fa_x", "fa_y", "fa_z"]
    + [f"tau{i}" for i in range(1, 7)]
    + ["trial_id", "pose_id", "phase", "condition", "block"]
)

EVENT_COLUMNS = [
    "t_s", "trial_id", "condition", "block", "pose_id", "familiarization", "event",
]

_PHASE_BY_CODE = {int(p): p for p in Phase}
_CONDITION_BY_CODE = {int(c): c for c in Condition}
_POSE_BY_CODE = {int(p): p for p in Pose}
_PHASE_LABEL = {p: p.name.lower() for p in Phase}
_POSE_LABEL = {p: p.name.lower() for p in Pose}


def _fmt(x: float) -> str:
    return "%.10g" % x


def _grab_label(state: CouplingState) -> str:
    if state.phase is GrabPhase.FREE:
        return "free"
    return f"{state.phase.value}_{state.point}"


class LeaderNode:
    """Haptic device plus its operator (scripted policy or external input)."""

    def __init__(self, cfg: SessionConfig, library: dict[Pose, PoseTarget]):
        self.cfg = cfg
        self.library = library
        self.state = LeaderState()
        self.policy = TrainerPolicy(cfg.frame_map, cfg.trainer)
        self.tracker = SequenceTracker()
        self._seq = 0
        self._feedback = (0.0, 0.0, 0.0)
        self._points: GraspablePoints | None = None
        self._task: TaskEventMsg | None = None
        self._external: tuple[tuple[float, float, float] | None, bool] = (None, False)

    def reset(self) -> None:
        self.state = LeaderState()
        self.policy = TrainerPolicy(self.cfg.frame_map, self.cfg.trainer)

    def set_external_input(self, target, grip: bool) -> None:
        """Route for UI-driven sessions; last writer wins within a tick."""
        self._external = (target, grip)

    def tick(self, t: float, t_us: int, inbox: list[bytes]) -> list[bytes]:
        for raw in inbox:
            try:
                msg = decode(raw)
            except MalformedDatagram:
                continue
            if not self.tracker.accept("ctrl", msg):
                continue
            if isinstance(msg, ForceCmdMsg):
                self._feedback = msg.force
            elif isinstance(msg, FollowerStateMsg):
                self._points = GraspablePoints(elbow=msg.elbow, wrist=msg.wrist)
            elif isinstance(msg, TaskEventMsg):
                self._task = msg

        target, grip = self.state.pos, False
        if self.cfg.leader_source == "ui":
            ext_target, ext_grip = self._external
            target = ext_target if ext_target is not None else self.state.pos
            grip = ext_grip
        elif (self._task is not None and self._points is not None
              and self._task.trial != 0xFFFF):
            task = self._task
            phase = _PHASE_BY_CODE[task.phase]
            guidance = (
                _CONDITION_BY_CODE[task.condition] is Condition.HD
                and (phase is Phase.REACHING or phase is Phase.HOLDING)
            )
            grab_phase = GrabPhase.FREE
            engaged_point = None
            if task.grab in (2, 4):
                grab_phase = GrabPhase.NEAR
            elif task.grab in (3, 5):
                grab_phase = GrabPhase.ENGAGED
            if task.grab in (2, 3):
                engaged_point = "elbow"
            elif task.grab in (4, 5):
                engaged_point = "wrist"
            world = WorldView(
                elbow=self._points.elbow,
                wrist=self._points.wrist,
                grab_phase=grab_phase,
                engaged_point=engaged_point,
                trial_phase=phase,
                target=self.library[_POSE_BY_CODE[task.pose]],
                guidance_active=guidance,
            )
            target, grip = self.policy.step(world, self.state.pos, t)

        self.state = device_step(
            self.state, target, grip, self._feedback, self.cfg.dt,
            self.cfg.device, self.cfg.tau_dev,
        )
        msg = LeaderStateMsg(self._seq, t_us, self.state.pos, self.state.vel,
                             self.state.grip_closed)
        self._seq += 1
        return [encode(msg)]


# grab byte on the wire: 1 free, 2 near elbow, 3 engaged elbow,
# 4 near wrist, 5 engaged wrist
def _grab_code(state: CouplingState) -> int:
    if state.phase is GrabPhase.FREE:
        return 1
    base = 2 if state.point == "elbow" else 4
    return base + (1 if state.phase is GrabPhase.ENGAGED else 0)


class ControllerNode:
    """Teleoperation controller plus task engine and logging."""

    def __init__(self, cfg: SessionConfig, library: dict[Pose, PoseTarget],
                 schedule: SessionSchedule):
        self.cfg = cfg
        self.library = library
        self.schedule = schedule
        self.tracker = SequenceTracker()
        self.coupling = CouplingState()
        self.trial_index = 0
        self.trial: TrialState | None = None
        self.trial_results: list[TrialState] = []
        self._leader: LeaderStateMsg | None = None
        self._follower: FollowerStateMsg | None = None
        self._seq = {MsgType.FORCE_CMD: 0, MsgType.TORQUE_CMD: 0,
                     MsgType.TASK_EVENT: 0}
        self._condition: Condition | None = None
        self.reset_requests: list[Condition | None] = []
        self._return_deadline: float | None = None
        self._skip_pending = False
        self.finished = False
        self.fault: str | None = None

    def skip_current(self) -> None:
        """Abandon the active trial at the next tick (session control)."""
        self._skip_pending = True

    def _next_trial(self, t: float) -> None:
        if self.trial_index >= len(self.schedule.trials):
            self.trial = None
            self.finished = True
            return
        sched: ScheduledTrial = self.schedule.trials[self.trial_index]
        if sched.condition is not self._condition:
            self._condition = sched.condition
            self.reset_requests.append(sched.condition)
            self.coupling = CouplingState()
        self.trial = TrialState(
            trial_id=self.trial_index,
            condition=sched.condition,
            block=sched.block,
            pose=sched.pose,
            familiarization=sched.familiarization,
        )
        self.trial_index += 1
        self._return_deadline = None

    def tick(self, t: float, t_us: int, leader_raw: list[bytes],
             follower_raw: list[bytes]):
        """Returns (to_leader, to_follower, tick_row, event_rows)."""
        cfg = self.cfg
        for raw in leader_raw:
            try:
                msg = decode(raw)
            except MalformedDatagram:
                continue
            if self.tracker.accept("leader", msg) and isinstance(msg, LeaderStateMsg):
                self._leader = msg
        follower_fresh = None
        for raw in follower_raw:
            try:
                msg = decode(raw)
            except MalformedDatagram:
                continue
            if self.tracker.accept("follower", msg) and isinstance(msg, FollowerStateMsg):
                self._follower = msg
                follower_fresh = raw

        if not self.finished:
            if self.trial is None:
                self._next_trial(t)
            elif self.trial.phase is Phase.DONE:
                self.trial_results.append(self.trial)
                self._next_trial(t)

        events: list[TrialEvent] = []
        f_s_leader = (0.0, 0.0, 0.0)
        f_a = (0.0, 0.0, 0.0)
        tau = (0.0,) * 6
        mapped = (math.nan,) * 3

        have_io = self._leader is not None and self._follower is not None
        if have_io:
            leader, follower = self._leader, self._follower
            points = GraspablePoints(elbow=follower.elbow, wrist=follower.wrist)
            mapped = map_leader_to_follower(leader.pos, cfg.frame_map)
            v_mapped = map_leader_velocity(leader.vel, cfg.frame_map)

            in_haptic = self.trial is not None and self.trial.condition is Condition.HD
            if in_haptic:
                grab = update_grab_state(self.coupling, mapped,
                                         leader.grip_closed, points)
                if grab.phase is GrabPhase.ENGAGED:
                    wrist_held = grab.point == "wrist"
                    held = points.wrist if wrist_held else points.elbow
                    jac = _kernels.point_jacobian(
                        follower.q, cfg.kinematics.upper_arm_length,
                        cfg.kinematics.forearm_length, wrist_held,
                    )
                    qd = follower.qdot
                    v_held = (
                        sum(jac[i] * qd[i] for i in range(6)),
                        sum(jac[6 + i] * qd[i] for i in range(6)),
                        sum(jac[12 + i] * qd[i] for i in range(6)),
                    )
                    f_s_raw, f_a = coupling_forces(mapped, v_mapped, held,
                                                   v_held, cfg.gains)
                    f_s_leader = rotate_force_to_leader(f_s_raw, cfg.frame_map)
                    tau = _kernels.jac_t_force(jac, f_a[0], f_a[1], f_a[2],
                                               cfg.tau_max)
                self.coupling = CouplingState(grab.phase, grab.point,
                                              grab.grab_radius, f_s_leader,
                                              f_a, tau)
            elif self.coupling.phase is not GrabPhase.FREE or self.coupling.last_tau != tau:
                self.coupling = CouplingState()

            if self._skip_pending and self.trial is not None:
                self._skip_pending = False
                self.trial = replace(self.trial, phase=Phase.DONE, done_at=t,
                                     timed_out=True)
                self.reset_requests.append(None)
                events = [TrialEvent.TRIAL_DONE]
            elif self.trial is not None:
                trial, events = trial_step(
                    self.trial, points, t, self.library,
                    tol=cfg.task.match_tol,
                    hold_duration=cfg.task.hold_duration,
                    timeout=cfg.task.trial_timeout,
                )
                if trial.phase is Phase.RETURN_TO_BASE and self._return_deadline is None:
                    self._return_deadline = t + cfg.task.return_timeout
                if (
                    trial.phase is Phase.RETURN_TO_BASE
                    and self._return_deadline is not None
                    and t >= self._return_deadline
                ):
                    # pathological stall: reset the arm to base and move on
                    trial = replace(trial, phase=Phase.DONE, done_at=t)
                    events = list(events) + [TrialEvent.TRIAL_DONE]
                    self.reset_requests.append(None)
                self.trial = trial

        # outgoing commands and task snapshot
        to_leader: list[bytes] = []
        to_follower: list[bytes] = []
        force_msg = ForceCmdMsg(self._seq[MsgType.FORCE_CMD], t_us, f_s_leader)
        self._seq[MsgType.FORCE_CMD] += 1
        to_leader.append(encode(force_msg))
        torque_msg = TorqueCmdMsg(self._seq[MsgType.TORQUE_CMD], t_us, tau)
        self._seq[MsgType.TORQUE_CMD] += 1
        to_follower.append(encode(torque_msg))
        if follower_fresh is not None:
            to_leader.append(follower_fresh)  # relay for the operator's view

        trial = self.trial
        task_msg = TaskEventMsg(
            self._seq[MsgType.TASK_EVENT], t_us,
            trial.trial_id if trial else 0xFFFF,
            trial.block if trial else 0,
            int(trial.condition) if trial else 0,
            int(trial.pose) if trial else 0,
            int(trial.phase) if trial else 0,
            _grab_code(self.coupling),
            int(events[0]) if events else 0,
        )
        self._seq[MsgType.TASK_EVENT] += 1
        task_raw = encode(task_msg)
        to_leader.append(task_raw)
        to_follower.append(task_raw)

        row = None
        if self._follower is not None:
            f = self._follower
            lp = self._leader.pos if self._leader else (math.nan,) * 3
            nums = (t,) + f.q + f.elbow + f.wrist + lp + mapped
            nums2 = f_s_leader + f_a + tau
            if trial is not None:
                tail = "%d,%s,%s,%s,%d" % (
                    trial.trial_id, _POSE_LABEL[trial.pose],
                    _PHASE_LABEL[trial.phase], trial.condition.name,
                    trial.block,
                )
            else:
                tail = "-1,,,,-1"
            row = "%s,%s,%s,%s" % (
                ",".join([_fmt(v) for v in nums]),
                _grab_label(self.coupling),
                ",".join([_fmt(v) for v in nums2]),
                tail,
            )
        event_rows = []
        if trial is not None:
            for ev in events:
                event_rows.append("%s,%d,%s,%d,%s,%d,%s" % (
                    _fmt(t), trial.trial_id, trial.condition.name, trial.block,
                    _POSE_LABEL[trial.pose], int(trial.familiarization),
                    ev.name.lower(),
                ))
        return to_leader, to_follower, row, event_rows


def point_velocity(follower: FollowerStateMsg, point: str, cfg: SessionConfig):
    """Graspable-point velocity from the follower's joint velocities."""
    jac = _kernels.point_jacobian(
        follower.q, cfg.kinematics.upper_arm_length,
        cfg.kinematics.forearm_length, point == "wrist",
    )
    qd = follower.qdot
    return (
        sum(jac[i] * qd[i] for i in range(6)),
        sum(jac[6 + i] * qd[i] for i in range(6)),
        sum(jac[12 + i] * qd[i] for i in range(6)),
    )


class FollowerNode:
    """Exoskeleton plant plus the simulated trainee."""

    def __init__(self, cfg: SessionConfig, library: dict[Pose, PoseTarget]):
        self.cfg = cfg
        self.library = library
        self.tracker = SequenceTracker()
        self._base_q = library[Pose.BASE].q_target
        self.state = FollowerState(q=self._base_q)
        self._tau_coupling = (0.0,) * 6
        self._task: TaskEventMsg | None = None
        self._seq = 0
        self._trainees = {}
        self._trainee_for(Condition.HD)
        self._trainee_for(Condition.VD)

    def _trainee_for(self, cond: Condition) -> TraineePolicy:
        if cond not in self._trainees:
            params = (self.cfg.trainee_hd if cond is Condition.HD
                      else self.cfg.trainee_vd)
            self._trainees[cond] = TraineePolicy(
                params, self.cfg.kinematics, self.cfg.plant.weight_comp,
                seed=self.cfg.seed ^ int(cond),
            )
        return self._trainees[cond]

    def reset(self, condition: Condition | None) -> None:
        self.state = FollowerState(
            q=self.library[Pose.BASE].q_target, t=self.state.t
        )
        self._tau_coupling = (0.0,) * 6

    def tick(self, t: float, t_us: int, inbox: list[bytes]) -> list[bytes]:
        for raw in inbox:
            try:
                msg = decode(raw)
            except MalformedDatagram:
                continue
            if not self.tracker.accept("ctrl", msg):
                continue
            if isinstance(msg, TorqueCmdMsg):
                self._tau_coupling = msg.tau
            elif isinstance(msg, TaskEventMsg):
                self._task = msg

        tau_vol = (0.0,) * 6
        if self._task is not None and self._task.trial != 0xFFFF:
            task = self._task
            trainee = self._trainee_for(_CONDITION_BY_CODE[task.condition])
            target_q = self.library[_POSE_BY_CODE[task.pose]].q_target
            tau_vol = trainee.torques(
                self.state.q, self.state.qdot, _PHASE_BY_CODE[task.phase],
                target_q, self._base_q, t,
            )

        self.state = plant_step(self.state, self._tau_coupling, tau_vol,
                                self.cfg.plant, self.cfg.kinematics)
        return self.report(t_us)

    def report(self, t_us: int) -> list[bytes]:
        """Encode the current state without stepping (used to prime links)."""
        k = self.cfg.kinematics
        pts = _kernels.fk_points(
            self.state.q, k.upper_arm_length, k.forearm_length,
            *k.shoulder_origin,
        )
        msg = FollowerStateMsg(
            self._seq, t_us, self.state.q, self.state.qdot,
            pts[0:3], pts[3:6],
        )
        self._seq += 1
        return [encode(msg)]


@dataclass
class RunResult:
    out_dir: str
    ticks_path: str
    events_path: str
    manifest_path: str
    n_ticks: int
    n_trials_done: int
    n_confirmed: int
    checksums: dict[str, str]
    wall_seconds: float


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path: str, cfg: SessionConfig, transport: str,
                    extra: dict) -> None:
    from dataclasses import asdict

    def jsonable(obj):
        if isinstance(obj, (Condition, Pose)):
            return obj.name
        if isinstance(obj, dict):
            return {str(k.name if hasattr(k, "name") else k): jsonable(v)
                    for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [jsonable(v) for v in obj]
        return obj

    manifest = {
        "config_digest": config_digest(cfg),
        "config": jsonable(asdict(cfg)),
        "seed": cfg.seed,
        "version": __version__,
        "kernel_backend": BACKEND,
        "transport": transport,
        "columns": TICK_COLUMNS,
    }
    manifest.update(extra)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(cfg: SessionConfig, out_dir: str,
                   max_sim_seconds: float = 3600.0,
                   external_leader=None,
                   observer=None,
                   pace: float | None = None,
                   stop_flag=None,
                   pause_flag=None,
                   take_skip=None) -> RunResult:
    """Run one full scheduled session and write the log bundle.

    ``external_leader`` (UI mode) is called each tick for (target, grip);
    ``observer`` is called with a world snapshot dict at the UI rate;
    ``pace`` slows the loop to real time multiplied by the given factor
    (None = as fast as possible); ``stop_flag`` is an optional callable
    polled once per tick to end the session early; ``pause_flag`` freezes
    simulation time while it returns True; ``take_skip`` is polled for
    pending skip-to-next-trial requests.
    """
    t_start = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)
    library = build_pose_library(cfg.kinematics, cfg.pose_overrides)
    schedule = build_session(
        cfg.seed, cfg.condition_order, cfg.task.blocks,
        cfg.task.familiarization,
    )
    leader = LeaderNode(cfg, library)
    controller = ControllerNode(cfg, library, schedule)
    follower = FollowerNode(cfg, library)
    hub = LoopbackHub(cfg.link, seed=cfg.seed)

    ticks_path = os.path.join(out_dir, "ticks.csv")
    events_path = os.path.join(out_dir, "events.csv")
    manifest_path = os.path.join(out_dir, "manifest.json")

    dt = cfg.dt
    observe_every = max(1, int(round(1.0 / (cfg.ui_rate * dt))))
    n_ticks = 0

    with open(ticks_path, "w", newline="") as tf, \
            open(events_path, "w", newline="") as ef:
        tf.write(",".join(TICK_COLUMNS) + "\n")
        ef.write(",".join(EVENT_COLUMNS) + "\n")

        # prime the controller directly so logging starts at the first tick
        # even on an impaired link
        prime = follower.report(0)

        k = 0
        max_ticks = int(max_sim_seconds / dt)
        pace_t0 = time.monotonic()
        try:
            while not controller.finished and k < max_ticks:
                if stop_flag is not None and stop_flag():
                    break
                if pause_flag is not None and pause_flag():
                    time.sleep(0.02)
                    pace_t0 += 0.02  # keep the pace schedule from jumping
                    continue
                if take_skip is not None and take_skip():
                    controller.skip_current()
                t = k * dt
                t_us = k * int(round(dt * 1e6))
                if pace is not None:
                    lag = pace_t0 + t / pace - time.monotonic()
                    if lag > 0:
                        time.sleep(lag)

                if external_leader is not None:
                    target, grip = external_leader(t)
                    leader.set_external_input(target, grip)
                out = leader.tick(t, t_us, hub.recv("ctrl", "leader", t))
                for raw in out:
                    hub.send("leader", "ctrl", raw, t)

                to_leader, to_follower, row, event_rows = controller.tick(
                    t, t_us,
                    hub.recv("leader", "ctrl", t),
                    prime + hub.recv("follower", "ctrl", t),
                )
                prime = []
                for raw in to_leader:
                    hub.send("ctrl", "leader", raw, t)
                for raw in to_follower:
                    hub.send("ctrl", "follower", raw, t)
                while controller.reset_requests:
                    follower.reset(controller.reset_requests.pop(0))
                    leader.reset()

                fout = follower.tick(t, t_us, hub.recv("ctrl", "follower", t))
                for raw in fout:
                    hub.send("follower", "ctrl", raw, t)

                if row is not None:
                    tf.write(row + "\n")
                    n_ticks += 1
                for ev in event_rows:
                    ef.write(ev + "\n")
                if observer is not None and k % observe_every == 0:
                    observer(snapshot_world(cfg, controller, leader, follower, t))
                k += 1
        except Exception:
            # mid-run fault: leave a truncation marker so partial logs are
            # recognizable, then surface the fault (nonzero exit at the CLI)
            ef.write("%s,-1,,-1,,0,run_truncated\n" % _fmt(k * dt))
            raise

    confirmed = sum(1 for tr in controller.trial_results
                    if tr.confirmed_at is not None)
    checksums = {"ticks.csv": _sha256(ticks_path),
                 "events.csv": _sha256(events_path)}
    _write_manifest(manifest_path, cfg, "loopback", {
        "n_ticks": n_ticks,
        "n_trials_scheduled": len(schedule.trials),
        "n_trials_done": len(controller.trial_results),
        "n_confirmed": confirmed,
        "link_dropped": hub.dropped,
        "checksums": checksums,
    })

    return RunResult(
        out_dir=out_dir,
        ticks_path=ticks_path,
        events_path=events_path,
        manifest_path=manifest_path,
        n_ticks=n_ticks,
        n_trials_done=len(controller.trial_results),
        n_confirmed=confirmed,
        checksums=checksums,
        wall_seconds=time.monotonic() - t_start,
    )


def snapshot_from_row(row, manifest: dict) -> dict:
    """Rebuild a UI snapshot from one logged tick row (replay mode)."""
    library = manifest.get("_library")
    if library is None:
        from .config import config_from_dict

        raw = manifest.get("config", {})
        kin_cfg = {"kinematics": raw["kinematics"]} if "kinematics" in raw else {}
        cfg = config_from_dict(kin_cfg)
        library = build_pose_library(cfg.kinematics, cfg.pose_overrides)
        manifest["_library"] = library

    grab_state = str(row["grab_state"])
    engaged_point = None
    phase_val = "free"
    if grab_state != "free":
        phase_val, engaged_point = grab_state.split("_", 1)
    pose_name = str(row["pose_id"])
    target = library.get(Pose[pose_name.upper()]) if pose_name else None
    trial_phase = str(row["phase"])
    engaged = phase_val == "engaged"
    return {
        "v": 1,
        "t": float(row["t_s"]),
        "q": [float(row[f"q{i}"]) for i in range(1, 7)],
        "elbow": [float(row[f"elbow_{a}"]) for a in "xyz"],
        "wrist": [float(row[f"wrist_{a}"]) for a in "xyz"],
        "leader_mapped": [float(row[f"mapped_{a}"]) for a in "xyz"],
        "leader": [float(row[f"leader_{a}"]) for a in "xyz"],
        "grab": {"state": phase_val, "point": engaged_point},
        "marker_colors": {
            "elbow": "green" if engaged and engaged_point == "elbow" else "red",
            "wrist": "green" if engaged and engaged_point == "wrist" else "red",
        },
        "target": {
            "pose_id": pose_name or None,
            "elbow": list(target.elbow_target) if target else None,
            "wrist": list(target.wrist_target) if target else None,
            "matched": trial_phase in ("holding", "confirmed"),
            "hold_remaining": 0.0,
        },
        "forces": {
            "f_s": [float(row[f"fs_{a}"]) for a in "xyz"],
            "f_a": [float(row[f"fa_{a}"]) for a in "xyz"],
        },
        "trial": {
            "id": int(row["trial_id"]),
            "block": int(row["block"]),
            "condition": str(row["condition"]),
            "phase": trial_phase,
        },
        "replay": True,
    }


class UnreachablePeer(RuntimeError):
    """A UDP peer did not respond during the startup handshake."""


def run_experiment_udp(cfg: SessionConfig, out_dir: str,
                       max_sim_seconds: float = 3600.0,
                       handshake_timeout: float = 3.0,
                       pace: float | None = None) -> RunResult:
    """Run a session over real UDP sockets on the configured addresses.

    The three nodes run on threads, each owning one socket; the controller
    writes the same log bundle as the loopback runner. Not deterministic:
    scheduling and the network decide message interleaving.
    """
    import threading

    t_start = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)
    library = build_pose_library(cfg.kinematics, cfg.pose_overrides)
    schedule = build_session(cfg.seed, cfg.condition_order, cfg.task.blocks,
                             cfg.task.familiarization)
    leader = LeaderNode(cfg, library)
    controller = ControllerNode(cfg, library, schedule)
    follower = FollowerNode(cfg, library)

    ep_leader = UdpEndpoint(cfg.udp.leader)
    ep_ctrl = UdpEndpoint(cfg.udp.controller)
    ep_follower = UdpEndpoint(cfg.udp.follower)
    addr_ctrl = ep_ctrl.address
    stop = threading.Event()
    errors: list[BaseException] = []

    dt = cfg.dt
    send_every = max(1, int(round(1.0 / (cfg.send_rate * dt))))

    # startup handshake: peers announce themselves; the controller must see
    # both before the session starts
    ep_leader.send(encode(LeaderStateMsg(0xFFFFFFFF, 0, (0.0,) * 3, (0.0,) * 3,
                                         False)), addr_ctrl)
    ep_follower.send(follower.report(0)[0], addr_ctrl)
    deadline = time.monotonic() + handshake_timeout
    seen = set()
    try:
        while len(seen) < 2:
            if time.monotonic() > deadline:
                missing = {"leader", "follower"} - seen
                raise UnreachablePeer(f"no handshake from: {sorted(missing)}")
            for raw in ep_ctrl.drain():
                try:
                    msg = decode(raw)
                except MalformedDatagram:
                    continue
                if isinstance(msg, LeaderStateMsg):
                    seen.add("leader")
                elif isinstance(msg, FollowerStateMsg):
                    seen.add("follower")
            time.sleep(0.005)

        ticks_path = os.path.join(out_dir, "ticks.csv")
        events_path = os.path.join(out_dir, "events.csv")
        manifest_path = os.path.join(out_dir, "manifest.json")
        n_ticks = 0

        def leader_loop():
            try:
                k = 0
                t0 = time.monotonic()
                while not stop.is_set() and k * dt < max_sim_seconds:
                    t = k * dt
                    if pace is not None:
                        lag = t0 + t / pace - time.monotonic()
                        if lag > 0:
                            time.sleep(lag)
                    out = leader.tick(t, int(t * 1e6), ep_leader.drain())
                    if k % send_every == 0:
                        for raw in out:
                            ep_leader.send(raw, addr_ctrl)
                    k += 1
            except BaseException as exc:  # surfaced by the main thread
                errors.append(exc)
                stop.set()

        def follower_loop():
            try:
                k = 0
                t0 = time.monotonic()
                while not stop.is_set() and k * dt < max_sim_seconds:
                    t = k * dt
                    if pace is not None:
                        lag = t0 + t / pace - time.monotonic()
                        if lag > 0:
                            time.sleep(lag)
                    out = follower.tick(t, int(t * 1e6), ep_follower.drain())
                    if k % send_every == 0:
                        for raw in out:
                            ep_follower.send(raw, addr_ctrl)
                    k += 1
            except BaseException as exc:
                errors.append(exc)
                stop.set()

        threads = [threading.Thread(target=leader_loop, daemon=True),
                   threading.Thread(target=follower_loop, daemon=True)]
        for th in threads:
            th.start()

        with open(ticks_path, "w") as tf, open(events_path, "w") as ef:
            tf.write(",".join(TICK_COLUMNS) + "\n")
            ef.write(",".join(EVENT_COLUMNS) + "\n")
            k = 0
            t0 = time.monotonic()
            while not controller.finished and k * dt < max_sim_seconds:
                if stop.is_set():
                    break
                t = k * dt
                if pace is not None:
                    lag = t0 + t / pace - time.monotonic()
                    if lag > 0:
                        time.sleep(lag)
                from_leader, from_follower = [], []
                for raw in ep_ctrl.drain():
                    mtype = raw[3] if len(raw) > 3 else 0
                    if mtype == int(MsgType.LEADER_STATE):
                        from_leader.append(raw)
                    elif mtype == int(MsgType.FOLLOWER_STATE):
                        from_follower.append(raw)
                to_leader, to_follower, row, event_rows = controller.tick(
                    t, int(t * 1e6), from_leader, from_follower)
                for raw in to_leader:
                    ep_ctrl.send(raw, cfg.udp.leader)
                for raw in to_follower:
                    ep_ctrl.send(raw, cfg.udp.follower)
                while controller.reset_requests:
                    follower.reset(controller.reset_requests.pop(0))
                    leader.reset()
                if row is not None:
                    tf.write(row + "\n")
                    n_ticks += 1
                for ev in event_rows:
                    ef.write(ev + "\n")
                k += 1
        stop.set()
        for th in threads:
            th.join(timeout=2.0)
        if errors:
            raise errors[0]
    finally:
        stop.set()
        ep_leader.close()
        ep_ctrl.close()
        ep_follower.close()

    confirmed = sum(1 for tr in controller.trial_results
                    if tr.confirmed_at is not None)
    checksums = {"ticks.csv": _sha256(ticks_path),
                 "events.csv": _sha256(events_path)}
    _write_manifest(manifest_path, cfg, "udp", {
        "n_ticks": n_ticks,
        "n_trials_scheduled": len(schedule.trials),
        "n_trials_done": len(controller.trial_results),
        "n_confirmed": confirmed,
        "overflow_dropped": ep_ctrl.overflow_dropped,
        "checksums": checksums,
    })
    return RunResult(
        out_dir=out_dir,
        ticks_path=ticks_path,
        events_path=events_path,
        manifest_path=manifest_path,
        n_ticks=n_ticks,
        n_trials_done=len(controller.trial_results),
        n_confirmed=confirmed,
        checksums=checksums,
        wall_seconds=time.monotonic() - t_start,
    )


def snapshot_world(cfg: SessionConfig, controller: ControllerNode,
                   leader: LeaderNode, follower: FollowerNode,
                   t: float) -> dict:
    """Plain-dict world snapshot consumed by the UI bridge."""
    trial = controller.trial
    coupling = controller.coupling
    library = controller.library
    target = library[trial.pose] if trial else None
    k = cfg.kinematics
    pts = _kernels.fk_points(follower.state.q, k.upper_arm_length,
                             k.forearm_length, *k.shoulder_origin)
    mapped = map_leader_to_follower(leader.state.pos, cfg.frame_map)
    hold_remaining = 0.0
    matched = False
    if trial is not None and target is not None:
        matched = trial.phase in (Phase.HOLDING, Phase.CONFIRMED)
        if trial.phase is Phase.HOLDING and trial.holding_since is not None:
            hold_remaining = max(0.0, cfg.task.hold_duration - (t - trial.holding_since))
    engaged = coupling.phase is GrabPhase.ENGAGED
    return {
        "v": 1,
        "t": t,
        "q": list(follower.state.q),
        "elbow": list(pts[0:3]),
        "wrist": list(pts[3:6]),
        "leader_mapped": list(mapped),
        "leader": list(leader.state.pos),
        "grab": {"state": coupling.phase.value, "point": coupling.point},
        "marker_colors": {
            "elbow": "green" if engaged and coupling.point == "elbow" else "red",
            "wrist": "green" if engaged and coupling.point == "wrist" else "red",
        },
        "target": {
            "pose_id": trial.pose.name.lower() if trial else None,
            "elbow": list(target.elbow_target) if target else None,
            "wrist": list(target.wrist_target) if target else None,
            "matched": matched,
            "hold_remaining": hold_remaining,
        },
        "forces": {"f_s": list(coupling.last_f_s), "f_a": list(coupling.last_f_a)},
        "trial": {
            "id": trial.trial_id if trial else None,
            "block": trial.block if trial else None,
            "condition": trial.condition.name if trial else None,
            "phase": trial.phase.name.lower() if trial else None,
        },
    }
