"""Acceptance suite: one test per criterion, each printing a pass/fail line
and enforcing its runtime budget.

Run with ``pytest tests/test_acceptance.py`` (add ``-s`` to see the lines
inline). The demonstrative batch criterion runs 20 full seeded sessions and
dominates the suite's runtime.
"""
import math
import shutil
import time
from contextlib import contextmanager

import numpy as np
import pandas as pd
import pytest

FS = 500.0


@contextmanager
def criterion(name, budget, capsys):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"\n[ACCEPT] {name}: FAIL")
        raise
    elapsed = time.perf_counter() - t0
    line = f"[ACCEPT] {name}: PASS ({elapsed:.2f}s"
    line += f" < {budget:g}s)" if budget else ")"
    with capsys.disabled():
        print("\n" + line)
    if budget is not None:
        assert elapsed < budget, f"{name}: {elapsed:.2f}s over budget {budget}s"


def test_controller_math(capsys):
    from teleopsim.coupling import (CouplingGains, FrameMap, coupling_forces,
                                    map_follower_to_leader,
                                    map_leader_to_follower)

    with criterion("controller-math", 1.0, capsys):
        fm = FrameMap()
        rng = np.random.default_rng(424242)
        for _ in range(1000):
            p = tuple(rng.uniform(-0.1, 0.1, 3))
            back = map_follower_to_leader(map_leader_to_follower(p, fm), fm)
            assert max(abs(back[i] - p[i]) for i in range(3)) <= 1e-12

        gains = CouplingGains()
        f_s, f_a = coupling_forces((0.1, 0.0, 0.0), (0.0,) * 3,
                                   (0.0,) * 3, (0.0,) * 3, gains)
        # exact reproduction of the force equations at e = [0.1, 0, 0]
        assert f_s == (-(30.0 * 0.1), 0.0, 0.0)
        assert f_a == (80.0 * 0.1, 0.0, 0.0)
        assert abs(f_s[0] + 3.0) < 1e-12 and abs(f_a[0] - 8.0) < 1e-12

        for _ in range(200):
            xm = tuple(rng.uniform(-1, 1, 3))
            xa = tuple(rng.uniform(-1, 1, 3))
            v = tuple(rng.uniform(-1, 1, 3))
            f_s, f_a = coupling_forces(xm, v, xa, v, gains)
            for i in range(3):
                assert abs(f_a[i] + (8.0 / 3.0) * f_s[i]) <= 1e-12 * max(
                    1.0, abs(f_a[i]))


def test_kinematics(capsys):
    from teleopsim.kinematics import (KinematicParams, forward_kinematics,
                                      gravity_torques, point_jacobian)
    from tests.test_kinematics import (oracle_points, oracle_potential,
                                       random_configs)

    with criterion("kinematics", 5.0, capsys):
        p = KinematicParams(shoulder_origin=(0.0, 0.0, 0.0))
        rng = np.random.default_rng(77)
        h = 1e-6
        for q in random_configs(100, rng):
            for point, idx in (("elbow", 0), ("wrist", 1)):
                jac = point_jacobian(q, point, p)
                fd = np.empty((3, 6))
                for i in range(6):
                    qp = q.copy(); qp[i] += h
                    qm = q.copy(); qm[i] -= h
                    fd[:, i] = (oracle_points(qp, p)[idx]
                                - oracle_points(qm, p)[idx]) / (2 * h)
                assert np.max(np.abs(jac - fd)) < 1e-5

        hg = 1e-7
        for q in random_configs(50, rng):
            tau = gravity_torques(q, p)
            for i in range(6):
                qp = q.copy(); qp[i] += hg
                qm = q.copy(); qm[i] -= hg
                grad = (oracle_potential(qp, p)
                        - oracle_potential(qm, p)) / (2 * hg)
                assert abs(tau[i] + grad) < 1e-6

        for q in random_configs(1000, rng):
            pts = forward_kinematics(q, p)
            elbow, wrist = pts.as_arrays()
            assert abs(np.linalg.norm(elbow) - 0.30) < 1e-9
            assert abs(np.linalg.norm(wrist - elbow) - 0.25) < 1e-9


def test_convergence(capsys):
    from teleopsim.coupling import (CouplingGains, coupling_forces,
                                    force_to_torques)
    from teleopsim.kinematics import (KinematicParams, forward_kinematics,
                                      point_jacobian)
    from teleopsim.plant import FollowerState, PlantParams, plant_step

    with criterion("convergence", 2.0, capsys):
        kin = KinematicParams()
        gains = CouplingGains()
        p = PlantParams(weight_comp=1.0)
        s = FollowerState(q=(0.3, 0.9, 0.0, 1.5, 0.0, 0.0))
        wrist0 = np.array(forward_kinematics(s.q, kin).wrist)
        radial = wrist0 - np.array(kin.shoulder_origin)
        radial /= np.linalg.norm(radial)
        lift = np.array([0.0, 0.0, 1.0]) - radial[2] * radial
        lift /= np.linalg.norm(lift)
        direction = lift + np.cross(radial, lift)
        direction /= np.linalg.norm(direction)
        x_mapped = tuple(wrist0 + 0.03 * direction)

        errs = [float(np.linalg.norm(np.array(x_mapped) - wrist0))]
        for _ in range(int(5.0 / p.dt)):
            pts = forward_kinematics(s.q, kin)
            _, f_a = coupling_forces(x_mapped, (0.0,) * 3, pts.wrist,
                                     (0.0,) * 3, gains)
            tau = force_to_torques(point_jacobian(s.q, "wrist", kin), f_a)
            s = plant_step(s, tuple(tau), (0.0,) * 6, p, kin)
            errs.append(float(np.linalg.norm(
                np.array(x_mapped) - np.array(forward_kinematics(s.q, kin).wrist))))
        errs = np.array(errs)
        assert errs[-1] < 1e-3, f"final error {errs[-1]:.2e} m"
        assert np.all(np.diff(errs[1:]) <= 1e-12), "not monotone after step 1"


def test_metrics_oracles(capsys):
    from teleopsim.metrics import (butterworth_coefficients, lowpass,
                                   remove_outliers, sparc)
    from tests.test_metrics import (min_jerk_speed, sparc_oracle,
                                    submovement_family)

    with criterion("metrics-oracles", 10.0, capsys):
        b, a = butterworth_coefficients(20.0, FS)
        k = math.tan(math.pi * 20.0 / FS)
        assert abs(b[0] - k / (1 + k)) < 1e-9
        assert abs(b[1] - k / (1 + k)) < 1e-9
        assert abs(a[1] - (k - 1) / (1 + k)) < 1e-9

        const = np.full(1000, 2.5)
        assert np.max(np.abs(lowpass(const) / 2.5 - 1.0)) < 1e-9

        t = np.arange(0, 2.0, 1 / FS)
        out = lowpass(np.sin(2 * np.pi * 20.0 * t), 20.0, FS)
        steady = out[len(out) // 4: 3 * len(out) // 4]
        assert abs(steady.max() - 0.50) < 0.01

        v = min_jerk_speed(0.3, 1.0, FS)
        assert abs(sparc(v, FS) - sparc_oracle(v, FS)) < 0.05
        assert sparc(v, FS) == sparc(2.0 * v, FS)
        family = [sparc(submovement_family(j, FS), FS) for j in range(1, 5)]
        assert all(b2 < a2 for a2, b2 in zip(family, family[1:]))

        kept, removed, _ = remove_outliers([1, 2, 3, 4, 100])
        assert kept == [1.0, 2.0, 3.0, 4.0] and removed == [100.0]


def test_protocol(capsys, tmp_path):
    from teleopsim.config import config_from_dict
    from teleopsim.session import run_experiment
    from teleopsim.wire import (WIRE_SIZES, MsgType, SequenceTracker,
                                decode, encode)
    from teleopsim.transport import ImpairedLink, LinkModel
    from tests.test_wire import random_message

    with criterion("protocol", 30.0, capsys):
        assert WIRE_SIZES[MsgType.LEADER_STATE] == 72
        assert WIRE_SIZES[MsgType.FOLLOWER_STATE] == 160
        assert WIRE_SIZES[MsgType.FORCE_CMD] == 40
        assert WIRE_SIZES[MsgType.TORQUE_CMD] == 64

        rng = np.random.default_rng(5)
        for mtype in MsgType:
            for _ in range(10_000):
                msg = random_message(mtype, rng)
                out = decode(encode(msg))
                assert type(out) is type(msg) and out == msg

        tracker = SequenceTracker()
        mk = lambda s: random_message(MsgType.FORCE_CMD,
                                      np.random.default_rng(s))._replace(seq=s)
        assert tracker.accept("p", mk(7))
        assert not tracker.accept("p", mk(5))
        assert not tracker.accept("p", mk(7))
        assert tracker.accept("p", mk(9))

        link = ImpairedLink(LinkModel(drop_prob=1.0, seed=1))
        for i in range(1000):
            link.submit(b"x", now=i * 0.002)
        assert link.poll(1e9) == []

        cfg = config_from_dict({
            "session": {"seed": 5, "condition_order": ["HD", "VD"]},
            "task": {"blocks": 1, "familiarization": 1},
            "link": {"base_latency": 0.020, "jitter": 0.010,
                     "drop_prob": 0.10},
        })
        res = run_experiment(cfg, str(tmp_path / "impaired"),
                             max_sim_seconds=900)
        assert res.n_trials_done == 12
        assert res.n_confirmed == 12, "impaired session left trials unconfirmed"


@pytest.fixture(scope="module")
def full_session_runs(tmp_path_factory):
    from teleopsim.config import SessionConfig
    from teleopsim.session import run_experiment

    cfg = SessionConfig()  # seed 42, full protocol, loopback, scripted
    base = tmp_path_factory.mktemp("e2e")
    t0 = time.perf_counter()
    r1 = run_experiment(cfg, str(base / "run1"))
    r2 = run_experiment(cfg, str(base / "run2"))
    return cfg, r1, r2, time.perf_counter() - t0


def test_end_to_end_determinism(capsys, full_session_runs):
    from teleopsim.tasks import ADL_POSES

    cfg, r1, r2, elapsed = full_session_runs
    with criterion("end-to-end-determinism", None, capsys):
        assert elapsed < 120.0, f"two runs took {elapsed:.1f}s (budget 120s)"
        assert r1.checksums == r2.checksums, "runs are not byte-identical"

        events = pd.read_csv(r1.events_path)
        analyzed = events[(events["familiarization"] == 0)
                          & (events["event"] == "target_shown")]
        assert len(analyzed) == 30, "expected 3 blocks x 5 poses x 2 conditions"

        confirmed = events[(events["familiarization"] == 0)
                           & (events["event"] == "pose_confirmed")]
        assert len(confirmed) == 30, "every analyzed trial must confirm"
        for trial_id in confirmed["trial_id"]:
            t_shown = float(analyzed[analyzed["trial_id"] == trial_id]["t_s"].iloc[0])
            t_conf = float(confirmed[confirmed["trial_id"] == trial_id]["t_s"].iloc[0])
            assert t_conf - t_shown >= 3.000 - 1e-9

        pose_names = {p.name.lower() for p in ADL_POSES}
        for (cond, block), group in analyzed.groupby(["condition", "block"]):
            assert set(group["pose_id"]) == pose_names, (
                f"block {cond}/{block} is not a permutation of the poses")

        t = pd.read_csv(r1.ticks_path)["t_s"].to_numpy()
        assert np.max(np.abs(np.diff(t) - 0.002)) < 1e-9, "tick spacing"


def test_demonstrative_batch(capsys, tmp_path):
    """Batch property: the analyzer emits per-condition means and the
    counts/%/mean/sd-shaped outlier report over 20 seeded full sessions.
    No claim about any particular effect size or direction is made."""
    from teleopsim.analysis import OUTLIER_COLUMNS, batch_analyze
    from teleopsim.config import SessionConfig
    from teleopsim.session import run_experiment
    from dataclasses import replace

    with criterion("demonstrative-batch", None, capsys):
        run_dirs = []
        for seed in range(1000, 1020):
            cfg = replace(SessionConfig(), seed=seed)
            out = tmp_path / f"s{seed}"
            res = run_experiment(cfg, str(out))
            assert res.n_trials_done == 36
            run_dirs.append(str(out))

        agg = batch_analyze(run_dirs, str(tmp_path / "batch"))
        assert agg["n_sessions"] == 20
        assert agg["n_trials"] == 600  # 20 sessions x 30 analyzed trials

        for cond in ("HD", "VD"):
            stats = agg["conditions"][cond]
            for metric in ("completion_time", "sparc_elbow", "sparc_wrist"):
                assert metric in stats, f"missing {metric} for {cond}"
                assert np.isfinite(stats[metric]["mean"])
                assert stats[metric]["n"] > 0
            assert stats["completion_time"]["mean"] >= 3.0

        report = pd.read_csv(tmp_path / "batch" / "batch_outliers.csv")
        assert list(report.columns) == OUTLIER_COLUMNS
        assert len(report) == 6  # 3 metrics x 2 conditions
        assert (report["original_n"] == 300).all()
        assert (report["removed_n"] >= 0).all()
        assert np.isfinite(report[["mean_before", "mean_after",
                                   "sd_before", "sd_after"]].to_numpy()).all()

        for d in run_dirs:
            shutil.rmtree(d, ignore_errors=True)
