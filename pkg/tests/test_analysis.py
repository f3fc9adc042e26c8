"""Analyzer outputs: per-trial metrics, outlier report, aggregates."""
import json
import os

import numpy as np
import pandas as pd
import pytest

from teleopsim.analysis import LogFormatError, OUTLIER_COLUMNS, TRIAL_COLUMNS, analyze
from teleopsim.config import config_from_dict
from teleopsim.session import run_experiment


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    cfg = config_from_dict({"session": {"seed": 21},
                            "task": {"blocks": 1, "familiarization": 1}})
    out = tmp_path_factory.mktemp("bundle")
    run_experiment(cfg, str(out), max_sim_seconds=900)
    return str(out)


def test_analyze_outputs_exist_with_expected_shape(bundle, tmp_path):
    out = str(tmp_path / "analysis")
    aggregate = analyze(bundle, out)
    trials = pd.read_csv(os.path.join(out, "trials.csv"))
    assert list(trials.columns) == TRIAL_COLUMNS
    assert len(trials) == 10  # familiarization excluded
    assert trials["confirmed"].all()
    assert (trials["completion_s"] >= 3.0).all()
    assert (trials["sparc_elbow"] < 0).all()
    assert (trials["sparc_wrist"] < 0).all()

    outliers = pd.read_csv(os.path.join(out, "outliers.csv"))
    assert list(outliers.columns) == OUTLIER_COLUMNS
    assert set(outliers["metric"]) == {"completion_time", "sparc_elbow",
                                       "sparc_wrist"}
    assert set(outliers["condition"]) == {"HD", "VD"}

    with open(os.path.join(out, "aggregate.json")) as fh:
        agg = json.load(fh)
    assert agg == aggregate
    for cond in ("HD", "VD"):
        assert "completion_time" in agg["conditions"][cond]
        assert agg["conditions"][cond]["completion_time"]["mean"] >= 3.0


def test_analyze_is_idempotent(bundle, tmp_path):
    out1 = str(tmp_path / "a1")
    out2 = str(tmp_path / "a2")
    analyze(bundle, out1)
    analyze(bundle, out2)
    for name in ("trials.csv", "outliers.csv", "aggregate.json"):
        with open(os.path.join(out1, name), "rb") as f1, \
                open(os.path.join(out2, name), "rb") as f2:
            assert f1.read() == f2.read()


def test_analyze_does_not_mutate_raw_logs(bundle, tmp_path):
    import hashlib

    before = {
        name: hashlib.sha256(
            open(os.path.join(bundle, name), "rb").read()).hexdigest()
        for name in ("ticks.csv", "events.csv")
    }
    analyze(bundle, str(tmp_path / "out"))
    after = {
        name: hashlib.sha256(
            open(os.path.join(bundle, name), "rb").read()).hexdigest()
        for name in ("ticks.csv", "events.csv")
    }
    assert before == after


def test_synthetic_outlier_lands_in_report(bundle, tmp_path):
    """A fabricated 10x-slow trial must appear in the outlier counts."""
    import shutil

    doctored = str(tmp_path / "doctored")
    shutil.copytree(bundle, doctored)
    events = pd.read_csv(os.path.join(doctored, "events.csv"))
    # delay one HD confirmation by 300 s
    hd = events[(events["event"] == "pose_confirmed")
                & (events["condition"] == "HD")
                & (events["familiarization"] == 0)]
    idx = hd.index[0]
    events.loc[idx, "t_s"] = float(events.loc[idx, "t_s"]) + 300.0
    events.to_csv(os.path.join(doctored, "events.csv"), index=False)

    out = str(tmp_path / "out")
    analyze(doctored, out)
    outliers = pd.read_csv(os.path.join(out, "outliers.csv"))
    row = outliers[(outliers["metric"] == "completion_time")
                   & (outliers["condition"] == "HD")].iloc[0]
    assert row["removed_n"] >= 1
    assert row["mean_before"] > row["mean_after"]


def test_hand_computed_completion_means(tmp_path):
    """Synthetic bundle with known confirm times: means must match exactly."""
    out = str(tmp_path / "synthetic")
    os.makedirs(out)
    from teleopsim.session import EVENT_COLUMNS, TICK_COLUMNS

    rows = []
    events = []
    fs = 500.0
    trial_specs = [(0, "HD", 8.0), (1, "HD", 12.0), (2, "VD", 6.0),
                   (3, "VD", 10.0)]
    t_global = 0.0
    for trial_id, cond, duration in trial_specs:
        shown = t_global
        confirmed = shown + duration
        events.append((shown, trial_id, cond, 1, "drink", 0, "target_shown"))
        events.append((confirmed, trial_id, cond, 1, "drink", 0,
                       "pose_confirmed"))
        n = int(duration * fs)
        for i in range(n + 1):
            t = shown + i / fs
            x = 0.4 + 0.1 * np.sin(2 * np.pi * i / (n + 1))
            rows.append([t] + [0.1] * 6 + [x, 0.0, 1.0, x + 0.2, 0.0, 0.8]
                        + [0.0] * 6 + ["free"] + [0.0] * 12
                        + [trial_id, "drink", "reaching", cond, 1])
        t_global = confirmed + 1.0
    pd.DataFrame(rows, columns=TICK_COLUMNS).to_csv(
        os.path.join(out, "ticks.csv"), index=False)
    pd.DataFrame(events, columns=EVENT_COLUMNS).to_csv(
        os.path.join(out, "events.csv"), index=False)

    agg = analyze(out, str(tmp_path / "res"))
    assert agg["conditions"]["HD"]["completion_time"]["mean"] == 10.0
    assert agg["conditions"]["VD"]["completion_time"]["mean"] == 8.0


def test_malformed_bundle_named_in_error(tmp_path):
    with pytest.raises(LogFormatError, match="ticks.csv"):
        analyze(str(tmp_path), str(tmp_path / "out"))
