"""Offline analysis of a session log bundle.

Per analyzed trial: completion time and the smoothness of both graspable
points over the shown-to-confirmed segment. Outliers are screened per
(metric, condition) with the quartile-fence rule; outputs are a per-trial
CSV, an outlier report in the counts/%/mean/sd-before-after shape, and a
condition-level aggregate JSON. Raw logs are never modified.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .metrics import SparcParams, remove_outliers, sparc, speed_profile


class LogFormatError(ValueError):
    """Log bundle malformed; message names the offending file/row."""


@dataclass(frozen=True)
class TrialMetrics:
    trial_id: int
    condition: str
    block: int
    pose: str
    familiarization: bool
    confirmed: bool
    completion_s: float | None
    sparc_elbow: float | None
    sparc_wrist: float | None


TRIAL_COLUMNS = [
    "trial_id", "condition", "block", "pose", "confirmed",
    "completion_s", "sparc_elbow", "sparc_wrist",
]

OUTLIER_COLUMNS = [
    "metric", "condition", "original_n", "removed_n", "pct_removed",
    "mean_before", "mean_after", "sd_before", "sd_after",
]


def _load_bundle(in_dir: str):
    ticks_path = os.path.join(in_dir, "ticks.csv")
    events_path = os.path.join(in_dir, "events.csv")
    for path in (ticks_path, events_path):
        if not os.path.exists(path):
            raise LogFormatError(f"missing log file: {path}")
    try:
        ticks = pd.read_csv(ticks_path)
    except Exception as exc:
        raise LogFormatError(f"unreadable ticks.csv: {exc}") from exc
    try:
        events = pd.read_csv(events_path)
    except Exception as exc:
        raise LogFormatError(f"unreadable events.csv: {exc}") from exc
    required = {"t_s", "trial_id", "elbow_x", "wrist_x", "condition"}
    missing = required - set(ticks.columns)
    if missing:
        raise LogFormatError(f"ticks.csv lacks columns {sorted(missing)}")
    return ticks, events


def _sampling_rate(ticks: pd.DataFrame) -> float:
    dts = np.diff(ticks["t_s"].to_numpy()[:1000])
    dts = dts[dts > 0]
    if len(dts) == 0:
        raise LogFormatError("ticks.csv has no time progression")
    return 1.0 / float(np.median(dts))


def compute_trial_metrics(ticks: pd.DataFrame, events: pd.DataFrame,
                          sparc_params: SparcParams = SparcParams()) -> list[TrialMetrics]:
    fs = _sampling_rate(ticks)
    results = []
    for trial_id, group in events.groupby("trial_id", sort=True):
        first = group.iloc[0]
        shown = group.loc[group["event"] == "target_shown", "t_s"]
        confirmed = group.loc[group["event"] == "pose_confirmed", "t_s"]
        shown_t = float(shown.iloc[0]) if len(shown) else None
        confirmed_t = float(confirmed.iloc[0]) if len(confirmed) else None
        completion = (confirmed_t - shown_t
                      if shown_t is not None and confirmed_t is not None else None)
        sparc_elbow = sparc_wrist = None
        if completion is not None:
            seg = ticks[(ticks["trial_id"] == trial_id)
                        & (ticks["t_s"] >= shown_t)
                        & (ticks["t_s"] <= confirmed_t)]
            if len(seg) >= 3:
                for point, store in (("elbow", "sparc_elbow"),
                                     ("wrist", "sparc_wrist")):
                    pos = seg[[f"{point}_x", f"{point}_y", f"{point}_z"]].to_numpy()
                    speeds = speed_profile(pos, fs=fs)
                    if np.any(speeds != 0.0):
                        value = sparc(speeds, fs=fs, params=sparc_params)
                        if store == "sparc_elbow":
                            sparc_elbow = value
                        else:
                            sparc_wrist = value
        results.append(TrialMetrics(
            trial_id=int(trial_id),
            condition=str(first["condition"]),
            block=int(first["block"]),
            pose=str(first["pose_id"]),
            familiarization=bool(first["familiarization"]),
            confirmed=confirmed_t is not None,
            completion_s=completion,
            sparc_elbow=sparc_elbow,
            sparc_wrist=sparc_wrist,
        ))
    return results


_METRIC_FIELDS = {
    "completion_time": "completion_s",
    "sparc_elbow": "sparc_elbow",
    "sparc_wrist": "sparc_wrist",
}


def batch_analyze(run_dirs, out_dir: str, k_fence: float = 2.0,
                  sparc_params: SparcParams = SparcParams()) -> dict:
    """Pool analyzed trials from many session bundles.

    Outlier screening runs per (metric, condition) on the pooled values;
    writes batch_trials.csv, batch_outliers.csv and batch_aggregate.json.
    """
    os.makedirs(out_dir, exist_ok=True)
    pooled: list[tuple[int, TrialMetrics]] = []
    for idx, run_dir in enumerate(run_dirs):
        ticks, events = _load_bundle(run_dir)
        for tm in compute_trial_metrics(ticks, events, sparc_params):
            if not tm.familiarization:
                pooled.append((idx, tm))

    rows = pd.DataFrame(
        [
            {
                "session": idx,
                "trial_id": t.trial_id,
                "condition": t.condition,
                "block": t.block,
                "pose": t.pose,
                "confirmed": int(t.confirmed),
                "completion_s": t.completion_s,
                "sparc_elbow": t.sparc_elbow,
                "sparc_wrist": t.sparc_wrist,
            }
            for idx, t in pooled
        ],
        columns=["session"] + TRIAL_COLUMNS,
    )
    rows.to_csv(os.path.join(out_dir, "batch_trials.csv"), index=False)

    conditions = sorted(rows["condition"].dropna().unique())
    outlier_rows = []
    aggregate: dict = {"n_sessions": len(list(run_dirs)),
                       "n_trials": len(rows), "conditions": {}}
    for cond in conditions:
        cond_stats = {}
        for metric, field in _METRIC_FIELDS.items():
            values = [getattr(t, field) for _, t in pooled
                      if t.condition == cond and getattr(t, field) is not None]
            if not values:
                continue
            kept, _, report = remove_outliers(values, k=k_fence)
            outlier_rows.append({
                "metric": metric,
                "condition": cond,
                "original_n": report.original_n,
                "removed_n": report.removed_n,
                "pct_removed": round(report.pct_removed, 4),
                "mean_before": report.mean_before,
                "mean_after": report.mean_after,
                "sd_before": report.sd_before,
                "sd_after": report.sd_after,
            })
            arr = np.asarray(kept)
            cond_stats[metric] = {
                "n": len(arr),
                "mean": float(arr.mean()),
                "median": float(np.median(arr)),
                "sd": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
            }
        aggregate["conditions"][cond] = cond_stats
    pd.DataFrame(outlier_rows, columns=OUTLIER_COLUMNS).to_csv(
        os.path.join(out_dir, "batch_outliers.csv"), index=False
    )
    with open(os.path.join(out_dir, "batch_aggregate.json"), "w") as fh:
        json.dump(aggregate, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return aggregate


def analyze(in_dir: str, out_dir: str, k_fence: float = 2.0,
            sparc_params: SparcParams = SparcParams()) -> dict:
    """Analyze one log bundle; writes trials.csv, outliers.csv,
    aggregate.json into ``out_dir`` and returns the aggregate dict."""
    ticks, events = _load_bundle(in_dir)
    os.makedirs(out_dir, exist_ok=True)
    trials = compute_trial_metrics(ticks, events, sparc_params)
    analyzed = [t for t in trials if not t.familiarization]

    trials_frame = pd.DataFrame(
        [
            {
                "trial_id": t.trial_id,
                "condition": t.condition,
                "block": t.block,
                "pose": t.pose,
                "confirmed": int(t.confirmed),
                "completion_s": t.completion_s,
                "sparc_elbow": t.sparc_elbow,
                "sparc_wrist": t.sparc_wrist,
            }
            for t in analyzed
        ],
        columns=TRIAL_COLUMNS,
    )
    trials_frame.to_csv(os.path.join(out_dir, "trials.csv"), index=False)

    outlier_rows = []
    screened: dict[tuple[str, str], list[float]] = {}
    conditions = sorted({t.condition for t in analyzed})
    for metric, field in _METRIC_FIELDS.items():
        for cond in conditions:
            values = [getattr(t, field) for t in analyzed
                      if t.condition == cond and getattr(t, field) is not None]
            if not values:
                continue
            kept, _, report = remove_outliers(values, k=k_fence)
            screened[(metric, cond)] = kept
            outlier_rows.append({
                "metric": metric,
                "condition": cond,
                "original_n": report.original_n,
                "removed_n": report.removed_n,
                "pct_removed": round(report.pct_removed, 4),
                "mean_before": report.mean_before,
                "mean_after": report.mean_after,
                "sd_before": report.sd_before,
                "sd_after": report.sd_after,
            })
    pd.DataFrame(outlier_rows, columns=OUTLIER_COLUMNS).to_csv(
        os.path.join(out_dir, "outliers.csv"), index=False
    )

    aggregate: dict = {"conditions": {}, "n_analyzed": len(analyzed),
                       "n_confirmed": sum(t.confirmed for t in analyzed),
                       "n_unconfirmed": sum(not t.confirmed for t in analyzed)}
    for cond in conditions:
        cond_stats: dict = {}
        for metric in _METRIC_FIELDS:
            kept = screened.get((metric, cond))
            if not kept:
                continue
            arr = np.asarray(kept)
            cond_stats[metric] = {
                "n": len(arr),
                "mean": float(arr.mean()),
                "median": float(np.median(arr)),
                "sd": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
            }
        per_block = {}
        for block in sorted({t.block for t in analyzed if t.condition == cond}):
            vals = [t.completion_s for t in analyzed
                    if t.condition == cond and t.block == block
                    and t.completion_s is not None]
            if vals:
                per_block[str(block)] = {
                    "n": len(vals),
                    "mean_completion_s": float(np.mean(vals)),
                }
        cond_stats["blocks"] = per_block
        aggregate["conditions"][cond] = cond_stats

    with open(os.path.join(out_dir, "aggregate.json"), "w") as fh:
        json.dump(aggregate, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return aggregate
