"""CLI surface: run + analyze subcommands, config loading, exit codes."""
import json
import os

import pandas as pd
import pytest

from teleopsim.cli import main
from teleopsim.config import config_digest, config_from_dict, load_config


def test_run_and_analyze_round_trip(tmp_path, capsys):
    config = tmp_path / "session.toml"
    config.write_text(
        "\n".join([
            "[session]",
            "seed = 9",
            "[task]",
            "blocks = 1",
            "familiarization = 0",
        ])
    )
    run_dir = str(tmp_path / "run")
    code = main(["run", "--config", str(config), "--out", run_dir])
    assert code == 0
    out = capsys.readouterr().out
    assert "session complete" in out
    assert os.path.exists(os.path.join(run_dir, "ticks.csv"))

    analysis_dir = str(tmp_path / "analysis")
    code = main(["analyze", "--in", run_dir, "--out", analysis_dir])
    assert code == 0
    trials = pd.read_csv(os.path.join(analysis_dir, "trials.csv"))
    assert len(trials) == 10


def test_seed_override_changes_digest(tmp_path):
    run_a = str(tmp_path / "a")
    run_b = str(tmp_path / "b")
    base = {"session": {"seed": 1}, "task": {"blocks": 1, "familiarization": 0}}
    config = tmp_path / "c.toml"
    config.write_text("[session]\nseed = 1\n[task]\nblocks = 1\nfamiliarization = 0\n")
    assert main(["run", "--config", str(config), "--out", run_a]) == 0
    assert main(["run", "--config", str(config), "--seed", "2",
                 "--out", run_b]) == 0
    with open(os.path.join(run_a, "manifest.json")) as fh:
        m_a = json.load(fh)
    with open(os.path.join(run_b, "manifest.json")) as fh:
        m_b = json.load(fh)
    assert m_a["seed"] == 1 and m_b["seed"] == 2
    assert m_a["config_digest"] != m_b["config_digest"]
    assert m_a["config_digest"] == config_digest(config_from_dict(base))


def test_analyze_missing_bundle_fails_cleanly(tmp_path, capsys):
    code = main(["analyze", "--in", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "out")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_config_loading_sections(tmp_path):
    config = tmp_path / "full.toml"
    config.write_text("\n".join([
        "[session]",
        'condition_order = ["HD", "VD"]',
        "seed = 77",
        "[gains]",
        "p_a = 60.0",
        "[frame_map]",
        "c_scale = 8.0",
        "[kinematics]",
        "upper_arm_length = 0.33",
        "[link]",
        "drop_prob = 0.05",
        "[poses]",
        "drink = [0.1, 0.9, 0.0, 2.0, 1.0, 0.0]",
    ]))
    cfg = load_config(str(config))
    assert cfg.seed == 77
    assert cfg.condition_order[0].name == "HD"
    assert cfg.gains.p_a == 60.0
    assert cfg.frame_map.c_scale == 8.0
    assert cfg.kinematics.upper_arm_length == 0.33
    assert cfg.link.drop_prob == 0.05
    from teleopsim.tasks import Pose

    assert cfg.pose_overrides[Pose.DRINK][3] == 2.0


def test_config_rejects_unknown_keys(tmp_path):
    config = tmp_path / "bad.toml"
    config.write_text("[gains]\nwarp_factor = 9\n")
    with pytest.raises(ValueError, match="warp_factor"):
        load_config(str(config))


def test_config_rejects_bad_enums():
    with pytest.raises(ValueError, match="transport"):
        config_from_dict({"session": {"transport": "carrier-pigeon"}})
    with pytest.raises(ValueError, match="leader_source"):
        config_from_dict({"session": {"leader_source": "ghost"}})
    with pytest.raises(ValueError, match="condition_order"):
        config_from_dict({"session": {"condition_order": ["HD", "HD"]}})


def test_config_digest_stable_and_sensitive():
    a = config_from_dict({"session": {"seed": 5}})
    b = config_from_dict({"session": {"seed": 5}})
    c = config_from_dict({"session": {"seed": 6}})
    assert config_digest(a) == config_digest(b)
    assert config_digest(a) != config_digest(c)
