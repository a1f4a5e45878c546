import json
import math
import os
import struct
import subprocess

import pytest

import flsched


def small_config(**extra):
    cfg = {
        "clients": 10,
        "rounds": 4,
        "channel": {"n_subchannels": 3},
        "dataset": {"classes": 4, "dim": 5, "n": 300},
        "learner": {"arch": "softmax"},
    }
    cfg.update(extra)
    return cfg


def test_aou_matches_worked_example():
    state = flsched.AouState(1, "staleness")
    for r in range(3):
        state = flsched.aou_step(state, [], r)
    assert state.ages == [15.0]
    state = flsched.aou_step(state, [0], 3)
    assert state.ages == [0.0]


def test_ledger_increments_raw_value_and_averages():
    ledger = flsched.ValueLedger([0.5, 0.25], 0.0)
    ledger = ledger.record_round([0], 0.1)
    ledger = ledger.record_round([0, 1], -0.1)
    assert ledger.history(0) == [1.5, 1.5]
    assert ledger.scores == [1.5, 0.25]


def test_select_prefers_stale_clients():
    chosen = flsched.select("aou", [0, 1, 2, 3], 2, [9, 1, 5, 5], [0.1, 0.9, 0.8, 0.2])
    assert sorted(chosen) == [0, 2]
    with pytest.raises(ValueError):
        flsched.select("greedy", [0], 1, [1.0], [0.0])


def test_channel_is_seeded():
    cfg = flsched.ChannelConfig()
    cfg.p = 1.0
    a = flsched.draw_round(cfg, 5, 0, 3)
    b = flsched.draw_round(cfg, 5, 0, 3)
    assert flsched.reliable_set(a) == [0, 1, 2, 3, 4]
    assert a.gain(2, 7) == b.gain(2, 7)


def test_learner_gradients():
    data = flsched.synth_gaussian(3, 4, 30, 2.0, 1)
    params = flsched.ModelParams.initialize("softmax", 4, 3, seed=2)
    assert flsched.grad_check(params, data) < 1e-6
    zeros = flsched.ModelParams.initialize("softmax", 4, 3, seed=2)
    assert math.isfinite(flsched.local_loss(zeros, data))


def test_idx_loader(tmp_path):
    images = tmp_path / "img"
    labels = tmp_path / "lbl"
    images.write_bytes(struct.pack(">IIII", 0x803, 2, 1, 2) + bytes([0, 255, 51, 0]))
    labels.write_bytes(struct.pack(">II", 0x801, 2) + bytes([1, 0]))
    ds = flsched.load_idx(str(images), str(labels))
    assert len(ds) == 2
    assert ds.labels == [1, 0]
    assert ds.features[1] == 1.0
    labels.write_bytes(struct.pack(">II", 0x801, 3) + bytes([1, 0, 1]))
    with pytest.raises(flsched.FormatError):
        flsched.load_idx(str(images), str(labels))


def test_run_is_deterministic():
    a = flsched.run(small_config())
    b = flsched.run(small_config(), threads=3)
    assert len(a["records"]) == 4
    assert a == {**b, "records": a["records"]}
    assert [r["accuracy"] for r in a["records"]] == [r["accuracy"] for r in b["records"]]


def test_config_errors_surface():
    with pytest.raises(flsched.ConfigError):
        flsched.run({"channel": {"bogus": 1}})
    resolved = json.loads(flsched.resolve_config(json.dumps(small_config())))
    assert resolved["clients"] == 10
    assert set(json.loads(flsched.default_config())) == set(resolved)


def test_metrics_match_cli(tmp_path):
    cli = os.environ.get("FLSCHED_CLI")
    if not cli:
        pytest.skip("FLSCHED_CLI not set")
    cfg = small_config(sweep={"policies": ["random", "aou_and_ds"], "seeds": [1, 2]})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    subprocess.run([cli, "sweep", str(path), "-o", str(tmp_path / "out")], check=True,
                   capture_output=True)
    assert (tmp_path / "out" / "metrics.csv").read_text() == flsched.metrics_csv(json.dumps(cfg))
