# Copyright 2026 The vidcus Authors
# SPDX-License-Identifier: Apache-2.0

import itertools
import json

import numpy as np
import pytest

import vidcus


def test_lottery_positions_ascending_and_covering():
    draws = vidcus.sample_lottery_many(2, 4, 6000, seed=3)
    assert draws.shape == (6000, 2)
    assert np.all(draws[:, 0] < draws[:, 1])
    seen = {tuple(r) for r in draws.tolist()}
    assert seen == set(itertools.combinations(range(1, 5), 2))
    assert vidcus.sample_lottery(3, 3, seed=1) == [1, 2, 3]
    with pytest.raises(ValueError):
        vidcus.sample_lottery(4, 3, seed=1)


def test_temporal_positions_share_slots():
    control, noise = vidcus.temporal_positions(4, 3)
    assert control == noise == [5, 6, 7]
    control, noise = vidcus.temporal_positions(4, 3, mode="naive")
    assert noise == [8, 9, 10]


def test_plucker_constraint():
    p = vidcus.plucker(6.0, 6.0, 4.0, 4.0, 8, 8, np.eye(3), np.array([1.0, -2.0, 0.5]))
    assert p.shape == (8, 8, 6)
    assert np.abs(np.sum(p[..., :3] * p[..., 3:], axis=-1)).max() < 1e-9
    assert np.allclose(np.linalg.norm(p[..., 3:], axis=-1), 1.0)


def test_fm_loss_matches_numpy():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((2, 4, 4, 3)).astype(np.float32)
    b = rng.standard_normal((2, 4, 4, 3)).astype(np.float32)
    expected = np.mean((a.astype(np.float64) - b) ** 2)
    assert vidcus.fm_loss(a, b) == pytest.approx(expected, rel=1e-12)


def test_generate_round_trip_and_train(tmp_path):
    samples = vidcus.generate(3, seed=5, out=tmp_path / "data")
    loaded = vidcus.load_dataset(tmp_path / "data")
    assert len(samples) == len(loaded)
    for a, b in zip(samples, loaded):
        assert a["task"] == b["task"]
        assert np.array_equal(a["video"], b["video"])
    assert {s["task"] for s in samples} >= {"text2video", "depth2video"}

    plan = vidcus.inspect_plan(tmp_path / "data", 0)
    assert plan.startswith("plan ")

    config = {
        "total_steps": 5,
        "batch_size": 2,
        "peak_lr": 2e-3,
        "warmup_steps": 2,
        "model": {"hidden": 16, "heads": 2, "layers": 1, "encoding_dim": 8, "patch": [1, 8, 8]},
    }
    losses = vidcus.train(tmp_path / "data", config, out=tmp_path / "run")
    assert len(losses) == 5 and all(np.isfinite(losses))
    assert (tmp_path / "run" / "checkpoint.vck").exists()
    assert vidcus.train(tmp_path / "data", config) == losses
    with pytest.raises(ValueError):
        vidcus.train(tmp_path / "data", {"total_steps": 5, "bogus": 1})


def test_metrics_static_video():
    rng = np.random.default_rng(1)
    frame = rng.random((32, 32, 3), dtype=np.float32)
    video = np.repeat(frame[None], 6, axis=0)
    assert vidcus.temporal_consistency(video) == pytest.approx(1.0, abs=1e-6)
    assert vidcus.dynamic_degree(video) == 0.0
    assert -1.0 <= vidcus.text_alignment(video, "a red circle IMG1") <= 1.0
