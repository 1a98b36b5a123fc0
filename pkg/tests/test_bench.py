import json

import numpy as np
import pytest

from fewshotkit import synthetic
from fewshotkit.bench import (ResultFormatError, RunConfig, confidence_interval,
                              load_results, persist_result, run_benchmark)
from fewshotkit.episodes import EpisodeSpec, InsufficientClassesError


def small_config(head, shots=1, episodes=20, **kw):
    return RunConfig(head=head, spec=EpisodeSpec(5, shots, 5), episodes=episodes, **kw)


def test_confidence_interval_values():
    assert confidence_interval([1, 1, 1, 1]) == (1.0, 0.0)
    mean, hw = confidence_interval([0.0, 1.0])
    assert mean == pytest.approx(0.5)
    assert hw == pytest.approx(0.980, abs=1e-6)
    assert confidence_interval([0.7]) == (0.7, 0.0)
    with pytest.raises(ValueError):
        confidence_interval([])


def test_point_mass_dataset_is_perfectly_separable():
    pooled = synthetic.point_mass("pm", 6, 25, 16, seed=0)
    for head in ("protonet", "simpleshot", "laplacianshot", "deepemd", "deepbdc"):
        r = run_benchmark(pooled, small_config(head, episodes=20))
        assert r.mean_acc == 1.0, head
        assert r.ci95 == 0.0


def test_chance_level_smoke():
    chance = synthetic.label_noise("ch", 5, 120, 8, seed=1)
    r = run_benchmark(chance, RunConfig(head="protonet", spec=EpisodeSpec(5, 5, 15),
                                        episodes=400, base_seed=2))
    assert abs(r.mean_acc - 0.2) < 0.03


def test_rerun_is_bit_identical():
    ds = synthetic.gaussian_pooled("g", 8, 20, 16, separation=0.7, seed=3)
    a = run_benchmark(ds, small_config("laplacianshot", episodes=30, base_seed=9))
    b = run_benchmark(ds, small_config("laplacianshot", episodes=30, base_seed=9))
    assert np.array_equal(a.per_episode, b.per_episode)
    assert a.mean_acc == b.mean_acc and a.ci95 == b.ci95


def test_worker_count_does_not_change_results():
    ds = synthetic.gaussian_pooled("g", 8, 20, 16, separation=0.7, seed=3)
    serial = run_benchmark(ds, small_config("protonet", episodes=24, base_seed=5))
    pooled = run_benchmark(ds, small_config("protonet", episodes=24, base_seed=5, workers=3))
    assert np.array_equal(serial.per_episode, pooled.per_episode)


def test_episode_seeds_follow_derivation():
    # accuracy vector must be invariant to evaluating a prefix: episode i
    # depends only on (base_seed, i)
    ds = synthetic.gaussian_pooled("g", 6, 20, 8, separation=0.7, seed=4)
    long = run_benchmark(ds, small_config("protonet", episodes=12, base_seed=1))
    short = run_benchmark(ds, small_config("protonet", episodes=6, base_seed=1))
    assert np.array_equal(long.per_episode[:6], short.per_episode)


def test_shot_trend_on_separable_data():
    ds = synthetic.gaussian_pooled("trend", 12, 40, 32, separation=0.65, seed=7)
    means = {}
    for shots in (1, 5):
        r = run_benchmark(ds, RunConfig(head="protonet", spec=EpisodeSpec(5, shots, 15),
                                        episodes=150, base_seed=11))
        means[shots] = r.mean_acc
    assert means[5] >= means[1] - 0.01
    assert means[5] - means[1] > 0.05  # the trend is visible, not just tolerated


def test_grid_dataset_through_vector_head_mean_pools():
    grid = synthetic.gaussian_grid("gg", 6, 15, 8, 3, 3, separation=1.5, seed=8)
    r = run_benchmark(grid, small_config("protonet", episodes=10))
    assert 0.0 <= r.mean_acc <= 1.0


def test_ci_halfwidth_shrinks_like_sqrt_episodes():
    chance = synthetic.label_noise("ci", 5, 120, 8, seed=13)
    spec = EpisodeSpec(5, 1, 15)
    small = run_benchmark(chance, RunConfig(head="protonet", spec=spec,
                                            episodes=500, base_seed=21))
    large = run_benchmark(chance, RunConfig(head="protonet", spec=spec,
                                            episodes=5000, base_seed=21))
    assert small.ci95 >= 0.0 and large.ci95 > 0.0
    assert 2.5 <= small.ci95 / large.ci95 <= 3.9


def test_insufficient_classes_rejected():
    ds = synthetic.label_noise("few", 4, 30, 8, seed=9)
    with pytest.raises(InsufficientClassesError, match="insufficient"):
        run_benchmark(ds, small_config("protonet"))


def test_head_and_param_validation():
    with pytest.raises(ValueError, match="unknown head"):
        small_config("resnet")
    with pytest.raises(ValueError):
        small_config("protonet", episodes=0)
    with pytest.raises(ValueError):
        RunConfig(head="deepbdc", spec=EpisodeSpec(5, 1, 5), episodes=1, tau=0.0)


def test_params_echo_by_head():
    assert small_config("laplacianshot", lam=2.0, knn=5).params() == {"lambda": 2.0, "knn": 5}
    assert small_config("deepbdc", tau=0.5).params() == {"tau": 0.5}
    assert small_config("simpleshot", transform="l2").params() == {"transform": "l2"}
    assert small_config("protonet").params() == {}


def test_persist_and_load_round_trip(tmp_path):
    ds = synthetic.point_mass("pm", 6, 10, 4, seed=0)
    result = run_benchmark(ds, small_config("protonet", episodes=3))
    path = tmp_path / "r.jsonl"
    persist_result(result, path)
    persist_result(result, path)
    assert len(path.read_text().strip().splitlines()) == 2
    back = load_results(path)
    assert len(back) == 2
    first = back[0]
    assert first.dataset == result.dataset
    assert first.head == result.head
    assert np.array_equal(first.per_episode, result.per_episode)
    assert first.mean_acc == result.mean_acc
    assert first.ci95 == result.ci95
    assert first.version == result.version


def test_jsonl_schema_keys(tmp_path):
    ds = synthetic.point_mass("pm", 6, 10, 4, seed=0)
    result = run_benchmark(ds, small_config("protonet", episodes=2))
    path = tmp_path / "r.jsonl"
    persist_result(result, path)
    obj = json.loads(path.read_text())
    assert set(obj) == {"dataset", "head", "ways", "shots", "queries", "episodes",
                        "seed", "params", "mean_acc", "ci95", "per_episode",
                        "wall_s", "version"}


def test_load_results_names_bad_line(tmp_path):
    ds = synthetic.point_mass("pm", 6, 10, 4, seed=0)
    result = run_benchmark(ds, small_config("protonet", episodes=2))
    path = tmp_path / "r.jsonl"
    persist_result(result, path)
    with open(path, "a") as fh:
        fh.write("{broken\n")
    with pytest.raises(ResultFormatError, match="line 2"):
        load_results(path)
    path2 = tmp_path / "r2.jsonl"
    path2.write_text('{"dataset": "x"}\n')
    with pytest.raises(ResultFormatError, match="line 1"):
        load_results(path2)


def test_result_is_pure_function_of_dataset_and_config(tmp_path):
    from fewshotkit.store import load_dataset, save_dataset
    ds = synthetic.gaussian_pooled("pure", 7, 20, 8, separation=0.8, seed=12)
    path = tmp_path / "d.fseb"
    save_dataset(ds, path)
    roundtripped = load_dataset(path)
    a = run_benchmark(ds, small_config("simpleshot", episodes=15))
    b = run_benchmark(roundtripped, small_config("simpleshot", episodes=15))
    assert np.array_equal(a.per_episode, b.per_episode)
