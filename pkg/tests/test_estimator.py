import json
import math

import pytest

from minishogi_reach.codec import total_space
from minishogi_reach.estimator import (
    CheckpointError,
    FunnelCounts,
    SampleConfig,
    confidence_interval,
    make_report,
    run,
    sample_ranks,
)


def test_sample_ranks_deterministic_distinct_and_in_range():
    a = sample_ranks(5000, seed=7)
    assert a == sample_ranks(5000, seed=7)
    assert a != sample_ranks(5000, seed=8)
    assert len(set(a)) == 5000
    assert all(0 <= r < total_space() for r in a)
    assert sample_ranks(1000, seed=7) == a[:1000]


def test_sample_ranks_uniform_mean():
    ranks = sample_ranks(1_000_000, seed=1)
    mean = sum(ranks) / len(ranks) / total_space()
    assert abs(mean - 0.5) < 0.001


def test_confidence_interval_examples():
    lo, hi = confidence_interval(14_849_198, 100_000_000)
    assert lo == pytest.approx(0.148422, abs=1e-6)
    assert hi == pytest.approx(0.148561, abs=1e-6)
    # leading four digits, truncated
    assert int(lo * total_space() // 1e15) == 2376
    assert int(hi * total_space() // 1e15) == 2379
    assert confidence_interval(0, 1) == (0.0, 0.0)
    assert confidence_interval(1, 1) == (1.0, 1.0)
    lo, hi = confidence_interval(1, 3)
    assert 0.0 <= lo < hi <= 1.0
    wl, wh = confidence_interval(0, 10, "wilson")
    assert wl == 0.0 and wh > 0.0
    with pytest.raises(ValueError):
        confidence_interval(5, 4)
    with pytest.raises(ValueError):
        confidence_interval(1, 4, "exact")


def test_wald_half_width_formula():
    lo, hi = confidence_interval(300, 1000)
    assert (hi - lo) / 2 == pytest.approx(1.959963984540054 * math.sqrt(0.3 * 0.7 / 1000))


def test_sample_config_validation():
    with pytest.raises(ValueError):
        SampleConfig(n_samples=0)
    with pytest.raises(ValueError):
        SampleConfig(n_samples=10, batch_size=0)
    with pytest.raises(ValueError):
        SampleConfig(n_samples=10, worker_count=0)


def test_report_of_one_sample():
    fc = FunnelCounts(1, 1, 1, 1, 1)
    report = make_report(fc, seed=0)
    assert report.p_hat == 1.0
    assert report.ci_low == report.ci_high == 1.0
    assert report.count_point == pytest.approx(total_space())


def test_funnel_invariants():
    FunnelCounts(10, 9, 7, 3, 2, {0: 1}).check_invariants()
    with pytest.raises(AssertionError):
        FunnelCounts(10, 9, 7, 8, 2, {0: 6}).check_invariants()
    with pytest.raises(AssertionError):
        FunnelCounts(10, 9, 7, 3, 2, {}).check_invariants()


def test_funnel_round_trip():
    fc = FunnelCounts(10, 9, 7, 3, 1, {0: 1, 2: 1}, 0)
    assert FunnelCounts.from_dict(json.loads(json.dumps(fc.to_dict()))) == fc


@pytest.fixture(scope="module")
def small_run():
    return run(SampleConfig(n_samples=400, seed=3, batch_size=50))


def test_run_funnel_shape(small_run):
    f = small_run.funnel
    assert f.generated == 400
    assert f.exhausted == 0
    f.check_invariants()
    assert small_run.p_hat == f.reachable / 400
    assert small_run.ci_low <= small_run.p_hat <= small_run.ci_high
    assert "Reachability" in small_run.format_table()
    assert json.loads(small_run.to_json())["n_samples"] == 400


def test_worker_count_does_not_change_report(small_run):
    parallel = run(SampleConfig(n_samples=400, seed=3, batch_size=50, worker_count=2))
    assert parallel.to_dict() == small_run.to_dict()


def test_checkpoint_resume(tmp_path, small_run):
    path = tmp_path / "run.ckpt"
    config = SampleConfig(n_samples=400, seed=3, batch_size=50, checkpoint_path=path)
    first = run(config)
    assert first.to_dict() == small_run.to_dict()
    lines = path.read_text().splitlines(keepends=True)
    assert len(lines) == 8
    # keep three whole records plus half of the fourth
    path.write_text("".join(lines[:3]) + lines[3][: len(lines[3]) // 2])
    calls = []
    resumed = run(config, progress=lambda done, total: calls.append(done))
    assert resumed.to_dict() == small_run.to_dict()
    assert calls == [4, 5, 6, 7, 8]
    assert len(path.read_text().splitlines()) == 8


def test_checkpoint_mismatch_is_an_error(tmp_path):
    path = tmp_path / "run.ckpt"
    run(SampleConfig(n_samples=60, seed=3, batch_size=20, checkpoint_path=path))
    with pytest.raises(CheckpointError):
        run(SampleConfig(n_samples=60, seed=4, batch_size=20, checkpoint_path=path))
    with pytest.raises(CheckpointError):
        run(SampleConfig(n_samples=60, seed=3, batch_size=30, checkpoint_path=path))
    text = path.read_text().splitlines(keepends=True)
    path.write_text(text[0] + "{not json}\n" + "".join(text[1:]))
    with pytest.raises(CheckpointError):
        run(SampleConfig(n_samples=60, seed=3, batch_size=20, checkpoint_path=path))
