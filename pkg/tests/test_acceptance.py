"""End-to-end acceptance checks, one test per criterion.

Each test records a single ``CRITERION n: PASS|FAIL ...`` line, printed as
the test runs and again in the terminal summary. The whole module takes on
the order of an hour on one core. Set ``MINISHOGI_ESTIMATE_CHECKPOINT`` to a
file path to let the 10^6-sample estimate resume from an earlier run.
"""

import json
import os
import subprocess
import sys
import time

import pytest

from minishogi_reach import cli
from minishogi_reach.codec import (
    kpos_count,
    pattern_table,
    placement_count,
    rank,
    unrank,
    unrank_raw,
)
from minishogi_reach.estimator import SampleConfig, confidence_interval, run, sample_ranks
from minishogi_reach.legality import Stage, classify_raw
from minishogi_reach.oracle import brute_force_placements, forward_enumerate
from minishogi_reach.retro import can_reach_kk, heuristic_raw, is_kk, prev
from minishogi_reach.rules import (
    HAND_KINDS,
    Position,
    apply_raw,
    from_text,
    hflip,
    legal_moves_raw,
)

pytestmark = pytest.mark.slow

TOTAL = 16_014_219_505_238_849_250


@pytest.fixture
def verdict(record_property, capsys):
    def report(n: int, ok: bool, detail: str) -> None:
        line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        record_property("acceptance", line)
        with capsys.disabled():
            print(f"\n{line}")
        assert ok, line

    return report


def test_criterion_1_space_count(verdict):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "minishogi_reach", "count"], capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    printed = proc.stdout.strip()
    ok = proc.returncode == 0 and printed == str(TOTAL) and elapsed < 1.0
    verdict(1, ok, f"count printed {printed} in {elapsed:.2f}s")


def test_criterion_2_king_pairs(verdict):
    verdict(2, kpos_count() == 310, f"kpos_count() = {kpos_count()}")


def test_criterion_3_codec_bijection(verdict):
    failures = 0
    for r in sample_ranks(1_000_000, seed=3):
        if rank(unrank(r)) != r:
            failures += 1

    # all-in-hand stratum: local indices distinct, in range and contiguous
    table = pattern_table()
    pi = len(table.patterns) - 1
    pattern, offset = table.patterns[pi], table.offsets[pi]
    locals_ = sorted(rank(Position(unrank_raw(offset + i))) - offset for i in range(pattern.n_c))
    stratum_ok = pattern.n_c == 75_330 and locals_ == list(range(75_330))
    verdict(3, failures == 0 and stratum_ok,
            f"10^6 random round trips, {failures} failures; all-in-hand stratum {len(locals_)} contiguous={stratum_ok}")


def test_criterion_4_counting_oracle(verdict):
    bad = [
        (kind, n, v)
        for kind in HAND_KINDS
        for n in range(0, 9)
        for v in range(0, min(2, n) + 1)
        if placement_count(kind, n, v) != brute_force_placements(kind, n, v)
    ]
    verdict(4, not bad, f"placement_count vs brute force, {len(bad)} discrepancies")


def test_criterion_5_forward_cross_validation(verdict, capsys):
    t0 = time.perf_counter()
    code = cli.main(["oracle-verify", "--depth", "6", "--json"])
    payload = json.loads(capsys.readouterr().out)
    elapsed = time.perf_counter() - t0
    ok = code == 0 and payload["violations"] == 0
    verdict(5, ok, f"depth 6: {payload['positions']} positions, {payload['violations']} violations, "
                   f"exit {code}, {elapsed / 60:.1f} min")


@pytest.fixture(scope="module")
def million_run(tmp_path_factory):
    path = os.environ.get("MINISHOGI_ESTIMATE_CHECKPOINT") or tmp_path_factory.mktemp("est") / "est.ckpt"
    t0 = time.perf_counter()
    report = run(SampleConfig(n_samples=1_000_000, seed=42, checkpoint_path=path))
    return report, time.perf_counter() - t0


def test_criterion_6_statistical_reproduction(verdict, million_run):
    report, elapsed = million_run
    f = report.funnel
    n = f.generated
    fractions = {
        "p_hat": (f.reachable / n, 0.1485, 0.0015),
        "flip": (f.passed_flip / n, 0.9677, 0.0010),
        "pawn": (f.passed_pawn / n, 0.7780, 0.0020),
        "check": (f.passed_check / n, 0.2151, 0.0020),
    }
    ok = n == 1_000_000 and f.exhausted == 0
    parts = []
    for name, (value, centre, tol) in fractions.items():
        ok &= abs(value - centre) <= tol
        parts.append(f"{name}={value:.5f}")
    verdict(6, ok, f"{', '.join(parts)}, exhausted={f.exhausted}, {elapsed / 60:.1f} min")


def test_criterion_7_interval_arithmetic(verdict):
    lo, hi = confidence_interval(14_849_198, 100_000_000)
    shown = (f"{lo:.7f}"[:7], f"{hi:.7f}"[:7])
    counts = (int(lo * TOTAL // 1e15), int(hi * TOTAL // 1e15))
    ok = shown == ("0.14842", "0.14856") and counts == (2376, 2379)
    verdict(7, ok, f"CI [{lo:.6f}, {hi:.6f}], counts [{lo * TOTAL:.4e}, {hi * TOTAL:.4e}]")


def test_criterion_8_ply_zero_dominance(verdict, million_run):
    report, _ = million_run
    hist = report.funnel.backtrack_ply_histogram
    unreachable = sum(hist.values())
    share = hist.get(0, 0) / unreachable
    max_ply = max(hist)
    verdict(8, share >= 0.997 and max_ply <= 12,
            f"ply-0 share {share:.5f} of {unreachable} unreachable, max ply {max_ply}, histogram {hist}")


def _adjointness_violations(corpus: list[bytes]) -> int:
    bad = 0
    for s in corpus:
        pos = Position(s)
        for m in legal_moves_raw(s):
            if pos not in prev(Position(apply_raw(s, m))):
                bad += 1
        for p in prev(pos):
            if not any(apply_raw(p.state, m) == s for m in legal_moves_raw(p.state)):
                bad += 1
    return bad


def _zero_set_violations(n: int) -> int:
    bad = 0
    for r in sample_ranks(n, seed=9):
        s = unrank_raw(r)
        bad += (heuristic_raw(s) == 0) != is_kk(Position(s))
    edges = {
        "4k/5/5/5/K4 b 2R2B2G2S2P 1": True,
        "2k2/5/5/2K2/5 b 2R2B2G2S2P 1": True,  # distance 3
        "5/2k2/5/2K2/5 b 2R2B2G2S2P 1": False,  # distance 2
        "5/5/1k3/K4/5 b 2R2B2G2S2P 1": False,  # distance 2 diagonally
        "4k/5/5/5/K3P b 2R2B2G2SP 1": False,
        "4k/5/5/5/K3p b 2R2B2G2SP 1": False,
    }
    for text, expected in edges.items():
        s = from_text(text).state
        bad += is_kk(Position(s)) != expected
        bad += (heuristic_raw(s) == 0) != expected
    return bad


def _flip_violations(n: int) -> tuple[int, int]:
    bad = searched = 0
    for r in sample_ranks(n, seed=10):
        s = unrank_raw(r)
        if classify_raw(s).stage < Stage.PASSED_CHECK:
            continue
        searched += 1
        pos = Position(s)
        bad += type(can_reach_kk(pos)) is not type(can_reach_kk(hflip(pos)))
    return bad, searched


def test_criterion_9_property_suites(verdict):
    corpus = sorted(p.state for p in forward_enumerate(4).positions)
    adjoint = _adjointness_violations(corpus)
    zero_set = _zero_set_violations(100_000)
    flips, searched = _flip_violations(10_000)

    kw = dict(n_samples=3000, seed=77, batch_size=250)
    one = run(SampleConfig(worker_count=1, **kw)).to_json()
    two = run(SampleConfig(worker_count=2, **kw)).to_json()
    same = one == two

    ok = adjoint == 0 and zero_set == 0 and flips == 0 and same
    verdict(9, ok, f"adjointness over {len(corpus)} positions: {adjoint} violations; "
                   f"zero-set: {zero_set}; flip equivariance over {searched} searched of 10^4: {flips}; "
                   f"workers 1 vs 2 identical: {same}")
