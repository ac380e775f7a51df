import random

import pytest

from minishogi_reach import legality
from minishogi_reach.codec import in_candidate_space, total_space, unrank_raw
from minishogi_reach.legality import (
    Stage,
    classify,
    classify_raw,
    flip_pass,
    opponent_check_pass,
    pawn_pass,
)
from minishogi_reach.rules import Position, from_text, hflip, initial_position

DOUBLE_CHECK = "r3b/5/4k/5/K4 b 2G2SBR2P 1"


def test_flip_pass_examples():
    gold_e3 = from_text("2k2/5/4G/5/2K2 b 2R2BG2S2P 1")
    assert not flip_pass(gold_e3)
    assert flip_pass(hflip(gold_e3))
    assert flip_pass(initial_position())
    assert flip_pass(from_text("2k2/5/5/5/2K2 b 2R2B2G2S2P 1"))


def test_pawn_pass_examples():
    assert not pawn_pass(from_text("1P2k/5/5/5/K4 b 2R2B2G2SP 1"))
    assert not pawn_pass(from_text("4k/1P3/5/1P3/K4 b 2R2B2G2S 1"))
    assert pawn_pass(from_text("1+P2k/5/5/5/K4 b 2R2B2G2SP 1"))
    assert not pawn_pass(from_text("4k/5/5/5/Kp3 b 2R2B2G2SP 1"))
    assert pawn_pass(from_text("4k/1p3/5/1P3/K4 b 2R2B2G2S 1"))
    assert pawn_pass(initial_position())


def test_opponent_check_pass_examples():
    assert not opponent_check_pass(from_text("5/5/5/k+S3/2K2 b 2R2B2GS2P 1"))
    assert not opponent_check_pass(from_text("5/2k2/2K2/5/5 b 2R2B2G2S2P 1"))
    assert opponent_check_pass(initial_position())


def test_classify_initial_is_reachable():
    v = classify(initial_position())
    assert v.stage == Stage.REACHABLE
    assert v.describe() == "Reachable"


def test_classify_short_circuits(monkeypatch):
    def boom(*args, **kwargs):
        raise AssertionError("search must not run")

    monkeypatch.setattr(legality, "can_reach_kk_raw", boom)
    v = classify(from_text("1P2k/5/5/5/K4 b 2R2B2G2SP 1"))
    assert v.stage == Stage.PASSED_FLIP
    assert v.failure == "PawnPlacement"
    assert v.describe() == "Failed: PawnPlacement"
    v = classify(from_text("5/5/5/k+S3/2K2 b 2R2B2GS2P 1"))
    assert v.failure == "OpponentKingCheck"
    v = classify(from_text("2k2/5/4G/5/2K2 b 2R2BG2S2P 1"))
    assert v.failure == "HorizontalFlip"


def test_classify_double_check():
    v = classify(from_text(DOUBLE_CHECK))
    assert v.failure == "Reachability"
    assert v.ply == 0
    assert v.describe() == "Failed: Reachability, ply=0"


def test_flip_consistency_and_monotone_funnel():
    rng = random.Random(21)
    total = total_space()
    counts = [0] * 5
    for _ in range(3000):
        s = unrank_raw(rng.randrange(total))
        pos = Position(s)
        if not legality.flip_pass_raw(s):
            mirror = hflip(pos)
            assert in_candidate_space(mirror)
            assert flip_pass(mirror)
        # cheap stages only; the search is exercised elsewhere
        stage = 0
        if legality.flip_pass_raw(s):
            stage = 1
            if pawn_pass(pos):
                stage = 2
                if opponent_check_pass(pos):
                    stage = 3
        for k in range(stage + 1):
            counts[k] += 1
    assert counts[0] >= counts[1] >= counts[2] >= counts[3]


@pytest.mark.parametrize("seed", [1, 2])
def test_classify_raw_matches_wrapper(seed):
    rng = random.Random(seed)
    total = total_space()
    for _ in range(100):
        s = unrank_raw(rng.randrange(total))
        assert classify_raw(s) == classify(Position(s))
