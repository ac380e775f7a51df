import pytest

from minishogi_reach.codec import in_candidate_space, rank, unrank
from minishogi_reach.legality import classify
from minishogi_reach.oracle import (
    brute_force_placements,
    forward_enumerate,
    forward_layers,
    representative,
    verify_members,
)
from minishogi_reach.rules import BISHOP, GOLD, KING, PAWN, from_text, hflip, initial_position, rotate


def test_brute_force_examples():
    assert brute_force_placements(GOLD, 23, 1) == 46
    assert brute_force_placements(PAWN, 5, 1) == 20
    assert brute_force_placements(BISHOP, 4, 2) == 6 * 16
    assert brute_force_placements(GOLD, 3, 0) == 1
    with pytest.raises(ValueError):
        brute_force_placements(KING, 3, 1)


def test_representative():
    start = initial_position()
    assert representative(start) == start
    assert representative(rotate(start)) == start
    mirrored = from_text("4k/5/5/5/3K1 b 2R2B2G2S2P 1")
    assert representative(mirrored) == hflip(mirrored)
    both_c = from_text("2k2/5/4G/5/2K2 b 2R2BG2S2P 1")
    assert representative(both_c) == hflip(both_c)
    assert representative(hflip(both_c)) == hflip(both_c)


def test_forward_sizes():
    fs = forward_enumerate(3)
    assert fs.new_per_depth == [1, 14, 181, 1498]
    assert len(fs.positions) == 1694
    assert forward_enumerate(0).new_per_depth == [1]
    with pytest.raises(ValueError):
        forward_enumerate(-1)


def test_first_layer_raw_and_normalised():
    layers = forward_layers(1)
    assert len(layers[1]) == 14
    assert {representative(p) for p in layers[1]} == forward_enumerate(1).positions - {initial_position()}


def test_members_are_candidates_and_reachable():
    fs = forward_enumerate(2)
    for pos in fs.positions:
        assert in_candidate_space(pos)
        assert unrank(rank(pos)) == pos
        assert classify(pos).reachable
    assert verify_members(sorted(p.state for p in fs.positions)) == []


def test_verify_members_reports_problems():
    bad = from_text("r3b/5/4k/5/K4 b 2G2SBR2P 1")
    outside = from_text("4k/5/5/5/3K1 b 2R2B2G2S2P 1")
    problems = verify_members([bad.state, outside.state])
    assert [why for _, why in problems] == ["Failed: Reachability, ply=0", "not in candidate space"]


def test_dump_is_sorted_text():
    lines = forward_enumerate(1).dump()
    assert lines == sorted(lines)
    assert len(lines) == 15
