"""Independent ground truth: forward enumeration from the start position and
literal enumeration of piece placements."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .rules import (
    FIRST,
    KING,
    KING_CODES,
    N_FILES,
    N_SQUARES,
    PROMOTABLE,
    SECOND,
    TURN_INDEX,
    Position,
    apply_raw,
    hflip_raw,
    initial_position,
    legal_moves_raw,
    order_key,
    rotate_raw,
    to_text,
)


def representative_raw(state: bytes) -> bytes:
    """Candidate-space representative: rotate to first player to move, then
    mirror so the kings satisfy the file restriction (smaller of the pair when
    both kings are on file c)."""
    if state[TURN_INDEX] == SECOND:
        state = rotate_raw(state)
    f1 = state.index(KING_CODES[FIRST], 0, N_SQUARES) % N_FILES
    f2 = state.index(KING_CODES[SECOND], 0, N_SQUARES) % N_FILES
    if f1 > 2 or (f1 == 2 and f2 > 2):
        return hflip_raw(state)
    if f1 == 2 and f2 == 2:
        flipped = hflip_raw(state)
        if order_key(flipped) < order_key(state):
            return flipped
    return state


def representative(pos: Position) -> Position:
    return Position(representative_raw(pos.state))


@dataclass
class ForwardSet:
    depth: int
    positions: set[Position] = field(default_factory=set)
    new_per_depth: list[int] = field(default_factory=list)

    def dump(self) -> list[str]:
        return sorted(to_text(p) for p in self.positions)


def forward_enumerate(max_depth: int) -> ForwardSet:
    """Representatives of every position reachable in at most ``max_depth`` plies.

    Moves commute with rotation and mirroring, so expanding representatives
    covers the same set as expanding raw positions.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    start = representative_raw(initial_position().state)
    seen = {start}
    frontier = [start]
    new_per_depth = [1]
    for _ in range(max_depth):
        nxt = []
        for s in frontier:
            for m in legal_moves_raw(s):
                child = representative_raw(apply_raw(s, m))
                if child not in seen:
                    seen.add(child)
                    nxt.append(child)
        new_per_depth.append(len(nxt))
        frontier = nxt
    return ForwardSet(max_depth, {Position(s) for s in seen}, new_per_depth)


def forward_layers(max_depth: int) -> list[list[Position]]:
    """Raw (un-normalised) positions by ply, deduplicated per layer."""
    layers = [[initial_position()]]
    for _ in range(max_depth):
        seen = set()
        nxt = []
        for pos in layers[-1]:
            for m in legal_moves_raw(pos.state):
                child = apply_raw(pos.state, m)
                if child not in seen:
                    seen.add(child)
                    nxt.append(Position(child))
        layers.append(nxt)
    return layers


def brute_force_placements(kind: int, squares: int, v: int) -> int:
    """Count distinct boards with ``v`` pieces of ``kind`` on ``squares`` squares,
    each labelled with an owner and, when promotable, a promotion state."""
    if kind == KING:
        raise ValueError("kings are placed separately")
    labels = [(owner, promoted) for owner in (FIRST, SECOND) for promoted in ((False, True) if PROMOTABLE[kind] else (False,))]
    boards = set()
    for chosen in itertools.combinations(range(squares), v):
        for labelling in itertools.product(labels, repeat=v):
            boards.add(tuple(zip(chosen, labelling)))
    return len(boards)


def verify_members(states: Iterable[bytes], params=None, budget=None) -> list[tuple[str, str]]:
    """Check candidate membership, codec round trip and a Reachable verdict.

    Returns (sfen, problem) pairs for every violation.
    """
    from .codec import in_candidate_space, rank, unrank
    from .legality import classify_raw
    from .retro import DEFAULT_BUDGET, DEFAULT_PARAMS

    params = params or DEFAULT_PARAMS
    budget = budget or DEFAULT_BUDGET
    bad = []
    for s in states:
        pos = Position(s)
        if not in_candidate_space(pos):
            bad.append((to_text(pos), "not in candidate space"))
            continue
        if unrank(rank(pos)) != pos:
            bad.append((to_text(pos), "codec round trip"))
        verdict = classify_raw(s, params, budget)
        if not verdict.reachable:
            bad.append((to_text(pos), verdict.describe()))
    return bad
