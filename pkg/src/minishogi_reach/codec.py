"""Exact counting of the candidate position space and a rank/unrank bijection.

The candidate space holds every first-player-to-move placement of the ten
non-king pieces (board or either hand, any promotion state) with the first
king on files a-c, and the second king also on files a-c whenever the first
king stands on file c.

Rank layout. The 243 piece patterns (hand count 0-2 per kind, read as a
base-3 number with Gold most significant) are laid out one after another.
Inside a pattern the local index is a mixed-radix number, most significant
digit first:

1. one digit per kind with a non-zero hand count, giving the first player's
   share of it (base ``hand_count + 1``);
2. the king placement, 0-309;
3. per kind (Gold, Silver, Bishop, Rook, Pawn) a placement index over the
   squares still empty, in radix ``placement_count(kind, n_empty, v)``.

A placement index walks the ownership/promotion classes in summation order
(first player's promoted, second player's promoted, first player's
unpromoted, remainder second player's unpromoted) and inside a class packs
the colex ranks of the four square subsets.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from functools import lru_cache
from math import comb

from .rules import (
    FIRST,
    HAND_KINDS,
    KING_CODES,
    N_FILES,
    N_SQUARES,
    PROMOTABLE,
    SECOND,
    STATE_SIZE,
    TURN_INDEX,
    Position,
    code_kind,
    hand_index,
    make_code,
)

BOARD_H = 5
BOARD_W = 5
N_KINDS = len(HAND_KINDS)
N_PATTERNS = 3**N_KINDS
U64_MAX = 2**64 - 1


def _checked(x: int) -> int:
    if x > U64_MAX:
        raise OverflowError(f"{x} does not fit in 64 bits")
    return x


def placement_count(kind: int, n_empty: int, v: int) -> int:
    """Ways to put ``v`` pieces of ``kind`` on ``n_empty`` squares, each with an
    owner and, for promotable kinds, a promotion state."""
    if not 0 <= v <= n_empty:
        raise ValueError("need 0 <= v <= n_empty")
    ind = 1 if PROMOTABLE[kind] else 0
    total = 0
    for p0 in range(v * ind + 1):
        for p1 in range((v - p0) * ind + 1):
            for q0 in range(v - p0 - p1 + 1):
                total += (
                    comb(n_empty, p0)
                    * comb(n_empty - p0, p1)
                    * comb(n_empty - p0 - p1, q0)
                    * comb(n_empty - p0 - p1 - q0, v - p0 - p1 - q0)
                )
    return total


def kpos_count(h: int = BOARD_H, w: int = BOARD_W) -> int:
    """King placements: first king on the left half, or on the centre file
    with the second king on the left half including the centre."""
    return h * (w // 2) * (h * w - 1) + h * (h * ((w + 1) // 2) - 1)


@dataclass(frozen=True)
class PiecePattern:
    """Off-board and on-board counts per kind (players not distinguished)."""

    hand_counts: tuple[int, ...]
    board_counts: tuple[int, ...]
    n_c: int

    @property
    def index(self) -> int:
        idx = 0
        for h in self.hand_counts:
            idx = idx * 3 + h
        return idx


def count2n(hand_counts: tuple[int, ...], board_counts: tuple[int, ...]) -> int:
    n_hc = 1
    for h in hand_counts:
        if h > 0:
            n_hc *= h + 1
    n_bc = kpos_count()
    n_empty = BOARD_H * BOARD_W - 2
    for kind, v in zip(HAND_KINDS, board_counts):
        n_bc = _checked(n_bc * placement_count(kind, n_empty, v))
        n_empty -= v
    return _checked(n_hc * n_bc)


def pattern_for_index(idx: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    hand = []
    for _ in range(N_KINDS):
        idx, d = divmod(idx, 3)
        hand.append(d)
    hand_counts = tuple(reversed(hand))
    return hand_counts, tuple(2 - h for h in hand_counts)


@dataclass(frozen=True)
class PatternTable:
    patterns: tuple[PiecePattern, ...]
    offsets: tuple[int, ...]  # exclusive prefix sums
    total: int


@lru_cache(maxsize=1)
def pattern_table() -> PatternTable:
    patterns = []
    offsets = []
    running = 0
    for idx in range(N_PATTERNS):
        hc, bc = pattern_for_index(idx)
        n_c = count2n(hc, bc)
        patterns.append(PiecePattern(hc, bc, n_c))
        offsets.append(running)
        running = _checked(running + n_c)
    return PatternTable(tuple(patterns), tuple(offsets), running)


def total_space() -> int:
    return pattern_table().total


# -- king placements ------------------------------------------------------------

def _king_pairs() -> tuple[tuple[int, int], ...]:
    pairs = []
    left = [sq for sq in range(N_SQUARES) if sq % N_FILES < 2]
    for k1 in left:
        pairs.extend((k1, k2) for k2 in range(N_SQUARES) if k2 != k1)
    centre = [sq for sq in range(N_SQUARES) if sq % N_FILES == 2]
    left_c = [sq for sq in range(N_SQUARES) if sq % N_FILES <= 2]
    for k1 in centre:
        pairs.extend((k1, k2) for k2 in left_c if k2 != k1)
    return tuple(pairs)


KING_PAIRS = _king_pairs()
KING_PAIR_INDEX = {pair: i for i, pair in enumerate(KING_PAIRS)}
assert len(KING_PAIRS) == kpos_count()


# -- subsets ---------------------------------------------------------------------

def colex_rank(subset: list[int]) -> int:
    """Colex rank of a sorted list of distinct positions."""
    return sum(comb(c, i + 1) for i, c in enumerate(subset))


def colex_unrank(r: int, k: int) -> list[int]:
    out = []
    for i in range(k, 0, -1):
        c = i - 1
        while comb(c + 1, i) <= r:
            c += 1
        out.append(c)
        r -= comb(c, i)
    out.reverse()
    return out


@lru_cache(maxsize=None)
def _classes(kind: int, n: int, v: int) -> tuple[tuple[int, int, int, int, int], ...]:
    """(p0, p1, q0, q1, size) per class in summation order."""
    ind = 1 if PROMOTABLE[kind] else 0
    out = []
    for p0 in range(v * ind + 1):
        for p1 in range((v - p0) * ind + 1):
            for q0 in range(v - p0 - p1 + 1):
                q1 = v - p0 - p1 - q0
                size = comb(n, p0) * comb(n - p0, p1) * comb(n - p0 - p1, q0) * comb(n - p0 - p1 - q0, q1)
                out.append((p0, p1, q0, q1, size))
    return tuple(out)


def _label_codes(kind: int) -> tuple[int, int, int, int]:
    if PROMOTABLE[kind]:
        return (
            make_code(FIRST, kind, True),
            make_code(SECOND, kind, True),
            make_code(FIRST, kind, False),
            make_code(SECOND, kind, False),
        )
    # non-promotable kinds only ever use the unpromoted labels
    return (0, 0, make_code(FIRST, kind), make_code(SECOND, kind))


_LABELS = tuple(_label_codes(kind) for kind in HAND_KINDS)


def _place(board: bytearray, empty: list[int], kind: int, v: int, index: int) -> list[int]:
    """Decode a placement index into ``board``; returns the remaining empties."""
    for p0, p1, q0, q1, size in _classes(kind, len(empty), v):
        if index < size:
            break
        index -= size
    else:
        raise ValueError("placement index out of range")
    remaining = empty
    groups = (p0, p1, q0, q1)
    radices = []
    n = len(empty)
    for g in groups:
        radices.append(comb(n, g))
        n -= g
    digits = [0] * 4
    for i in range(3, -1, -1):
        index, digits[i] = divmod(index, radices[i])
    labels = _LABELS[kind]
    for g, digit, code in zip(groups, digits, labels):
        if not g:
            continue
        chosen = colex_unrank(digit, g)
        for j in chosen:
            board[remaining[j]] = code
        chosen_set = set(chosen)
        remaining = [sq for j, sq in enumerate(remaining) if j not in chosen_set]
    return remaining


def _placement_index(state: bytes, empty: list[int], kind: int, v: int) -> tuple[int, list[int]]:
    labels = _LABELS[kind]
    groups_sq: list[list[int]] = [[], [], [], []]
    for j, sq in enumerate(empty):
        c = state[sq]
        if c and code_kind(c) == kind:
            groups_sq[labels.index(c)].append(j)
    counts = tuple(len(g) for g in groups_sq)
    index = 0
    for p0, p1, q0, q1, size in _classes(kind, len(empty), v):
        if (p0, p1, q0, q1) == counts:
            break
        index += size
    else:
        raise ValueError("inconsistent placement")
    # Positions inside ``empty`` shift as earlier groups are removed.
    remaining = list(range(len(empty)))
    n = len(empty)
    local = 0
    for g in groups_sq:
        k = len(g)
        pos_in_remaining = {j: i for i, j in enumerate(remaining)}
        local = local * comb(n, k) + colex_rank([pos_in_remaining[j] for j in g])
        taken = set(g)
        remaining = [j for j in remaining if j not in taken]
        n -= k
    return index + local, [empty[j] for j in remaining]


# -- public rank/unrank ------------------------------------------------------------

def in_candidate_space(pos: Position) -> bool:
    s = pos.state
    if s[TURN_INDEX] != FIRST:
        return False
    try:
        pos.validate()
    except ValueError:
        return False
    k1 = s.index(KING_CODES[FIRST], 0, N_SQUARES)
    k2 = s.index(KING_CODES[SECOND], 0, N_SQUARES)
    f1 = k1 % N_FILES
    if f1 > 2:
        return False
    return f1 < 2 or k2 % N_FILES <= 2


def unrank_raw(r: int) -> bytes:
    table = pattern_table()
    if not 0 <= r < table.total:
        raise ValueError(f"rank {r} outside [0, {table.total})")
    pi = bisect.bisect_right(table.offsets, r) - 1
    pattern = table.patterns[pi]
    local = r - table.offsets[pi]

    hc, bc = pattern.hand_counts, pattern.board_counts
    n_empty = BOARD_H * BOARD_W - 2
    place_radix = []
    for kind, v in zip(HAND_KINDS, bc):
        place_radix.append(placement_count(kind, n_empty, v))
        n_empty -= v
    place_digits = [0] * N_KINDS
    for i in range(N_KINDS - 1, -1, -1):
        local, place_digits[i] = divmod(local, place_radix[i])
    local, king_idx = divmod(local, len(KING_PAIRS))
    split = [0] * N_KINDS
    for i in range(N_KINDS - 1, -1, -1):
        if hc[i]:
            local, split[i] = divmod(local, hc[i] + 1)
    assert local == 0

    b = bytearray(STATE_SIZE)
    k1, k2 = KING_PAIRS[king_idx]
    b[k1] = KING_CODES[FIRST]
    b[k2] = KING_CODES[SECOND]
    empty = [sq for sq in range(N_SQUARES) if sq != k1 and sq != k2]
    for i, kind in enumerate(HAND_KINDS):
        if bc[i]:
            empty = _place(b, empty, kind, bc[i], place_digits[i])
        b[hand_index(FIRST, kind)] = split[i]
        b[hand_index(SECOND, kind)] = hc[i] - split[i]
    return bytes(b)


def unrank(r: int) -> Position:
    return Position(unrank_raw(r))


def rank(pos: Position) -> int:
    """Inverse of :func:`unrank`; ValueError outside the candidate space."""
    if not in_candidate_space(pos):
        raise ValueError(f"position is not in the candidate space: {pos}")
    s = pos.state
    table = pattern_table()
    hc = tuple(s[hand_index(FIRST, k)] + s[hand_index(SECOND, k)] for k in HAND_KINDS)
    bc = tuple(2 - h for h in hc)
    pi = 0
    for h in hc:
        pi = pi * 3 + h
    k1 = s.index(KING_CODES[FIRST], 0, N_SQUARES)
    k2 = s.index(KING_CODES[SECOND], 0, N_SQUARES)

    local = 0
    for i, kind in enumerate(HAND_KINDS):
        if hc[i]:
            local = local * (hc[i] + 1) + s[hand_index(FIRST, kind)]
    local = local * len(KING_PAIRS) + KING_PAIR_INDEX[(k1, k2)]
    empty = [sq for sq in range(N_SQUARES) if sq != k1 and sq != k2]
    for i, kind in enumerate(HAND_KINDS):
        radix = placement_count(kind, len(empty), bc[i])
        if bc[i]:
            idx, empty = _placement_index(s, empty, kind, bc[i])
        else:
            idx = 0
        local = local * radix + idx
    return table.offsets[pi] + local


def pattern_of(pos: Position) -> PiecePattern:
    s = pos.state
    idx = 0
    for k in HAND_KINDS:
        idx = idx * 3 + s[hand_index(FIRST, k)] + s[hand_index(SECOND, k)]
    return pattern_table().patterns[idx]


def pattern_offset(p: PiecePattern) -> int:
    return pattern_table().offsets[p.index]


__all__ = [
    "PatternTable",
    "PiecePattern",
    "colex_rank",
    "colex_unrank",
    "count2n",
    "in_candidate_space",
    "kpos_count",
    "pattern_of",
    "pattern_offset",
    "pattern_table",
    "placement_count",
    "rank",
    "total_space",
    "unrank",
    "unrank_raw",
]
