"""Retrograde reachability: predecessor generation and a greedy best-first
search towards a king-vs-king (KK) position.

A KK position has only the two kings on the board, more than two squares
apart (Manhattan). Any position that retracts to a KK position is reachable
from the start, so finding one settles reachability.

Search nodes are raw 36-byte states (see :mod:`minishogi_reach.rules`).
Predecessors are generated without the "side not to move is in check" and
pawn-placement tests; those run when a node is popped, which is equivalent
and avoids testing the many high-heuristic children that are never expanded.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from .rules import (
    FIRST,
    HAND_KINDS,
    HAND_OFFSET,
    KING,
    KING_CODES,
    N_FILES,
    N_SQUARES,
    PAWN,
    PAWN_CODES,
    PROMOTABLE,
    PROMOTED_BIT,
    REV_RAYS,
    REV_STEPS,
    SECOND,
    TURN_INDEX,
    FILE_SQUARES,
    VALID_CODES,
    Position,
    attacked,
    code_kind,
    code_owner,
    code_promoted,
    has_legal_move,
    make_code,
)


@dataclass(frozen=True)
class HeuristicParams:
    a: float = 10
    b: float = 10
    c: float = 1
    d: float = 1

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("heuristic weights must be non-negative")


@dataclass(frozen=True)
class SearchBudget:
    max_nodes: int = 10_000_000
    max_open_set_size: int | None = None

    def __post_init__(self):
        if self.max_nodes < 1 or (self.max_open_set_size is not None and self.max_open_set_size < 1):
            raise ValueError("budget limits must be positive")


@dataclass(frozen=True)
class Succeeded:
    nodes_expanded: int = 0


@dataclass(frozen=True)
class Failed:
    max_ply: int
    nodes_expanded: int = 0


@dataclass(frozen=True)
class ResourceExhausted:
    nodes_expanded: int


SearchOutcome = Union[Succeeded, Failed, ResourceExhausted]

DEFAULT_PARAMS = HeuristicParams()
DEFAULT_BUDGET = SearchBudget()


# -- heuristic ----------------------------------------------------------------

@lru_cache(maxsize=16)
def _piece_table(params: HeuristicParams) -> tuple[tuple[float, ...], ...]:
    """Per (code, square) contribution of a non-king piece to H."""
    table = []
    for code in range(max(VALID_CODES) + 1):
        row = [0] * N_SQUARES
        if code in VALID_CODES and code_kind(code) != KING:
            for sq in range(N_SQUARES):
                v = params.a
                if code_promoted(code):
                    r = sq // N_FILES
                    v += params.b + params.c * ((4 - r) if code_owner(code) == FIRST else r)
                row[sq] = v
        table.append(tuple(row))
    return tuple(table)


def _king_term(k1: int, k2: int, d: float) -> float:
    dist = abs(k1 % N_FILES - k2 % N_FILES) + abs(k1 // N_FILES - k2 // N_FILES)
    return d if dist <= 2 else 0


def heuristic_raw(state: bytes, params: HeuristicParams = DEFAULT_PARAMS) -> float:
    table = _piece_table(params)
    h = 0
    for sq in range(N_SQUARES):
        c = state[sq]
        if c:
            h += table[c][sq]
    k1 = state.index(KING_CODES[FIRST], 0, N_SQUARES)
    k2 = state.index(KING_CODES[SECOND], 0, N_SQUARES)
    return h + _king_term(k1, k2, params.d)


def heuristic(pos: Position, params: HeuristicParams = DEFAULT_PARAMS) -> float:
    """Weighted count of board pieces, promotions, promoted pieces' distance
    from their promotion rank, and a penalty for kings within distance 2."""
    return heuristic_raw(pos.state, params)


def is_kk_raw(state: bytes) -> bool:
    if N_SQUARES - state.count(0, 0, N_SQUARES) != 2:
        return False
    k1 = state.index(KING_CODES[FIRST], 0, N_SQUARES)
    k2 = state.index(KING_CODES[SECOND], 0, N_SQUARES)
    return abs(k1 % N_FILES - k2 % N_FILES) + abs(k1 // N_FILES - k2 // N_FILES) > 2


def is_kk(pos: Position) -> bool:
    return is_kk_raw(pos.state)


# -- predecessors ------------------------------------------------------------------

def pawns_ok(state: bytes) -> bool:
    """No doubled unpromoted pawns and no unpromoted pawn on its last rank."""
    for owner, last in ((FIRST, 4), (SECOND, 0)):
        code = PAWN_CODES[owner]
        i = state.find(code, 0, N_SQUARES)
        if i < 0:
            continue
        if i // N_FILES == last:
            return False
        j = state.find(code, i + 1, N_SQUARES)
        if j >= 0 and (j // N_FILES == last or j % N_FILES == i % N_FILES):
            return False
    return True


def node_legal(state: bytes) -> bool:
    """The side that just moved is not in check and the pawns are placed legally."""
    turn = state[TURN_INDEX]
    mover = 1 - turn
    if attacked(state, state.index(KING_CODES[mover], 0, N_SQUARES), turn):
        return False
    return pawns_ok(state)


def _file_has(state: bytes, f: int, code: int) -> bool:
    for sq in FILE_SQUARES[f]:
        if state[sq] == code:
            return True
    return False


def _origins(state: bytes, code: int, t: int) -> list[int]:
    out = [f for f in REV_STEPS[code][t] if not state[f]]
    for ray in REV_RAYS[code][t]:
        for f in ray:
            if state[f]:
                break
            out.append(f)
    return out


def candidates(state: bytes, h: float, params: HeuristicParams = DEFAULT_PARAMS) -> list[tuple[bytes, float]]:
    """Every retraction of the side that just moved, with each child's H.

    Children still need :func:`node_legal`; everything else about the
    retracted move (movement, promotion trigger, drop rules) is enforced here.
    """
    table = _piece_table(params)
    d = params.d
    turn = state[TURN_INDEX]
    mover = 1 - turn
    mover_hand = HAND_OFFSET + 5 * mover
    k_mover = state.index(KING_CODES[mover], 0, N_SQUARES)
    k_turn = state.index(KING_CODES[turn], 0, N_SQUARES)
    k_old = _king_term(k_mover, k_turn, d)
    mover_pawn = PAWN_CODES[mover]
    turn_pawn = PAWN_CODES[turn]
    turn_last = 0 if turn == SECOND else 4
    forward = N_FILES if mover == FIRST else -N_FILES
    mover_zone = 4 if mover == FIRST else 0

    # Pieces the retracting side may have captured on the destination square.
    restorable = []
    for kind in HAND_KINDS:
        if state[mover_hand + kind]:
            restorable.append((kind, make_code(turn, kind)))
            if PROMOTABLE[kind]:
                restorable.append((kind, make_code(turn, kind, True)))

    out: list[tuple[bytes, float]] = []
    mate_checked = None
    b = bytearray(state)
    b[TURN_INDEX] = mover
    for t in range(N_SQUARES):
        c = state[t]
        if not c or (c >> 4) != mover:
            continue
        kind = (c & 7) - 1
        promoted = c & PROMOTED_BIT
        h_without = h - table[c][t]
        b[t] = 0

        # un-drop
        if not promoted and kind != KING:
            ok = True
            if kind == PAWN and t + forward == k_turn:
                if mate_checked is None:
                    mate_checked = not has_legal_move(state)
                ok = not mate_checked  # a pawn drop may not deliver mate
            if ok:
                b[mover_hand + kind] += 1
                out.append((bytes(b), h_without))
                b[mover_hand + kind] -= 1

        # un-moves and un-captures
        origin_codes = (c, c & ~PROMOTED_BIT) if promoted else (c,)
        for oc in origin_codes:
            unpromote = oc != c
            for f in _origins(state, oc, t):
                if unpromote:
                    if f // N_FILES != mover_zone and t // N_FILES != mover_zone:
                        continue
                    if oc == mover_pawn and _file_has(state, f % N_FILES, mover_pawn):
                        continue
                if kind == KING:
                    h_base = h_without - k_old + _king_term(f, k_turn, d)
                else:
                    h_base = h_without + table[oc][f]
                b[f] = oc
                out.append((bytes(b), h_base))
                for rkind, rc in restorable:
                    if rc == turn_pawn and (t // N_FILES == turn_last or _file_has(state, t % N_FILES, turn_pawn)):
                        continue
                    b[t] = rc
                    b[mover_hand + rkind] -= 1
                    out.append((bytes(b), h_base + table[rc][t]))
                    b[mover_hand + rkind] += 1
                b[t] = 0
                b[f] = 0
        b[t] = c
    return out


def prev(pos: Position) -> set[Position]:
    """All legal positions one move before ``pos``."""
    s = pos.state
    if not node_legal(s):
        return set()
    return {Position(child) for child, _ in candidates(s, 0) if node_legal(child)}


# -- searches -------------------------------------------------------------------

def can_reach_kk_raw(
    root: bytes,
    params: HeuristicParams = DEFAULT_PARAMS,
    budget: SearchBudget = DEFAULT_BUDGET,
) -> SearchOutcome:
    h0 = heuristic_raw(root, params)
    heap = [(h0, 0, root, 0)]
    visited = {root}
    seq = 1
    expanded = 0
    max_ply = 0
    max_nodes = budget.max_nodes
    max_open = budget.max_open_set_size
    push = heapq.heappush
    pop = heapq.heappop
    while heap:
        h, _, s, depth = pop(heap)
        if h == 0:
            return Succeeded(expanded)
        if not node_legal(s):
            continue
        if expanded >= max_nodes:
            return ResourceExhausted(expanded)
        expanded += 1
        if depth > max_ply:
            max_ply = depth
        nd = depth + 1
        for child, ch in candidates(s, h, params):
            if child not in visited:
                visited.add(child)
                push(heap, (ch, seq, child, nd))
                seq += 1
        if max_open is not None and len(heap) > max_open:
            return ResourceExhausted(expanded)
    return Failed(max_ply, expanded)


def can_reach_kk(
    pos: Position,
    params: HeuristicParams = DEFAULT_PARAMS,
    budget: SearchBudget = DEFAULT_BUDGET,
) -> SearchOutcome:
    """Greedy best-first retrograde search for a KK position.

    Ties on H are broken first-in first-out. A visited set on the full
    position makes the search terminate; ``Failed.max_ply`` is the deepest
    predecessor depth among expanded nodes.
    """
    return can_reach_kk_raw(pos.state, params, budget)


def max_backtrack_ply_raw(root: bytes, budget: SearchBudget = DEFAULT_BUDGET) -> SearchOutcome:
    if is_kk_raw(root):
        return Succeeded(0)
    if not node_legal(root):
        return Failed(0, 0)
    visited = {root}
    layer = [root]
    depth = 0
    expanded = 0
    while True:
        nxt = []
        for s in layer:
            if expanded >= budget.max_nodes:
                return ResourceExhausted(expanded)
            expanded += 1
            for child, _ in candidates(s, 0):
                if child in visited:
                    continue
                visited.add(child)
                if not node_legal(child):
                    continue
                if is_kk_raw(child):
                    return Succeeded(expanded)
                nxt.append(child)
        if budget.max_open_set_size is not None and len(nxt) > budget.max_open_set_size:
            return ResourceExhausted(expanded)
        if not nxt:
            return Failed(depth, expanded)
        layer = nxt
        depth += 1


def max_backtrack_ply(pos: Position, budget: SearchBudget = DEFAULT_BUDGET) -> SearchOutcome:
    """Breadth-first retraction by layers; Failed carries the deepest
    non-empty layer."""
    return max_backtrack_ply_raw(pos.state, budget)


__all__ = [
    "DEFAULT_BUDGET",
    "DEFAULT_PARAMS",
    "Failed",
    "HeuristicParams",
    "ResourceExhausted",
    "SearchBudget",
    "SearchOutcome",
    "Succeeded",
    "can_reach_kk",
    "candidates",
    "heuristic",
    "is_kk",
    "max_backtrack_ply",
    "node_legal",
    "pawns_ok",
    "prev",
]
