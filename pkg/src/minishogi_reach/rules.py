"""Minishogi (5x5 Gogo Shogi) game mechanics.

A position is stored as a single 36-byte string so it can be hashed, compared
and copied cheaply inside the retrograde search:

* bytes 0..24  board, one piece code per square in scan order
  (rank 1 to 5 outer, file a to e inner; ``a1`` is 0, ``e5`` is 24)
* bytes 25..34 hand counts, five per player in kind order G, S, B, R, P
* byte 35      side to move (0 = first player, 1 = second player)

Piece codes are ``(kind + 1) | PROMOTED_BIT | SECOND_BIT``; 0 is an empty
square. Ranks are numbered from the first player's side, so the first
player's promotion zone is rank 5 and the second player's is rank 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Union

FIRST = 0
SECOND = 1

GOLD, SILVER, BISHOP, ROOK, PAWN, KING = range(6)
HAND_KINDS = (GOLD, SILVER, BISHOP, ROOK, PAWN)
KIND_NAMES = ("Gold", "Silver", "Bishop", "Rook", "Pawn", "King")
PROMOTABLE = (False, True, True, True, True, False)

FILES = "abcde"
N_FILES = 5
N_RANKS = 5
N_SQUARES = 25

EMPTY = 0
PROMOTED_BIT = 8
SECOND_BIT = 16

HAND_OFFSET = 25
TURN_INDEX = 35
STATE_SIZE = 36


def make_code(owner: int, kind: int, promoted: bool = False) -> int:
    return (kind + 1) | (PROMOTED_BIT if promoted else 0) | (SECOND_BIT if owner else 0)


def code_owner(code: int) -> int:
    return code >> 4


def code_kind(code: int) -> int:
    return (code & 7) - 1


def code_promoted(code: int) -> bool:
    return bool(code & PROMOTED_BIT)


def hand_index(owner: int, kind: int) -> int:
    return HAND_OFFSET + 5 * owner + kind


KING_CODES = (make_code(FIRST, KING), make_code(SECOND, KING))
PAWN_CODES = (make_code(FIRST, PAWN), make_code(SECOND, PAWN))
VALID_CODES = frozenset(
    make_code(owner, kind, promoted)
    for owner in (FIRST, SECOND)
    for kind in range(6)
    for promoted in ((False, True) if PROMOTABLE[kind] else (False,))
)


# -- squares ----------------------------------------------------------------

def square(name: str) -> int:
    """Square index of a name such as ``"c3"``."""
    if len(name) != 2 or name[0] not in FILES or name[1] not in "12345":
        raise ValueError(f"bad square name: {name!r}")
    return (int(name[1]) - 1) * N_FILES + FILES.index(name[0])


def square_name(sq: int) -> str:
    return f"{FILES[sq % N_FILES]}{sq // N_FILES + 1}"


def file_of(sq: int) -> int:
    return sq % N_FILES


def rank_of(sq: int) -> int:
    """1-based rank."""
    return sq // N_FILES + 1


def last_rank(owner: int) -> int:
    return N_RANKS if owner == FIRST else 1


def in_zone(sq: int, owner: int) -> bool:
    """True if ``sq`` lies in ``owner``'s promotion zone (the far rank)."""
    return sq >= 20 if owner == FIRST else sq < 5


FILE_SQUARES = tuple(tuple(f + N_FILES * r for r in range(N_RANKS)) for f in range(N_FILES))
HFLIP_SQ = tuple((sq // N_FILES) * N_FILES + (N_FILES - 1 - sq % N_FILES) for sq in range(N_SQUARES))


# -- movement tables ----------------------------------------------------------

_KING_DIRS = ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1))
_GOLD_DIRS = ((0, 1), (-1, 1), (1, 1), (-1, 0), (1, 0), (0, -1))
_SILVER_DIRS = ((0, 1), (-1, 1), (1, 1), (-1, -1), (1, -1))
_PAWN_DIRS = ((0, 1),)
_DIAG = ((-1, -1), (1, -1), (-1, 1), (1, 1))
_ORTHO = ((0, -1), (-1, 0), (1, 0), (0, 1))


def _pattern(kind: int, promoted: bool) -> tuple[tuple, tuple]:
    # (step directions, slide directions) from the first player's point of view
    if kind == KING:
        return _KING_DIRS, ()
    if kind == GOLD or (promoted and kind in (SILVER, PAWN)):
        return _GOLD_DIRS, ()
    if kind == SILVER:
        return _SILVER_DIRS, ()
    if kind == PAWN:
        return _PAWN_DIRS, ()
    if kind == BISHOP:
        return (_ORTHO if promoted else ()), _DIAG
    return (_DIAG if promoted else ()), _ORTHO


def _oriented(code: int) -> tuple[tuple, tuple]:
    steps, slides = _pattern(code_kind(code), code_promoted(code))
    if code_owner(code) == SECOND:
        steps = tuple((df, -dr) for df, dr in steps)
        slides = tuple((df, -dr) for df, dr in slides)
    return steps, slides


def _shift(sq: int, df: int, dr: int) -> int | None:
    f, r = sq % N_FILES + df, sq // N_FILES + dr
    if 0 <= f < N_FILES and 0 <= r < N_RANKS:
        return r * N_FILES + f
    return None


def _ray(sq: int, df: int, dr: int) -> tuple[int, ...]:
    out = []
    cur = _shift(sq, df, dr)
    while cur is not None:
        out.append(cur)
        cur = _shift(cur, df, dr)
    return tuple(out)


def _build_tables():
    steps = {}
    rays = {}
    rev_steps = {}
    rev_rays = {}
    for code in VALID_CODES:
        sdirs, ldirs = _oriented(code)
        steps[code] = tuple(
            tuple(t for t in (_shift(sq, df, dr) for df, dr in sdirs) if t is not None)
            for sq in range(N_SQUARES)
        )
        rays[code] = tuple(
            tuple(r for r in (_ray(sq, df, dr) for df, dr in ldirs) if r)
            for sq in range(N_SQUARES)
        )
        # Origins from which the piece reaches a square: walk the reversed directions.
        rev_steps[code] = tuple(
            tuple(t for t in (_shift(sq, -df, -dr) for df, dr in sdirs) if t is not None)
            for sq in range(N_SQUARES)
        )
        rev_rays[code] = tuple(
            tuple(r for r in (_ray(sq, -df, -dr) for df, dr in ldirs) if r)
            for sq in range(N_SQUARES)
        )

    attack = ([], [])
    for owner in (FIRST, SECOND):
        codes = [c for c in VALID_CODES if code_owner(c) == owner]
        for sq in range(N_SQUARES):
            entries = []
            for df, dr in _KING_DIRS:
                ray = _ray(sq, df, dr)
                if not ray:
                    continue
                toward = (-df, -dr)
                adj = set()
                slide = set()
                for c in codes:
                    sdirs, ldirs = _oriented(c)
                    if toward in ldirs:
                        slide.add(c)
                        adj.add(c)
                    elif toward in sdirs:
                        adj.add(c)
                entries.append((ray, frozenset(adj), frozenset(slide)))
            attack[owner].append(tuple(entries))
    return steps, rays, rev_steps, rev_rays, (tuple(attack[0]), tuple(attack[1]))


STEP_TARGETS, SLIDE_RAYS, REV_STEPS, REV_RAYS, ATTACK_RAYS = _build_tables()
_MAX_CODE = max(VALID_CODES) + 1
STEP_TARGETS = tuple(STEP_TARGETS.get(c, ()) for c in range(_MAX_CODE))
SLIDE_RAYS = tuple(SLIDE_RAYS.get(c, ()) for c in range(_MAX_CODE))
REV_STEPS = tuple(REV_STEPS.get(c, ()) for c in range(_MAX_CODE))
REV_RAYS = tuple(REV_RAYS.get(c, ()) for c in range(_MAX_CODE))


def attacked(state: bytes, sq: int, by: int) -> bool:
    """True if a piece of player ``by`` attacks ``sq`` on the raw board."""
    for ray, adj, slide in ATTACK_RAYS[by][sq]:
        c = state[ray[0]]
        if c:
            if c in adj:
                return True
            continue
        for t in ray[1:]:
            c = state[t]
            if c:
                if c in slide:
                    return True
                break
    return False


def attackers(state: bytes, sq: int, by: int) -> list[int]:
    """Squares of all pieces of ``by`` attacking ``sq``."""
    out = []
    for ray, adj, slide in ATTACK_RAYS[by][sq]:
        c = state[ray[0]]
        if c:
            if c in adj:
                out.append(ray[0])
            continue
        for t in ray[1:]:
            c = state[t]
            if c:
                if c in slide:
                    out.append(t)
                break
    return out


def king_square(state: bytes, owner: int) -> int:
    return state.index(KING_CODES[owner], 0, N_SQUARES)


def in_check(state: bytes, owner: int) -> bool:
    return attacked(state, king_square(state, owner), 1 - owner)


# -- moves --------------------------------------------------------------------

class BoardMove(NamedTuple):
    src: int
    dst: int
    promote: bool = False


class Drop(NamedTuple):
    kind: int
    dst: int


Move = Union[BoardMove, Drop]

_LETTERS = "GSBRPK"


def move_to_text(m: Move) -> str:
    if isinstance(m, Drop):
        return f"{_LETTERS[m.kind]}*{square_name(m.dst)}"
    return f"{square_name(m.src)}{square_name(m.dst)}{'+' if m.promote else ''}"


def move_from_text(s: str) -> Move:
    if len(s) == 4 and s[1] == "*":
        kind = _LETTERS.find(s[0].upper())
        if kind < 0 or kind == KING:
            raise ValueError(f"bad drop: {s!r}")
        return Drop(kind, square(s[2:]))
    if len(s) in (4, 5) and (len(s) == 4 or s[4] == "+"):
        return BoardMove(square(s[:2]), square(s[2:4]), len(s) == 5)
    raise ValueError(f"bad move: {s!r}")


def _pawn_on_file(state: bytes, f: int, pawn_code: int) -> bool:
    for sq in FILE_SQUARES[f]:
        if state[sq] == pawn_code:
            return True
    return False


def _board_moves(state: bytes, turn: int) -> Iterator[BoardMove]:
    for src in range(N_SQUARES):
        c = state[src]
        if not c or (c >> 4) != turn:
            continue
        kind = (c & 7) - 1
        can_promote = PROMOTABLE[kind] and not (c & PROMOTED_BIT)
        targets = []
        for t in STEP_TARGETS[c][src]:
            d = state[t]
            if not d or (d >> 4) != turn:
                targets.append(t)
        for ray in SLIDE_RAYS[c][src]:
            for t in ray:
                d = state[t]
                if not d:
                    targets.append(t)
                    continue
                if (d >> 4) != turn:
                    targets.append(t)
                break
        for dst in targets:
            if can_promote and (in_zone(src, turn) or in_zone(dst, turn)):
                yield BoardMove(src, dst, True)
                if kind == PAWN and in_zone(dst, turn):
                    continue  # an unpromoted pawn on the last rank is immobile
            yield BoardMove(src, dst, False)


def _drops(state: bytes, turn: int) -> Iterator[Drop]:
    base = HAND_OFFSET + 5 * turn
    empties = [sq for sq in range(N_SQUARES) if not state[sq]]
    for kind in HAND_KINDS:
        if not state[base + kind]:
            continue
        if kind == PAWN:
            pawn = PAWN_CODES[turn]
            for sq in empties:
                if in_zone(sq, turn) or _pawn_on_file(state, sq % N_FILES, pawn):
                    continue
                yield Drop(PAWN, sq)
        else:
            for sq in empties:
                yield Drop(kind, sq)


def pseudo_moves(state: bytes) -> Iterator[Move]:
    """Moves obeying movement, promotion and drop rules, ignoring king safety
    and drop-pawn-mate."""
    turn = state[TURN_INDEX]
    yield from _board_moves(state, turn)
    yield from _drops(state, turn)


def apply_raw(state: bytes, m: Move) -> bytes:
    """Apply a move without any legality check."""
    b = bytearray(state)
    turn = state[TURN_INDEX]
    if isinstance(m, Drop):
        b[m.dst] = make_code(turn, m.kind)
        b[HAND_OFFSET + 5 * turn + m.kind] -= 1
    else:
        c = b[m.src]
        cap = b[m.dst]
        if cap:
            b[HAND_OFFSET + 5 * turn + (cap & 7) - 1] += 1
        b[m.src] = EMPTY
        b[m.dst] = c | PROMOTED_BIT if m.promote else c
    b[TURN_INDEX] = 1 - turn
    return bytes(b)


def _forward(sq: int, owner: int) -> int | None:
    t = sq + N_FILES if owner == FIRST else sq - N_FILES
    return t if 0 <= t < N_SQUARES else None


def _is_legal_after(state: bytes, m: Move, after: bytes, turn: int) -> bool:
    king = m.dst if isinstance(m, BoardMove) and state[m.src] == KING_CODES[turn] else king_square(state, turn)
    if attacked(after, king, 1 - turn):
        return False
    if isinstance(m, Drop) and m.kind == PAWN:
        if _forward(m.dst, turn) == king_square(after, 1 - turn) and not has_legal_move(after):
            return False  # drop pawn mate
    return True


def legal_moves_raw(state: bytes) -> list[Move]:
    turn = state[TURN_INDEX]
    out = []
    for m in pseudo_moves(state):
        if _is_legal_after(state, m, apply_raw(state, m), turn):
            out.append(m)
    return out


def has_legal_move(state: bytes) -> bool:
    turn = state[TURN_INDEX]
    for m in pseudo_moves(state):
        if _is_legal_after(state, m, apply_raw(state, m), turn):
            return True
    return False


# -- positions ----------------------------------------------------------------

class Piece(NamedTuple):
    owner: int
    kind: int
    promoted: bool = False

    @property
    def code(self) -> int:
        return make_code(self.owner, self.kind, self.promoted)

    @classmethod
    def from_code(cls, code: int) -> "Piece":
        return cls(code_owner(code), code_kind(code), code_promoted(code))


@dataclass(frozen=True, slots=True)
class Position:
    """Immutable Minishogi position (board, hands, side to move)."""

    state: bytes

    @classmethod
    def build(
        cls,
        pieces: dict[str | int, Piece],
        hands: tuple[dict[int, int], dict[int, int]] | None = None,
        turn: int = FIRST,
        validate: bool = True,
    ) -> "Position":
        """Build a position from ``{square: Piece}`` and per-player hand dicts.

        With ``hands=None`` every piece missing from the board goes to the
        first player's hand.
        """
        b = bytearray(STATE_SIZE)
        for sq, piece in pieces.items():
            idx = square(sq) if isinstance(sq, str) else sq
            b[idx] = piece.code
        if hands is None:
            on_board = [0] * 5
            for code in b[:N_SQUARES]:
                if code and code_kind(code) != KING:
                    on_board[code_kind(code)] += 1
            for kind in HAND_KINDS:
                b[hand_index(FIRST, kind)] = 2 - on_board[kind]
        else:
            for owner in (FIRST, SECOND):
                for kind, n in hands[owner].items():
                    b[hand_index(owner, kind)] = n
        b[TURN_INDEX] = turn
        pos = cls(bytes(b))
        if validate:
            pos.validate()
        return pos

    @property
    def turn(self) -> int:
        return self.state[TURN_INDEX]

    @property
    def board(self) -> bytes:
        return self.state[:N_SQUARES]

    def piece_at(self, sq: str | int) -> Piece | None:
        code = self.state[square(sq) if isinstance(sq, str) else sq]
        return Piece.from_code(code) if code else None

    def hand(self, owner: int, kind: int) -> int:
        return self.state[hand_index(owner, kind)]

    def king_square(self, owner: int) -> int:
        return king_square(self.state, owner)

    def pieces(self) -> Iterator[tuple[int, Piece]]:
        for sq in range(N_SQUARES):
            if self.state[sq]:
                yield sq, Piece.from_code(self.state[sq])

    def validate(self) -> None:
        """Raise ValueError unless kings and piece conservation are intact."""
        s = self.state
        if len(s) != STATE_SIZE:
            raise ValueError("malformed state")
        if s[TURN_INDEX] not in (FIRST, SECOND):
            raise ValueError("bad side to move")
        totals = [0] * 6
        for code in s[:N_SQUARES]:
            if code:
                if code not in VALID_CODES:
                    raise ValueError(f"invalid piece code {code}")
                totals[code_kind(code)] += 1
        if s.count(KING_CODES[FIRST], 0, N_SQUARES) != 1 or s.count(KING_CODES[SECOND], 0, N_SQUARES) != 1:
            raise ValueError("each player needs exactly one king on the board")
        for kind in HAND_KINDS:
            total = totals[kind] + s[hand_index(FIRST, kind)] + s[hand_index(SECOND, kind)]
            if total != 2:
                raise ValueError(f"{KIND_NAMES[kind]} count is {total}, expected 2")

    def __str__(self) -> str:
        return to_text(self)


def initial_position() -> Position:
    return from_text("rbsgk/4p/5/P4/KGSBR b - 1")


def legal_moves(pos: Position) -> list[Move]:
    return legal_moves_raw(pos.state)


def apply_move(pos: Position, m: Move) -> Position:
    """Play a legal move; raises ValueError for anything else."""
    if m not in legal_moves_raw(pos.state):
        raise ValueError(f"illegal move {move_to_text(m)} in {to_text(pos)}")
    return Position(apply_raw(pos.state, m))


def is_attacked(pos: Position, sq: str | int, by: int) -> bool:
    return attacked(pos.state, square(sq) if isinstance(sq, str) else sq, by)


def is_checkmate(pos: Position) -> bool:
    return in_check(pos.state, pos.turn) and not has_legal_move(pos.state)


# -- symmetry -----------------------------------------------------------------

def hflip_raw(state: bytes) -> bytes:
    b = bytearray(state)
    for sq in range(N_SQUARES):
        b[sq] = state[HFLIP_SQ[sq]]
    return bytes(b)


def rotate_raw(state: bytes) -> bytes:
    """180-degree rotation with colours, hands and side to move swapped."""
    b = bytearray(STATE_SIZE)
    for sq in range(N_SQUARES):
        c = state[N_SQUARES - 1 - sq]
        b[sq] = c ^ SECOND_BIT if c else 0
    b[25:30] = state[30:35]
    b[30:35] = state[25:30]
    b[TURN_INDEX] = 1 - state[TURN_INDEX]
    return bytes(b)


def hflip(pos: Position) -> Position:
    """Mirror files a<->e, b<->d."""
    return Position(hflip_raw(pos.state))


def rotate(pos: Position) -> Position:
    return Position(rotate_raw(pos.state))


def hflip_move(m: Move) -> Move:
    if isinstance(m, Drop):
        return Drop(m.kind, HFLIP_SQ[m.dst])
    return BoardMove(HFLIP_SQ[m.src], HFLIP_SQ[m.dst], m.promote)


# Empty squares sort after every piece, so pieces nearer file a compare smaller.
_ORDER_TABLE = bytes(255 if i == EMPTY else i for i in range(256))


def order_key(state: bytes) -> bytes:
    return state[:N_SQUARES].translate(_ORDER_TABLE) + state[N_SQUARES:]


def position_order(p1: Position, p2: Position) -> int:
    """-1, 0 or 1 as ``p1`` sorts before, equal to, or after ``p2``."""
    k1, k2 = order_key(p1.state), order_key(p2.state)
    return (k1 > k2) - (k1 < k2)


# -- text format --------------------------------------------------------------

_HAND_TEXT_ORDER = (ROOK, BISHOP, GOLD, SILVER, PAWN)


def _piece_letter(code: int) -> str:
    letter = _LETTERS[code_kind(code)]
    if code_owner(code) == SECOND:
        letter = letter.lower()
    return ("+" if code_promoted(code) else "") + letter


def to_text(pos: Position) -> str:
    s = pos.state
    groups = []
    for r in range(N_RANKS - 1, -1, -1):
        out = []
        run = 0
        for f in range(N_FILES):
            code = s[r * N_FILES + f]
            if not code:
                run += 1
                continue
            if run:
                out.append(str(run))
                run = 0
            out.append(_piece_letter(code))
        if run:
            out.append(str(run))
        groups.append("".join(out))
    hand = []
    for owner in (FIRST, SECOND):
        for kind in _HAND_TEXT_ORDER:
            n = s[hand_index(owner, kind)]
            if n:
                letter = _LETTERS[kind] if owner == FIRST else _LETTERS[kind].lower()
                hand.append((str(n) if n > 1 else "") + letter)
    side = "b" if s[TURN_INDEX] == FIRST else "w"
    return f"{'/'.join(groups)} {side} {''.join(hand) or '-'} 1"


def from_text(text: str) -> Position:
    """Parse SFEN-style text; raises ValueError on any malformed input."""
    parts = text.split()
    if len(parts) not in (3, 4):
        raise ValueError(f"expected 3 or 4 fields: {text!r}")
    board_txt, side, hand_txt = parts[:3]
    if len(parts) == 4 and not parts[3].isdigit():
        raise ValueError(f"bad move counter: {parts[3]!r}")
    b = bytearray(STATE_SIZE)
    groups = board_txt.split("/")
    if len(groups) != N_RANKS:
        raise ValueError("board needs 5 ranks")
    for gi, group in enumerate(groups):
        r = N_RANKS - 1 - gi
        f = 0
        promoted = False
        for ch in group:
            if ch == "+":
                if promoted:
                    raise ValueError("double promotion mark")
                promoted = True
                continue
            if ch.isdigit():
                if promoted:
                    raise ValueError("promotion mark before digit")
                f += int(ch)
                continue
            kind = _LETTERS.find(ch.upper())
            if kind < 0:
                raise ValueError(f"bad piece letter {ch!r}")
            if promoted and not PROMOTABLE[kind]:
                raise ValueError(f"{KIND_NAMES[kind]} cannot promote")
            if f >= N_FILES:
                raise ValueError(f"rank {r + 1} overflows")
            b[r * N_FILES + f] = make_code(FIRST if ch.isupper() else SECOND, kind, promoted)
            promoted = False
            f += 1
        if f != N_FILES or promoted:
            raise ValueError(f"rank {r + 1} does not have 5 files")
    if side not in ("b", "w"):
        raise ValueError(f"bad side to move {side!r}")
    b[TURN_INDEX] = FIRST if side == "b" else SECOND
    if hand_txt != "-":
        count = ""
        for ch in hand_txt:
            if ch.isdigit():
                count += ch
                continue
            kind = _LETTERS.find(ch.upper())
            if kind < 0 or kind == KING:
                raise ValueError(f"bad hand piece {ch!r}")
            owner = FIRST if ch.isupper() else SECOND
            b[hand_index(owner, kind)] += int(count) if count else 1
            count = ""
        if count:
            raise ValueError("dangling hand count")
    pos = Position(bytes(b))
    pos.validate()
    return pos
