"""The elimination funnel applied to candidate positions.

Stages run in a fixed order and stop at the first failure: horizontal-flip
deduplication, pawn placement, opponent king in check, reachability.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .retro import (
    DEFAULT_BUDGET,
    DEFAULT_PARAMS,
    Failed,
    HeuristicParams,
    ResourceExhausted,
    SearchBudget,
    can_reach_kk_raw,
    max_backtrack_ply_raw,
    pawns_ok,
)
from .rules import FIRST, KING_CODES, N_FILES, N_SQUARES, SECOND, Position, attacked, hflip_raw, order_key


class Stage(IntEnum):
    GENERATED = 0
    PASSED_FLIP = 1
    PASSED_PAWN = 2
    PASSED_CHECK = 3
    REACHABLE = 4


FAILURE_NAMES = {
    Stage.GENERATED: "HorizontalFlip",
    Stage.PASSED_FLIP: "PawnPlacement",
    Stage.PASSED_PAWN: "OpponentKingCheck",
    Stage.PASSED_CHECK: "Reachability",
}


@dataclass(frozen=True)
class StageVerdict:
    """Last stage passed; ``failure`` names the stage that rejected the
    position (None when reachable)."""

    stage: Stage
    failure: str | None = None
    ply: int | None = None
    exhausted: bool = False

    @property
    def reachable(self) -> bool:
        return self.stage == Stage.REACHABLE

    def describe(self) -> str:
        if self.reachable:
            return "Reachable"
        if self.exhausted:
            return "Exhausted: Reachability"
        if self.failure == "Reachability":
            return f"Failed: Reachability, ply={self.ply}"
        return f"Failed: {self.failure}"


def flip_pass_raw(state: bytes) -> bool:
    # The mirror image is a candidate only when both kings stand on file c.
    k1 = state.index(KING_CODES[FIRST], 0, N_SQUARES)
    k2 = state.index(KING_CODES[SECOND], 0, N_SQUARES)
    if k1 % N_FILES != 2 or k2 % N_FILES != 2:
        return True
    return not order_key(hflip_raw(state)) < order_key(state)


def flip_pass(pos: Position) -> bool:
    """False when the mirrored position is also a candidate and sorts first."""
    return flip_pass_raw(pos.state)


def pawn_pass(pos: Position) -> bool:
    return pawns_ok(pos.state)


def opponent_check_pass_raw(state: bytes) -> bool:
    return not attacked(state, state.index(KING_CODES[SECOND], 0, N_SQUARES), FIRST)


def opponent_check_pass(pos: Position) -> bool:
    """False when the second player's king is attacked on the first player's turn."""
    return opponent_check_pass_raw(pos.state)


def classify_raw(
    state: bytes,
    params: HeuristicParams = DEFAULT_PARAMS,
    budget: SearchBudget = DEFAULT_BUDGET,
) -> StageVerdict:
    if not flip_pass_raw(state):
        return StageVerdict(Stage.GENERATED, FAILURE_NAMES[Stage.GENERATED])
    if not pawns_ok(state):
        return StageVerdict(Stage.PASSED_FLIP, FAILURE_NAMES[Stage.PASSED_FLIP])
    if not opponent_check_pass_raw(state):
        return StageVerdict(Stage.PASSED_PAWN, FAILURE_NAMES[Stage.PASSED_PAWN])
    outcome = can_reach_kk_raw(state, params, budget)
    if isinstance(outcome, ResourceExhausted):
        return StageVerdict(Stage.PASSED_CHECK, "Reachability", exhausted=True)
    if isinstance(outcome, Failed):
        ply = outcome.max_ply
        if ply >= 2:
            # Greedy depths can overstate the layer depth beyond one ply.
            layered = max_backtrack_ply_raw(state, budget)
            if isinstance(layered, ResourceExhausted):
                return StageVerdict(Stage.PASSED_CHECK, "Reachability", exhausted=True)
            if not isinstance(layered, Failed):
                raise AssertionError(f"searches disagree on {state!r}")
            ply = layered.max_ply
        return StageVerdict(Stage.PASSED_CHECK, "Reachability", ply=ply)
    return StageVerdict(Stage.REACHABLE)


def classify(
    pos: Position,
    params: HeuristicParams = DEFAULT_PARAMS,
    budget: SearchBudget = DEFAULT_BUDGET,
) -> StageVerdict:
    return classify_raw(pos.state, params, budget)
