"""Sequential best-effort interference coordination game.

Stations repeatedly recompute their max-min schedules against the latest
patterns of the others.  This game has no convergence guarantee, so the
supervisor imposes a round deadline; on expiry each station keeps the
schedule from its latest iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

from .be_local import BeLocalInput, be_maxmin, mean_user_volume, volumes_of
from .scheduling import AbsfPattern, Action, ActionProfile, pattern_from_action


@dataclass(frozen=True)
class BeMoveRecord:
    round: int
    bs: int
    action: Action
    min_volume: float


@dataclass
class BeGameResult:
    profile: ActionProfile
    patterns: dict[int, AbsfPattern]
    per_user_volume: dict[int, float]
    per_bs_eta: dict[int, float]        # mean served volume per user, by station
    per_bs_min_volume: dict[int, float]
    eta_hat: float                      # sum over stations of the minimum user volume
    rounds: int
    converged: bool
    terminated_by_deadline: bool
    moves: list[BeMoveRecord]


def _patterns_excluding(actions: Mapping[int, Action], owner: int) -> dict[int, AbsfPattern]:
    return {bs: pattern_from_action(a) for bs, a in actions.items() if bs != owner}


def run_be_game(inputs: Mapping[int, BeLocalInput], deadline: int | None = None,
                trace: bool = False) -> BeGameResult:
    """Play until a full round changes nothing or the deadline round expires."""
    players = sorted(inputs)
    n = len(players)
    horizon = inputs[players[0]].horizon
    if deadline is None:
        deadline = n * n
    actions: dict[int, Action] = {bs: Action(bs, horizon) for bs in players}
    moves: list[BeMoveRecord] = []

    converged = False
    rounds = 0
    for _ in range(max(deadline, 1)):
        changed = False
        rounds += 1
        for bs in players:
            inp = replace(inputs[bs], neighbor_patterns=_patterns_excluding(actions, bs))
            sol = be_maxmin(inp, prev=actions[bs])
            if sol.action != actions[bs]:
                changed = True
            actions[bs] = sol.action
            if trace:
                moves.append(BeMoveRecord(rounds, bs, sol.action, sol.min_volume))
        if not changed or n == 1:
            # a lone player's response to the empty environment is a fixed point
            converged = True
            break

    per_user: dict[int, float] = {}
    per_bs_eta: dict[int, float] = {}
    per_bs_min: dict[int, float] = {}
    for bs in players:
        inp = replace(inputs[bs], neighbor_patterns=_patterns_excluding(actions, bs))
        vol = volumes_of(actions[bs], inp)
        per_user.update(vol)
        per_bs_eta[bs] = mean_user_volume(vol)
        per_bs_min[bs] = min(vol.values())

    profile = ActionProfile(actions)
    return BeGameResult(
        profile=profile,
        patterns=profile.patterns(),
        per_user_volume=per_user,
        per_bs_eta=per_bs_eta,
        per_bs_min_volume=per_bs_min,
        eta_hat=sum(per_bs_min[bs] for bs in players),
        rounds=rounds,
        converged=converged,
        terminated_by_deadline=not converged,
        moves=moves,
    )
