"""Sequential guaranteed-traffic scheduling game across base stations.

Stations move in ascending index order.  Each mover plays a best response
(or a single-step best response) against the latest activity patterns of the
others.  Plain best-response play can cycle; the runner detects repeated
profiles exactly and switches to the single-step strategy, which settles.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

from .gbr_local import (GbrLocalInput, GbrLocalSolution, best_response, cost_f,
                        penalties_for, served_traffic, single_step_best_response)
from .scheduling import AbsfPattern, Action, ActionProfile, pattern_from_action

BR = "br"
SSBR = "ssbr"


@dataclass(frozen=True)
class MoveRecord:
    round: int
    bs: int
    action: Action
    cost: float


@dataclass
class GbrGameState:
    profile: ActionProfile
    round: int = 0
    strategy: str = BR
    history: list[tuple] = field(default_factory=list)
    costs: dict[int, float] = field(default_factory=dict)
    changed_last_round: bool = True


@dataclass
class GbrGameResult:
    profile: ActionProfile
    patterns: dict[int, AbsfPattern]
    penalties: dict[int, float]
    served: dict[int, float]
    costs: dict[int, float]
    rounds: int
    br_rounds: int
    ssbr_rounds: int
    converged: bool
    cycle_detected: bool
    cycle_period_rounds: int | None
    moves: list[MoveRecord]

    @property
    def total_penalty(self) -> float:
        return sum(self.penalties.values())

    def per_bs_tti_usage(self) -> dict[int, int]:
        return {bs: len(a.ttis()) for bs, a in self.profile.actions.items()}


def _patterns_excluding(actions: Mapping[int, Action], owner: int) -> dict[int, AbsfPattern]:
    return {bs: pattern_from_action(a) for bs, a in actions.items() if bs != owner}


def play_round(state: GbrGameState, inputs: Mapping[int, GbrLocalInput],
               moves: list[MoveRecord] | None = None) -> GbrGameState:
    """One full round: every station moves once, in ascending index order."""
    actions = dict(state.profile.actions)
    changed = False
    for bs in sorted(inputs):
        inp = replace(inputs[bs], neighbor_patterns=_patterns_excluding(actions, bs))
        prev = actions[bs]
        if state.strategy == SSBR:
            sol = single_step_best_response(prev, inp)
        else:
            sol = best_response(inp, prev=prev)
        if sol.action != prev:
            changed = True
        actions[bs] = sol.action
        if moves is not None:
            moves.append(MoveRecord(state.round + 1, bs, sol.action, sol.cost))
    profile = ActionProfile(actions)
    costs = {bs: cost_f(actions[bs],
                        replace(inputs[bs], neighbor_patterns=_patterns_excluding(actions, bs)))
             for bs in sorted(inputs)}
    return GbrGameState(profile=profile, round=state.round + 1, strategy=state.strategy,
                        history=state.history + [profile.canonical_key()],
                        costs=costs, changed_last_round=changed)


def run_gbr_game(inputs: Mapping[int, GbrLocalInput],
                 br_round_cap: int | None = None,
                 ssbr_round_cap: int | None = None,
                 initial_profile: ActionProfile | None = None,
                 trace: bool = False) -> GbrGameResult:
    """Play best responses, then single-step best responses, to a fixed point.

    ``converged`` means some round produced no action change.  A repeated
    profile during the best-response phase is a confirmed cycle (profiles are
    compared by exact canonical key); the runner then moves straight to the
    single-step phase rather than replaying the loop.
    """
    players = sorted(inputs)
    n = len(players)
    horizon = inputs[players[0]].horizon
    if br_round_cap is None:
        br_round_cap = n * n
    if ssbr_round_cap is None:
        ssbr_round_cap = 4 * n * n

    profile = initial_profile if initial_profile is not None \
        else ActionProfile.empty(players, horizon)
    state = GbrGameState(profile=profile)
    moves: list[MoveRecord] = [] if trace else None

    seen = {profile.canonical_key(): 0}
    converged = False
    cycle_detected = False
    cycle_period = None
    br_rounds = 0

    for _ in range(br_round_cap):
        state = play_round(state, inputs, moves)
        br_rounds += 1
        if not state.changed_last_round or n == 1:
            # a lone player's response to the empty environment is a fixed point
            converged = True
            break
        key = state.profile.canonical_key()
        if key in seen:
            cycle_detected = True
            cycle_period = state.round - seen[key]
            break
        seen[key] = state.round

    ssbr_rounds = 0
    if not converged:
        state.strategy = SSBR
        for _ in range(ssbr_round_cap):
            state = play_round(state, inputs, moves)
            ssbr_rounds += 1
            if not state.changed_last_round:
                converged = True
                break

    final_inp = {bs: replace(inputs[bs],
                             neighbor_patterns=_patterns_excluding(state.profile.actions, bs))
                 for bs in players}
    penalties: dict[int, float] = {}
    served_all: dict[int, float] = {}
    for bs in players:
        served = served_traffic(state.profile.actions[bs], final_inp[bs])
        served_all.update(served)
        penalties.update(penalties_for(served, final_inp[bs]))

    return GbrGameResult(
        profile=state.profile,
        patterns=state.profile.patterns(),
        penalties=penalties,
        served=served_all,
        costs=dict(state.costs),
        rounds=state.round,
        br_rounds=br_rounds,
        ssbr_rounds=ssbr_rounds,
        converged=converged,
        cycle_detected=cycle_detected,
        cycle_period_rounds=cycle_period,
        moves=moves if moves is not None else [],
    )


def is_saturation_profile(profile: ActionProfile, inputs: Mapping[int, GbrLocalInput]) -> bool:
    """True when every station has zero penalty, or fills the horizon with a
    penalty, or has a penalty but no free TTI offers any unserved user a
    positive rate."""
    for bs in sorted(inputs):
        inp = replace(inputs[bs], neighbor_patterns=_patterns_excluding(profile.actions, bs))
        action = profile.actions[bs]
        served = served_traffic(action, inp)
        pens = penalties_for(served, inp)
        if sum(pens.values()) == 0:
            continue
        used = action.ttis()
        if len(used) == inp.horizon:
            continue
        R = inp.rate_matrix
        idx = inp.user_index
        unserved = [u for u in inp.users if pens[u] > 0]
        free = [t for t in range(inp.horizon) if t not in used and inp.tti_allowed(t)]
        if any(R[idx[u], t] > 0 for u in unserved for t in free):
            return False
    return True
