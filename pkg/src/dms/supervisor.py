"""The lightweight supervisor: time squeezing, AIMD TTI caps, and the
combined per-epoch loop.

Time squeezing bisects the guaranteed-traffic period: a probe runs the GBR
game at a candidate period and is feasible when no penalty remains.  The
search keeps the smallest feasible period seen, stops early when a probe is
penalty-free with every TTI in use, and never exceeds ceil(log2 W) + 1
probes.

The best-effort TTI caps follow additive-increase multiplicative-decrease:
while the summed per-station score improves, the poorest station gains one
TTI; on degradation the richest station's cap is halved (not below the
floor) and the reference score resets to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

from .be_game import BeGameResult, run_be_game
from .errors import InfeasibleDemandError
from .gbr_game import GbrGameResult, run_gbr_game
from .scheduling import AbsfPattern, ActionProfile


@dataclass(frozen=True)
class SqueezeResult:
    T: int
    patterns: dict[int, AbsfPattern]
    penalties: dict[int, float]
    probes: int
    game: GbrGameResult


def _fully_used(game: GbrGameResult, T: int) -> bool:
    used = 0
    for p in game.patterns.values():
        used |= p.bits
    return used == (1 << T) - 1


def time_squeeze(scenario, W: int, br_round_cap: int | None = None,
                 ssbr_round_cap: int | None = None) -> SqueezeResult:
    """Smallest penalty-free guaranteed-traffic period found by bisection.

    Raises InfeasibleDemandError when even the full horizon carries a
    penalty.  Probes are warm-started from the previous probe's profile,
    truncated to the new candidate period.
    """
    cap = (math.ceil(math.log2(W)) if W > 1 else 0) + 1
    probes = 0
    best: tuple[int, GbrGameResult] | None = None
    warm: ActionProfile | None = None

    def probe(T: int) -> GbrGameResult:
        nonlocal probes, warm
        probes += 1
        initial = warm.truncated(T) if warm is not None else None
        game = run_gbr_game(scenario.gbr_inputs(T), br_round_cap=br_round_cap,
                            ssbr_round_cap=ssbr_round_cap, initial_profile=initial)
        warm = game.profile
        return game

    lo, hi = 1, W
    early: tuple[int, GbrGameResult] | None = None
    while lo < hi and probes < cap:
        mid = (lo + hi) // 2
        game = probe(mid)
        if game.total_penalty == 0:
            best = (mid, game)
            hi = mid
            if _fully_used(game, mid):
                early = (mid, game)
                break
        else:
            lo = mid + 1

    if early is None and best is None and probes < cap:
        game = probe(lo)
        if game.total_penalty == 0:
            best = (lo, game)

    if best is None:
        raise InfeasibleDemandError(
            f"guaranteed demand cannot be served within the {W}-TTI horizon")

    T, game = best
    assert probes <= cap, "time squeezing exceeded its probe budget"
    assert game.total_penalty == 0, "time squeezing would return a penalised period"
    return SqueezeResult(T=T, patterns=game.patterns, penalties=game.penalties,
                         probes=probes, game=game)


@dataclass(frozen=True)
class AimdState:
    """Per-station TTI caps for the best-effort game, with their floor."""

    caps: tuple[int, ...]
    players: tuple[int, ...]
    floor: int
    horizon: int
    prev_score: float = 0.0

    @classmethod
    def initial(cls, players: Sequence[int], n_bs: int, horizon: int) -> "AimdState":
        floor = max(1, math.ceil(horizon / n_bs))
        return cls(caps=tuple(floor for _ in players), players=tuple(sorted(players)),
                   floor=floor, horizon=horizon, prev_score=0.0)

    def caps_by_bs(self) -> dict[int, int]:
        return dict(zip(self.players, self.caps))


def aimd_step(state: AimdState, per_bs_eta: Mapping[int, float]) -> AimdState:
    """One cap update from the epoch's per-station scores.

    At most one cap changes.  Ties on the score pick the lowest station
    index.  After a decrease the stored reference score resets to zero, so
    the following comparison reads as an improvement.
    """
    players = state.players
    caps = list(state.caps)
    score = 0.0
    for bs in players:
        score += per_bs_eta[bs]

    if score > state.prev_score:
        eligible = [i for i, bs in enumerate(players) if caps[i] < state.horizon]
        if eligible:
            i = min(eligible, key=lambda i: (per_bs_eta[players[i]], players[i]))
            caps[i] += 1
        return replace(state, caps=tuple(caps), prev_score=score)

    eligible = [i for i, bs in enumerate(players) if caps[i] > state.floor]
    if not eligible:
        return replace(state, prev_score=score)
    i = min(eligible, key=lambda i: (-per_bs_eta[players[i]], players[i]))
    caps[i] = max(state.floor, -(-caps[i] // 2))
    return replace(state, caps=tuple(caps), prev_score=0.0)


@dataclass
class EpochOutcome:
    epoch: int
    T: int
    Z: int
    squeeze_probes: int
    gbr_game: GbrGameResult | None
    be_game: BeGameResult | None
    gbr_infeasible: bool
    demands: dict[int, float]
    caps: dict[int, int]
    scenario: object


def run_dms_epochs(scenario_for_epoch: Callable[[int], object], W: int, epochs: int,
                   deadline: int | None = None,
                   br_round_cap: int | None = None,
                   ssbr_round_cap: int | None = None) -> list[EpochOutcome]:
    """The combined loop: squeeze on demand changes, refit the GBR game each
    epoch, play the best-effort game on the remaining TTIs, adapt the caps.

    When demand is infeasible even at the full horizon the epoch reserves the
    whole pattern for guaranteed traffic (no best-effort service) and the run
    continues.
    """
    outcomes: list[EpochOutcome] = []
    aimd: AimdState | None = None
    T: int | None = None
    prev_demands: dict[int, float] | None = None
    warm_profile: ActionProfile | None = None

    for epoch in range(epochs):
        scenario = scenario_for_epoch(epoch)
        demands = dict(scenario.demands)
        demand_changed = prev_demands is None or demands != prev_demands
        prev_demands = demands

        gbr_infeasible = False
        squeeze_probes = 0
        gbr_game = None
        if scenario.has_gbr_users():
            need_squeeze = demand_changed or T is None
            if not need_squeeze:
                refit = run_gbr_game(scenario.gbr_inputs(T), br_round_cap=br_round_cap,
                                     ssbr_round_cap=ssbr_round_cap,
                                     initial_profile=warm_profile.truncated(T)
                                     if warm_profile is not None else None)
                if refit.total_penalty == 0:
                    gbr_game = refit
                else:
                    need_squeeze = True  # the held period no longer fits this epoch's channel
            if need_squeeze:
                try:
                    squeezed = time_squeeze(scenario, W, br_round_cap=br_round_cap,
                                            ssbr_round_cap=ssbr_round_cap)
                    T = squeezed.T
                    gbr_game = squeezed.game
                    squeeze_probes = squeezed.probes
                except InfeasibleDemandError:
                    gbr_infeasible = True
                    T = W
                    gbr_game = run_gbr_game(scenario.gbr_inputs(W), br_round_cap=br_round_cap,
                                            ssbr_round_cap=ssbr_round_cap)
                    squeeze_probes = 0
            warm_profile = gbr_game.profile
        else:
            T = 0

        Z = W - T
        be_game = None
        be_players = scenario.be_players()
        if Z > 0 and be_players:
            if aimd is None or aimd.horizon != Z or aimd.players != tuple(sorted(be_players)):
                aimd = AimdState.initial(be_players, scenario.n_bs, Z)
            be_game = run_be_game(scenario.be_inputs(Z, aimd.caps_by_bs()), deadline=deadline)
            aimd = aimd_step(aimd, be_game.per_bs_eta)

        outcomes.append(EpochOutcome(
            epoch=epoch, T=T, Z=Z, squeeze_probes=squeeze_probes,
            gbr_game=gbr_game, be_game=be_game, gbr_infeasible=gbr_infeasible,
            demands=demands,
            caps=aimd.caps_by_bs() if aimd is not None else {},
            scenario=scenario,
        ))
    return outcomes
