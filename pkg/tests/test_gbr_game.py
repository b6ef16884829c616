from dataclasses import replace

import numpy as np
import pytest

from dms import Action, ActionProfile, cost_f, is_saturation_profile, run_gbr_game
from dms.gbr_game import GbrGameState, play_round, _patterns_excluding
from dms.gbr_local import GbrLocalInput
from dms.oracle import brute_force_gbr

from conftest import gbr_input, oscillation_inputs, tiny_instance


def _profile_costs(inputs, actions):
    """Recompute every station's cost under a given set of actions."""
    costs = {}
    for bs in sorted(inputs):
        inp = replace(inputs[bs], neighbor_patterns=_patterns_excluding(actions, bs))
        costs[bs] = cost_f(actions[bs], inp)
    return costs


def test_zero_demands_converge_to_empty_in_one_round():
    inputs = oscillation_inputs(demand=0.0)
    res = run_gbr_game(inputs)
    assert res.converged
    assert res.rounds == 1
    assert all(a.pairs == frozenset() for a in res.profile.actions.values())


def test_single_station_reaches_standalone_optimum():
    inp = {0: gbr_input([[5.0, 5.0, 5.0]], demands=[9.0])}
    res = run_gbr_game(inp)
    assert res.converged
    assert res.profile.actions[0].npairs == 2
    assert res.total_penalty == 0.0


def test_oscillation_table_move_sequence():
    """Best-response play reproduces the published 3-station move table:
    each displaced station swaps TTIs with cost 1, the displacing neighbour
    leaves it at cost 101, and the whole profile repeats every 6 moves."""
    inputs = oscillation_inputs()
    res = run_gbr_game(inputs, br_round_cap=12, ssbr_round_cap=0, trace=True)

    assert res.cycle_detected
    assert res.cycle_period_rounds == 2  # 6 moves with 3 players
    assert not res.converged

    moves = [(m.bs, tuple(sorted(m.action.pairs)), m.cost) for m in res.moves]
    # round 1 establishes the step "k" column of the table
    assert moves[0] == (0, ((0, 0),), 1.0)
    assert moves[1] == (1, ((1, 1),), 1.0)
    assert moves[2] == (2, ((2, 0),), 1.0)
    # the displaced station swaps its TTI at every subsequent move
    expected_swaps = [(0, ((0, 1),)), (1, ((1, 0),)), (2, ((2, 1),)),
                      (0, ((0, 0),)), (1, ((1, 1),)), (2, ((2, 0),))]
    for move, (bs, pairs) in zip(moves[3:9], expected_swaps):
        assert move == (bs, pairs, 1.0)
    # exact 6-move cycle
    for j in range(3, len(moves) - 6):
        assert moves[j][:2] == (moves[j + 6][0], moves[j + 6][1])


def test_oscillation_table_cost_columns():
    """Replaying the rounds shows the 101-cost column rotating through the
    stations exactly as in the published table."""
    inputs = oscillation_inputs()
    players = sorted(inputs)
    state = GbrGameState(profile=ActionProfile.empty(players, 2))
    observed_costs = set()
    columns = []
    for _ in range(4):
        state = play_round(state, inputs)
        columns.append(tuple(round(state.costs[b], 6) for b in players))
        observed_costs.update(columns[-1])
    assert columns[0] == (101.0, 1.0, 1.0)   # step k
    assert columns[1] == (101.0, 1.0, 1.0)   # step k+3 (same shape, rotated back)
    assert columns[0] == columns[2] == columns[3]
    assert observed_costs <= {1.0, 101.0, 2.0}


def test_oscillation_resolves_with_single_step_phase():
    inputs = oscillation_inputs()
    res = run_gbr_game(inputs, br_round_cap=9, ssbr_round_cap=36)
    assert res.converged
    for bs, action in res.profile.actions.items():
        assert action.pairs == frozenset({(bs, 0), (bs, 1)})
        assert res.costs[bs] == pytest.approx(2.0)
    assert res.total_penalty == 0.0
    # 2 * 2.51 = 5.02 covers the demand of 5
    assert all(v == 0.0 for v in res.penalties.values())


def test_converged_profile_is_nash_on_small_instances():
    inst, gains = tiny_instance(seed=11, n_bs=2, gbr_per_bs=2, be_per_bs=0)
    demands = {u: 60000.0 for us in inst.gbr_users_of for u in us}
    sc = inst.scenario(gains, demands)
    inputs = sc.gbr_inputs(5)
    res = run_gbr_game(inputs)
    assert res.converged
    for bs in sorted(inputs):
        inp = replace(inputs[bs],
                      neighbor_patterns=_patterns_excluding(res.profile.actions, bs))
        alt = brute_force_gbr(inp)
        assert res.costs[bs] <= alt.cost + 1e-9


def test_single_step_moves_never_increase_movers_cost():
    inputs = oscillation_inputs()
    players = sorted(inputs)
    state = GbrGameState(profile=ActionProfile.empty(players, 2))
    for _ in range(3):
        state = play_round(state, inputs)
    state.strategy = "ssbr"
    for _ in range(6):
        before_actions = dict(state.profile.actions)
        for bs in players:
            inp = replace(inputs[bs],
                          neighbor_patterns=_patterns_excluding(before_actions, bs))
            from dms import single_step_best_response
            sol = single_step_best_response(before_actions[bs], inp)
            assert sol.cost <= cost_f(before_actions[bs], inp) + 1e-9
            before_actions[bs] = sol.action
        state = play_round(state, inputs)


def test_saturation_profile_conditions():
    inputs = oscillation_inputs(demand=0.0)
    profile = ActionProfile.empty(sorted(inputs), 2)
    assert is_saturation_profile(profile, inputs)  # zero penalty everywhere

    inputs = oscillation_inputs(demand=50.0)  # unmeetable: penalty with free useful TTIs
    profile = ActionProfile({i: Action(i, 2, frozenset({(i, 0)})) for i in range(3)})
    assert not is_saturation_profile(profile, inputs)

    full = ActionProfile({i: Action(i, 2, frozenset({(i, 0), (i, 1)})) for i in range(3)})
    assert is_saturation_profile(full, inputs)  # penalty but every TTI used


def test_ssbr_reaches_saturation_profile():
    inputs = oscillation_inputs()
    players = sorted(inputs)
    state = GbrGameState(profile=ActionProfile.empty(players, 2), strategy="ssbr")
    for _ in range(12):
        state = play_round(state, inputs)
    assert is_saturation_profile(state.profile, inputs)


def test_warm_start_converges_immediately_at_fixed_point():
    inputs = oscillation_inputs()
    res = run_gbr_game(inputs, br_round_cap=9, ssbr_round_cap=36)
    again = run_gbr_game(inputs, initial_profile=res.profile)
    assert again.converged
    assert again.rounds == 1
    assert again.profile.canonical_key() == res.profile.canonical_key()
