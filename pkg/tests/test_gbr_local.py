import numpy as np
import pytest

from dms import Action, best_response, cost_f, served_traffic, single_step_best_response
from dms.errors import CapacityError
from dms.gbr_local import penalties_for
from dms.oracle import brute_force_gbr
from dms.scheduling import SolverLimits, is_single_step

from conftest import cyclic_rates, gbr_input, oscillation_inputs


def test_served_traffic_empty_action():
    inp = gbr_input([[5, 3], [2, 4]], demands=[4, 4])
    served = served_traffic(Action(0, 2), inp)
    assert served == {0: 0.0, 1: 0.0}


def test_served_traffic_accumulates_per_pair():
    inp = gbr_input([[5, 3, 1]], demands=[9])
    a = Action(0, 3, frozenset({(0, 0), (0, 2)}))
    assert served_traffic(a, inp) == {0: 6.0}


def test_cost_residual_mode():
    inp = gbr_input([[5, 3]], demands=[7], alpha=10.0)
    a = Action(0, 2, frozenset({(0, 0)}))
    # served 5 of 7: cost = 1 + 10 * 2
    assert cost_f(a, inp) == pytest.approx(21.0)


def test_cost_zero_demand_empty_action():
    inp = gbr_input([[5, 3]], demands=[0.0])
    assert cost_f(Action(0, 2), inp) == 0.0


def test_cost_fixed_mode_matches_oscillation_arithmetic():
    from dms.gbr_local import GbrLocalInput
    rates = cyclic_rates()
    inp = GbrLocalInput(owner=0, users=(0,), demands={0: 5.0}, neighbor_patterns={},
                        horizon=2, alpha=1000.0, rates=rates,
                        penalty_mode="fixed", fixed_penalty=0.1)
    # alone in one TTI: 5.55 >= 5, cost 1
    assert cost_f(Action(0, 2, frozenset({(0, 0)})), inp) == pytest.approx(1.0)


def test_cost_fixed_mode_interfered():
    from dms.gbr_local import GbrLocalInput
    from dms.scheduling import AbsfPattern
    rates = cyclic_rates()
    # the previous-cyclic station is active in TTI 0: user 0 gets 2.73 < 5
    inp = GbrLocalInput(owner=0, users=(0,), demands={0: 5.0},
                        neighbor_patterns={2: AbsfPattern.from_ttis(2, 2, [0])},
                        horizon=2, alpha=1000.0, rates=rates,
                        penalty_mode="fixed", fixed_penalty=0.1)
    assert cost_f(Action(0, 2, frozenset({(0, 0)})), inp) == pytest.approx(101.0)


def test_best_response_zero_demand_is_empty():
    inp = gbr_input([[5, 3]], demands=[0.0])
    sol = best_response(inp)
    assert sol.action.pairs == frozenset()
    assert sol.cost == 0.0


def test_best_response_matches_brute_force_on_grid():
    rng = np.random.default_rng(0)
    levels = [0.0, 2.0, 5.0, 9.0]
    for _ in range(150):
        U = int(rng.integers(1, 3))
        T = int(rng.integers(1, 4))
        R = rng.choice(levels, size=(U, T))
        demands = rng.choice([0.0, 3.0, 6.0, 11.0], size=U)
        alpha = float(rng.choice([0.3, 10.0, 1000.0]))
        inp = gbr_input(R, demands, alpha=alpha)
        exact = best_response(inp, method="exact")
        brute = brute_force_gbr(inp)
        assert exact.action == brute.action
        assert exact.cost == brute.cost


def test_best_response_capacity_error_without_heuristic():
    R = np.ones((7, 11))
    inp = gbr_input(R, demands=np.ones(7))
    with pytest.raises(CapacityError):
        best_response(inp)


def test_heuristic_never_worse_than_empty_or_greedy_baseline():
    rng = np.random.default_rng(1)
    for _ in range(50):
        U, T = 8, 12
        R = rng.choice([0.0, 2.0, 5.0, 9.0], size=(U, T))
        demands = rng.uniform(0, 15, size=U)
        from dms.gbr_local import GbrLocalInput, _greedy_action
        inp = gbr_input(R, demands, alpha=10.0)
        from dataclasses import replace
        inp = replace(inp, limits=SolverLimits(allow_heuristic=True))
        sol = best_response(inp)
        assert sol.cost <= cost_f(Action(0, T), inp) + 1e-9
        assert sol.cost <= cost_f(_greedy_action(inp), inp) + 1e-9


def test_ssbr_stays_when_optimal():
    inp = gbr_input([[5.0, 5.0]], demands=[4.0])
    prev = Action(0, 2, frozenset({(0, 0)}))
    sol = single_step_best_response(prev, inp)
    assert sol.action == prev


def test_ssbr_adds_exactly_one_pair_when_helpful():
    inp = gbr_input([[5.0, 5.0, 5.0]], demands=[9.0], alpha=1000.0)
    prev = Action(0, 3, frozenset({(0, 0)}))
    sol = single_step_best_response(prev, inp)
    assert len(sol.action.pairs - prev.pairs) == 1
    assert len(prev.pairs - sol.action.pairs) == 0
    assert is_single_step(prev, sol.action)


def test_ssbr_never_increases_cost():
    rng = np.random.default_rng(2)
    for _ in range(100):
        U = int(rng.integers(1, 4))
        T = int(rng.integers(1, 6))
        R = rng.choice([0.0, 2.0, 5.0], size=(U, T))
        demands = rng.uniform(0, 12, size=U)
        inp = gbr_input(R, demands, alpha=float(rng.choice([0.5, 10.0])))
        pairs = set()
        for t in range(T):
            u = int(rng.integers(0, U + 1))
            if u < U:
                pairs.add((u, t))
        prev = Action(0, T, frozenset(pairs))
        sol = single_step_best_response(prev, inp)
        assert cost_f(sol.action, inp) <= cost_f(prev, inp) + 1e-9
        assert is_single_step(prev, sol.action)


def test_ssbr_dominates_every_narrow_neighbor():
    # argmin over {stay} U {remove one} U {add one}, checked exhaustively
    inp = gbr_input([[4.0, 2.0, 0.0], [3.0, 3.0, 5.0]], demands=[5.0, 6.0], alpha=7.0)
    prev = Action(0, 3, frozenset({(0, 0), (1, 2)}))
    sol = single_step_best_response(prev, inp)
    neighbors = [prev]
    for p in prev.pairs:
        neighbors.append(Action(0, 3, prev.pairs - {p}))
    for u in (0, 1):
        for t in range(3):
            if t not in prev.ttis():
                neighbors.append(Action(0, 3, prev.pairs | {(u, t)}))
    best = min(cost_f(a, inp) for a in neighbors)
    assert cost_f(sol.action, inp) == pytest.approx(best)


def test_interference_removal_never_reduces_served():
    from dataclasses import replace
    from dms import PhysicalRateModel
    from dms.radio import LinkGainMatrix, default_mcs_table
    from dms.gbr_local import GbrLocalInput
    from dms.scheduling import AbsfPattern
    gains = LinkGainMatrix(np.array([[5e-10, 2e-10, 1e-10], [4e-10, 1e-10, 2e-10]]))
    rates = PhysicalRateModel(gains, [0, 0], default_mcs_table(), 1.0, 1e-14)
    full = {1: AbsfPattern.all_on(1, 3), 2: AbsfPattern.all_on(2, 3)}
    less = {1: AbsfPattern.from_ttis(1, 3, [0]), 2: AbsfPattern.all_on(2, 3)}
    base = GbrLocalInput(owner=0, users=(0, 1), demands={0: 1e5, 1: 1e5},
                         neighbor_patterns=full, horizon=3, alpha=10.0, rates=rates)
    action = Action(0, 3, frozenset({(0, 0), (1, 1)}))
    served_full = served_traffic(action, base)
    served_less = served_traffic(action, replace(base, neighbor_patterns=less))
    for u in (0, 1):
        assert served_less[u] >= served_full[u]


def test_cost_recomputed_identity():
    rng = np.random.default_rng(3)
    for _ in range(50):
        R = rng.choice([0.0, 2.0, 5.0], size=(2, 4))
        inp = gbr_input(R, demands=[6.0, 3.0], alpha=10.0)
        pairs = {(int(rng.integers(0, 2)), t) for t in range(4) if rng.random() < 0.5}
        a = Action(0, 4, frozenset(pairs))
        served = served_traffic(a, inp)
        pens = penalties_for(served, inp)
        assert cost_f(a, inp) == a.npairs + 10.0 * sum(pens[u] for u in sorted(pens))
