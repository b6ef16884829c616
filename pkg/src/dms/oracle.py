"""Exact centralized solvers and brute-force enumerators for tiny instances.

The centralized problems have no exogenous activity patterns, so TTIs are
exchangeable and a user's rate depends only on which stations transmit in
its TTI.  A joint schedule is therefore characterised by (i) how many TTIs
carry each activity pattern (a composition of the horizon over the nonempty
station subsets) and (ii) how each station assigns its own users to its
active slots, which is independent across stations once the counts are
fixed.  Both solvers enumerate the compositions and memoise the per-station
assignment subproblems, with used TTIs compacted into a prefix.

These solvers exist as benchmarks and test oracles only; their instance
bounds are deliberately tight and exceeding them raises ``CapacityError``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .be_local import BeLocalInput
from .errors import CapacityError
from .gbr_local import GbrLocalInput

ORACLE_MAX_BS = 3
ORACLE_MAX_USERS_PER_BS = 3
ORACLE_MAX_TTIS = 6
LOCAL_BRUTE_MAX_USERS = 3
LOCAL_BRUTE_MAX_TTIS = 5


@dataclass(frozen=True)
class CentralGbrSolution:
    objective: float
    L: int
    used_ttis: tuple[int, ...]
    bs_activity: dict[tuple[int, int], int]      # (bs, tti) -> 0/1
    assignment: dict[tuple[int, int], float]     # (user, tti) -> rate served
    penalties: dict[int, float]
    per_bs_usage: dict[int, int]
    total_pairs: int


@dataclass(frozen=True)
class CentralBeSolution:
    utility: float                               # sum over stations of min user volume
    per_bs_min_volume: dict[int, float]
    per_user_volume: dict[int, float]
    assignment: dict[tuple[int, int], float]
    per_bs_usage: dict[int, int]


def _check_oracle_bounds(n_bs: int, users_of, horizon: int):
    if n_bs > ORACLE_MAX_BS or horizon > ORACLE_MAX_TTIS \
            or any(len(us) > ORACLE_MAX_USERS_PER_BS for us in users_of):
        raise CapacityError(
            f"oracle bound is {ORACLE_MAX_BS} stations x {ORACLE_MAX_USERS_PER_BS} "
            f"users x {ORACLE_MAX_TTIS} TTIs")


def _activity_patterns(stations: Sequence[int]) -> list[frozenset[int]]:
    """Nonempty subsets of the relevant stations, in a fixed order."""
    out = []
    for size in range(1, len(stations) + 1):
        for combo in combinations(stations, size):
            out.append(frozenset(combo))
    return out


def _group_distributions(n_users: int, count: int):
    """Every way to split ``count`` identical slots among ``n_users`` users."""
    if n_users == 1:
        yield (count,)
        return
    for first in range(count + 1):
        for rest in _group_distributions(n_users - 1, count - first):
            yield (first,) + rest


class _StationSolver:
    """Per-station assignment subproblems, memoised over slot-count vectors.

    ``groups`` lists, for each activity pattern containing the station, the
    per-user rates under that pattern.  A count vector says how many slots of
    each group the station must fill (one user per slot).
    """

    def __init__(self, users: Sequence[int], group_rates: list[tuple[float, ...]]):
        self.users = list(users)
        self.group_rates = group_rates
        self._cache: dict[tuple, tuple] = {}

    def _enumerate(self, counts: tuple[int, ...]):
        """Yield (volumes, per-group user-count vectors) over all assignments."""
        n = len(self.users)

        def walk(g: int, volumes: tuple[float, ...], chosen: tuple):
            if g == len(counts):
                yield volumes, chosen
                return
            for dist in _group_distributions(n, counts[g]):
                vols = tuple(v + c * r for v, c, r in
                             zip(volumes, dist, self.group_rates[g]))
                yield from walk(g + 1, vols, chosen + (dist,))

        yield from walk(0, tuple(0.0 for _ in self.users), ())

    def min_residual(self, counts: tuple[int, ...], demands: tuple[float, ...]):
        key = ("gbr", counts, demands)
        if key not in self._cache:
            best = None
            for volumes, chosen in self._enumerate(counts):
                residual = 0.0
                for v, d in zip(volumes, demands):
                    residual += max(d - v, 0.0)
                cand = (residual, chosen)
                if best is None or cand < best:
                    best = cand
            self._cache[key] = best
        return self._cache[key]

    def maxmin(self, counts: tuple[int, ...]):
        key = ("be", counts)
        if key not in self._cache:
            best = None
            for volumes, chosen in self._enumerate(counts):
                vec = tuple(sorted(volumes))
                cand = (tuple(-x for x in vec), chosen, volumes)
                if best is None or cand < best:
                    best = cand
            neg_vec, chosen, volumes = best
            self._cache[key] = (-neg_vec[0], chosen, volumes)
        return self._cache[key]


def _compositions(total: int, n_slots: int, exact: bool):
    """Count vectors of length ``n_slots`` with sum == total (or <= total)."""
    def walk(i: int, remaining: int, acc: tuple):
        if i == n_slots:
            if not exact or remaining == 0:
                yield acc
            return
        for c in range(remaining + 1):
            yield from walk(i + 1, remaining - c, acc + (c,))

    yield from walk(0, total, ())


def _layout(patterns, counts):
    """Deterministic TTI layout: pattern slots in order, used TTIs a prefix."""
    slots = []
    for p, c in zip(patterns, counts):
        slots.extend([p] * c)
    return slots


def _station_groups(scenario, users_of, station: int, patterns):
    """Group indices and per-user rates for every pattern containing station."""
    idxs, rates = [], []
    for gi, p in enumerate(patterns):
        if station in p:
            idxs.append(gi)
            rates.append(tuple(scenario.rates.rate(u, p) for u in users_of[station]))
    return idxs, rates


def solve_gbr_central(scenario, W: int, alpha: float) -> CentralGbrSolution:
    """Globally optimal joint schedule minimising L + alpha * total penalty.

    L is the highest used TTI index; used TTIs are compacted into a prefix,
    so L equals the number of non-blank TTIs.  Ties break toward fewer
    scheduled pairs, then the lexicographically smallest composition.
    """
    users_of = scenario.gbr_users_of
    _check_oracle_bounds(scenario.n_bs, users_of, W)
    demands_of = {i: tuple(scenario.demands.get(u, 0.0) for u in users_of[i])
                  for i in range(scenario.n_bs)}
    relevant = [i for i in range(scenario.n_bs)
                if users_of[i] and sum(demands_of[i]) > 0]
    if not relevant:
        return CentralGbrSolution(objective=0.0, L=0, used_ttis=(),
                                  bs_activity={}, assignment={},
                                  penalties={u: 0.0 for us in users_of for u in us},
                                  per_bs_usage={i: 0 for i in range(scenario.n_bs)},
                                  total_pairs=0)

    patterns = _activity_patterns(relevant)
    solvers = {}
    station_groups = {}
    for i in relevant:
        idxs, rates = _station_groups(scenario, users_of, i, patterns)
        station_groups[i] = idxs
        solvers[i] = _StationSolver(users_of[i], rates)

    best_key = None
    best = None
    for counts in _compositions(W, len(patterns), exact=False):
        L = sum(counts)
        pairs = sum(c * len(p) for c, p in zip(counts, patterns))
        residual = 0.0
        for i in relevant:
            sub = tuple(counts[g] for g in station_groups[i])
            residual += solvers[i].min_residual(sub, demands_of[i])[0]
        key = (L + alpha * residual, pairs, counts)
        if best_key is None or key < best_key:
            best_key = key
            best = counts

    objective, total_pairs, counts = best_key
    slots = _layout(patterns, counts)
    assignment: dict[tuple[int, int], float] = {}
    activity: dict[tuple[int, int], int] = {}
    usage = {i: 0 for i in range(scenario.n_bs)}
    served = {u: 0.0 for us in users_of for u in us}
    for i in relevant:
        sub = tuple(counts[g] for g in station_groups[i])
        _, chosen = solvers[i].min_residual(sub, demands_of[i])
        _fill_assignment(i, users_of[i], station_groups[i], chosen, patterns, counts,
                         scenario, assignment, activity, usage, served)
    pens = {u: max(scenario.demands.get(u, 0.0) - served[u], 0.0)
            for us in users_of for u in us}
    return CentralGbrSolution(
        objective=float(objective), L=len(slots), used_ttis=tuple(range(len(slots))),
        bs_activity=activity, assignment=assignment, penalties=pens,
        per_bs_usage=usage, total_pairs=total_pairs)


def _fill_assignment(station, users, group_idxs, chosen, patterns, counts,
                     scenario, assignment, activity, usage, served):
    """Materialise one station's per-group user counts onto concrete TTIs.

    The layout places each pattern's slots consecutively, in pattern order,
    so offsets follow directly from the composition counts.
    """
    offsets = {}
    pos = 0
    for gi in range(len(patterns)):
        offsets[gi] = pos
        pos += counts[gi]
    for local_g, gi in enumerate(group_idxs):
        dist = chosen[local_g]
        t = offsets[gi]
        p = patterns[gi]
        for uj, reps in enumerate(dist):
            for _ in range(reps):
                u = users[uj]
                r = scenario.rates.rate(u, p)
                assignment[(u, t)] = r
                activity[(station, t)] = 1
                usage[station] += 1
                served[u] += r
                t += 1


def solve_be_central(scenario, Z: int) -> CentralBeSolution:
    """Globally optimal joint schedule maximising the summed per-station
    minimum user volume over Z interchangeable TTIs."""
    users_of = scenario.be_users_of
    _check_oracle_bounds(scenario.n_bs, users_of, Z)
    relevant = [i for i in range(scenario.n_bs) if users_of[i]]
    if not relevant or Z <= 0:
        return CentralBeSolution(utility=0.0, per_bs_min_volume={},
                                 per_user_volume={u: 0.0 for us in users_of for u in us},
                                 assignment={}, per_bs_usage={i: 0 for i in range(scenario.n_bs)})

    patterns = _activity_patterns(relevant)
    solvers = {}
    station_groups = {}
    for i in relevant:
        idxs, rates = _station_groups(scenario, users_of, i, patterns)
        station_groups[i] = idxs
        solvers[i] = _StationSolver(users_of[i], rates)

    best_key = None
    best = None
    # more slots never hurt: only compositions using the full horizon matter
    for counts in _compositions(Z, len(patterns), exact=True):
        pairs = sum(c * len(p) for c, p in zip(counts, patterns))
        utility = 0.0
        for i in relevant:
            sub = tuple(counts[g] for g in station_groups[i])
            utility += solvers[i].maxmin(sub)[0]
        key = (-utility, pairs, counts)
        if best_key is None or key < best_key:
            best_key = key
            best = counts

    neg_utility, _, counts = best_key
    slots = _layout(patterns, counts)
    assignment: dict[tuple[int, int], float] = {}
    activity: dict[tuple[int, int], int] = {}
    usage = {i: 0 for i in range(scenario.n_bs)}
    vols = {u: 0.0 for us in users_of for u in us}
    for i in relevant:
        sub = tuple(counts[g] for g in station_groups[i])
        _, chosen, _ = solvers[i].maxmin(sub)
        _fill_assignment(i, users_of[i], station_groups[i], chosen, patterns, counts,
                         scenario, assignment, activity, usage, vols)
    per_bs_min = {i: min(vols[u] for u in users_of[i]) for i in relevant}
    return CentralBeSolution(
        utility=float(-neg_utility), per_bs_min_volume=per_bs_min,
        per_user_volume=vols, assignment=assignment, per_bs_usage=usage)


def brute_force_gbr(inp: GbrLocalInput):
    """Exhaustive argmin over every valid local action; the oracle for
    ``best_response`` exact mode.  Returns a GbrLocalSolution."""
    from .gbr_local import _solution  # same construction path as the solver
    from .scheduling import Action

    if len(inp.users) > LOCAL_BRUTE_MAX_USERS or inp.horizon > LOCAL_BRUTE_MAX_TTIS:
        raise CapacityError(
            f"local brute force bound is {LOCAL_BRUTE_MAX_USERS} users x "
            f"{LOCAL_BRUTE_MAX_TTIS} TTIs")
    R = inp.rate_matrix
    users = inp.users
    demands = inp.demand_vector()
    alpha = inp.alpha
    residual_mode = inp.penalty_mode == "residual"

    best_key = None
    best_pairs: frozenset = frozenset()
    served = np.zeros(len(users))
    assign = [-1] * inp.horizon

    def penalty() -> float:
        total = 0.0
        for j in range(len(users)):
            if residual_mode:
                total += max(demands[j] - served[j], 0.0)
            elif served[j] < demands[j]:
                total += inp.fixed_penalty
        return total

    def walk(t: int, pairs: int):
        nonlocal best_key, best_pairs
        if t == inp.horizon:
            pair_set = frozenset((users[assign[s]], s) for s in range(inp.horizon)
                                 if assign[s] >= 0)
            key = (pairs + alpha * penalty(), pairs, tuple(sorted(pair_set)))
            if best_key is None or key < best_key:
                best_key = key
                best_pairs = pair_set
            return
        walk(t + 1, pairs)
        if inp.tti_allowed(t):
            for j in range(len(users)):
                assign[t] = j
                served[j] += R[j, t]
                walk(t + 1, pairs + 1)
                served[j] -= R[j, t]
                assign[t] = -1

    walk(0, 0)
    return _solution(Action(inp.owner, inp.horizon, best_pairs), inp)


def brute_force_be(inp: BeLocalInput):
    """Exhaustive lexicographic max-min over every valid action; the oracle
    for ``be_maxmin`` exact mode.  Returns a BeLocalSolution."""
    from .be_local import _solution
    from .scheduling import Action

    if len(inp.users) > LOCAL_BRUTE_MAX_USERS or inp.horizon > LOCAL_BRUTE_MAX_TTIS:
        raise CapacityError(
            f"local brute force bound is {LOCAL_BRUTE_MAX_USERS} users x "
            f"{LOCAL_BRUTE_MAX_TTIS} TTIs")
    R = inp.rate_matrix
    users = inp.users
    best_key = None
    best_pairs: frozenset = frozenset()
    volumes = np.zeros(len(users))
    assign = [-1] * inp.horizon

    def walk(t: int, used: int):
        nonlocal best_key, best_pairs
        if t == inp.horizon:
            pair_set = frozenset((users[assign[s]], s) for s in range(inp.horizon)
                                 if assign[s] >= 0)
            vec = tuple(sorted(volumes.tolist()))
            key = (tuple(-v for v in vec), used, tuple(sorted(pair_set)))
            if best_key is None or key < best_key:
                best_key = key
                best_pairs = pair_set
            return
        walk(t + 1, used)
        if used < inp.tti_bound and inp.tti_allowed(t):
            for j in range(len(users)):
                assign[t] = j
                volumes[j] += R[j, t]
                walk(t + 1, used + 1)
                volumes[j] -= R[j, t]
                assign[t] = -1

    walk(0, 0)
    return _solution(Action(inp.owner, inp.horizon, best_pairs), inp)


def brute_force_local(problem: str, inp):
    if problem == "gbr-br":
        return brute_force_gbr(inp)
    if problem == "be-maxmin":
        return brute_force_be(inp)
    raise ValueError(f"unknown local problem {problem!r}")


def check_gbr_solution(sol: CentralGbrSolution, scenario, W: int, alpha: float) -> None:
    """Independent constraint validator; raises AssertionError on violation."""
    users_of = scenario.gbr_users_of
    demands = scenario.demands
    for t in range(W):
        for i, us in enumerate(users_of):
            scheduled = [u for u in us if (u, t) in sol.assignment]
            assert len(scheduled) <= 1, "more than one user scheduled by one station"
            if scheduled:
                assert sol.bs_activity.get((i, t)) == 1, "scheduled user on inactive station"
                assert t < sol.L, "used TTI beyond L"
    for (u, t), r in sol.assignment.items():
        active = frozenset(i for i in range(scenario.n_bs) if sol.bs_activity.get((i, t)))
        assert r == scenario.rates.rate(u, active), "assigned rate inconsistent with activity"
    served: dict[int, float] = {u: 0.0 for us in users_of for u in us}
    for (u, t), r in sorted(sol.assignment.items(), key=lambda kv: kv[0][1]):
        served[u] += r
    for u in served:
        assert served[u] + sol.penalties[u] >= demands.get(u, 0.0) - 1e-9, \
            "demand constraint violated"
        assert sol.penalties[u] >= 0
    recomputed = sol.L + alpha * sum(sol.penalties[u] for u in sorted(served))
    assert math.isclose(recomputed, sol.objective, rel_tol=0, abs_tol=1e-6), "objective mismatch"


def check_be_solution(sol: CentralBeSolution, scenario, Z: int) -> None:
    users_of = scenario.be_users_of
    for t in range(Z):
        for i, us in enumerate(users_of):
            scheduled = [u for u in us if (u, t) in sol.assignment]
            assert len(scheduled) <= 1, "more than one user scheduled by one station"
    for (u, t), r in sol.assignment.items():
        active = frozenset(i for i, us in enumerate(users_of)
                           if any((uu, t) in sol.assignment for uu in us))
        assert r == scenario.rates.rate(u, active), "assigned rate inconsistent with activity"
    vols = {u: 0.0 for us in users_of for u in us}
    for (u, t), r in sorted(sol.assignment.items(), key=lambda kv: kv[0][1]):
        vols[u] += r
    total = sum(min(vols[u] for u in us) for us in users_of if us)
    assert math.isclose(total, sol.utility, rel_tol=0, abs_tol=1e-6), "utility mismatch"
