"""Local guaranteed-bit-rate problem at one base station.

Given the activity patterns of the other stations, the station schedules its
own users over the horizon to minimise

    cost = (number of scheduled pairs) + alpha * (total penalty),

where the penalty of a user is its unserved residual demand ("residual"
mode) or a fixed charge whenever the demand is missed ("fixed" mode).

Three solvers live here:

* ``best_response`` exact mode: depth-first branch and bound over TTIs with a
  pooled-residual lower bound; returns the canonical optimum (ties broken by
  fewer pairs, then lexicographically smallest pair set).
* ``best_response`` heuristic mode: the largest-residual greedy with a
  per-user redundancy prune, never worse than the empty action or the
  previous action.
* ``single_step_best_response``: exact argmin over the single-step move set
  {keep, remove one pair, add one pair}.  Swapping a pair in one move is
  deliberately not a candidate; one-sided moves are what make the sequential
  dynamics settle instead of chasing each other around the horizon.

All volume sums accumulate in TTI-ascending order so that equal costs are
bit-identical across solvers and the brute-force oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import CapacityError, ConfigurationError
from .rates import RateModel
from .scheduling import AbsfPattern, Action, SolverLimits

RESIDUAL = "residual"
FIXED = "fixed"


@dataclass(frozen=True, eq=False)
class GbrLocalInput:
    owner: int
    users: tuple[int, ...]
    demands: Mapping[int, float]
    neighbor_patterns: Mapping[int, AbsfPattern]
    horizon: int
    alpha: float
    rates: RateModel
    penalty_mode: str = RESIDUAL
    fixed_penalty: float = 0.1
    limits: SolverLimits = field(default_factory=SolverLimits)
    allowed_ttis: frozenset[int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(sorted(self.users)))
        if self.alpha <= 0:
            raise ConfigurationError("alpha", "must be > 0")
        if self.penalty_mode not in (RESIDUAL, FIXED):
            raise ConfigurationError("penalty_mode", f"unknown mode {self.penalty_mode!r}")
        if self.owner in self.neighbor_patterns:
            raise ConfigurationError("neighbor_patterns", "must not include the owner")
        for u in self.users:
            if self.demands.get(u, 0.0) < 0:
                raise ConfigurationError("demands", f"negative demand for user {u}")

    @cached_property
    def rate_matrix(self) -> np.ndarray:
        R = self.rates.rate_matrix(self.owner, self.users, self.neighbor_patterns, self.horizon)
        if self.allowed_ttis is not None:
            mask = np.zeros(self.horizon, dtype=bool)
            for t in self.allowed_ttis:
                mask[t] = True
            R = np.where(mask[None, :], R, 0.0)
        return R

    @cached_property
    def user_index(self) -> dict[int, int]:
        return {u: j for j, u in enumerate(self.users)}

    def demand_vector(self) -> np.ndarray:
        return np.array([self.demands.get(u, 0.0) for u in self.users], dtype=float)

    def tti_allowed(self, t: int) -> bool:
        return self.allowed_ttis is None or t in self.allowed_ttis


@dataclass(frozen=True)
class GbrLocalSolution:
    action: Action
    served: dict[int, float]
    penalties: dict[int, float]
    cost: float


def served_traffic(action: Action, inp: GbrLocalInput) -> dict[int, float]:
    """Per-user served volume; contributions added in TTI-ascending order."""
    R = inp.rate_matrix
    idx = inp.user_index
    served = {u: 0.0 for u in inp.users}
    for u, t in sorted(action.pairs, key=lambda p: p[1]):
        served[u] += float(R[idx[u], t])
    return served


def _penalty(inp: GbrLocalInput, user: int, served: float) -> float:
    demand = inp.demands.get(user, 0.0)
    if inp.penalty_mode == RESIDUAL:
        return max(demand - served, 0.0)
    return inp.fixed_penalty if served < demand else 0.0


def penalties_for(served: Mapping[int, float], inp: GbrLocalInput) -> dict[int, float]:
    return {u: _penalty(inp, u, served[u]) for u in inp.users}


def cost_f(action: Action, inp: GbrLocalInput) -> float:
    served = served_traffic(action, inp)
    total = 0.0
    for u in inp.users:
        total += _penalty(inp, u, served[u])
    return action.npairs + inp.alpha * total


def _solution(action: Action, inp: GbrLocalInput) -> GbrLocalSolution:
    served = served_traffic(action, inp)
    pens = penalties_for(served, inp)
    total = 0.0
    for u in inp.users:
        total += pens[u]
    return GbrLocalSolution(action, served, pens, action.npairs + inp.alpha * total)


def _cost_tuple(action: Action, inp: GbrLocalInput) -> tuple:
    return (cost_f(action, inp), action.npairs, action.sorted_pairs())


def _greedy_action(inp: GbrLocalInput) -> Action:
    """Largest-residual greedy with a per-user redundancy prune."""
    R = inp.rate_matrix
    n_users, T = R.shape
    demands = inp.demand_vector()
    residual = demands.copy()
    free = np.array([inp.tti_allowed(t) for t in range(T)], dtype=bool)
    helpable = np.ones(n_users, dtype=bool)
    chosen: list[tuple[int, int]] = []  # local (user index, tti)
    min_gain = 1.0 / inp.alpha

    while free.any():
        candidates = np.where(helpable & (residual > 0))[0]
        if candidates.size == 0:
            break
        j = int(candidates[np.argmax(residual[candidates])])
        rates_j = np.where(free, R[j], -1.0)
        t = int(np.argmax(rates_j))
        gain = min(float(rates_j[t]), float(residual[j]))
        if gain <= min_gain:
            helpable[j] = False
            continue
        chosen.append((j, t))
        residual[j] = max(residual[j] - float(R[j, t]), 0.0)
        free[t] = False

    # per user: keep the smallest set of contributions that still covers the
    # demand; in fixed mode an uncovered user keeps nothing
    kept: list[tuple[int, int]] = []
    for j in range(n_users):
        mine = sorted(((float(R[j, t]), t) for jj, t in chosen if jj == j), reverse=True)
        if not mine:
            continue
        covered = sum(c for c, _ in mine) >= demands[j]
        if covered:
            acc = 0.0
            for c, t in mine:
                kept.append((j, t))
                acc += c
                if acc >= demands[j]:
                    break
        elif inp.penalty_mode == RESIDUAL:
            kept.extend((j, t) for c, t in mine if inp.alpha * c > 1.0)
        # fixed mode, uncovered: pairs cannot remove the fixed charge, drop them

    pairs = frozenset((inp.users[j], t) for j, t in kept)
    return Action(inp.owner, inp.horizon, pairs)


def _heuristic_best_response(inp: GbrLocalInput, prev: Action | None) -> GbrLocalSolution:
    best = min((_greedy_action(inp), Action(inp.owner, inp.horizon)),
               key=lambda a: _cost_tuple(a, inp))
    # keep the previous action unless the contender strictly beats it: the
    # sequential game settles much faster when movers are change-averse
    if prev is not None and cost_f(prev, inp) <= cost_f(best, inp):
        best = prev
    return _solution(best, inp)


def _exact_best_response(inp: GbrLocalInput) -> GbrLocalSolution:
    R = inp.rate_matrix
    n_users, T = R.shape
    demands = inp.demand_vector()
    alpha = inp.alpha
    residual_mode = inp.penalty_mode == RESIDUAL

    # pooled bound ingredients: per-depth descending best column rates
    col_max = R.max(axis=0) if n_users else np.zeros(T)
    suffix_prefix = []
    for t in range(T + 1):
        tail = np.sort(col_max[t:])[::-1]
        suffix_prefix.append(np.concatenate(([0.0], np.cumsum(tail))))
    user_suffix = np.concatenate((np.cumsum(R[:, ::-1], axis=1)[:, ::-1],
                                  np.zeros((n_users, 1))), axis=1) if n_users else np.zeros((0, T + 1))

    seed = _greedy_action(inp)
    best_key = list(_cost_tuple(seed, inp))
    best_pairs = set(seed.pairs)

    served = np.zeros(n_users)
    assign: list[int] = [-1] * T

    def leaf_penalty() -> float:
        total = 0.0
        for j in range(n_users):
            if residual_mode:
                total += max(demands[j] - served[j], 0.0)
            elif served[j] < demands[j]:
                total += inp.fixed_penalty
        return total

    def lower_bound(t: int, pairs: int) -> float:
        if residual_mode:
            rho = 0.0
            for j in range(n_users):
                rho += max(demands[j] - served[j], 0.0)
            pref = suffix_prefix[t]
            m = T - t
            bound = math.inf
            for j in range(m + 1):
                b = j + alpha * max(rho - pref[j], 0.0)
                if b < bound:
                    bound = b
            return pairs + bound
        unmeetable = 0
        for j in range(n_users):
            if demands[j] > served[j] + user_suffix[j, t]:
                unmeetable += 1
        return pairs + alpha * inp.fixed_penalty * unmeetable

    def record_leaf(pairs: int):
        nonlocal best_pairs
        cost = pairs + alpha * leaf_penalty()
        if cost > best_key[0]:
            return
        pair_set = {(inp.users[assign[t]], t) for t in range(T) if assign[t] >= 0}
        key = (cost, pairs, tuple(sorted(pair_set)))
        if key < tuple(best_key):
            best_key[:] = key
            best_pairs = pair_set

    def dfs(t: int, pairs: int):
        if t == T:
            record_leaf(pairs)
            return
        bound = lower_bound(t, pairs)
        if bound > best_key[0] or (bound == best_key[0] and pairs > best_key[1]):
            return
        # blank first: cheap schedules surface early and tighten the bound
        assign[t] = -1
        dfs(t + 1, pairs)
        if inp.tti_allowed(t):
            for j in range(n_users):
                r = R[j, t]
                if r <= 0.0 or served[j] >= demands[j]:
                    continue  # zero-contribution pairs are dominated
                assign[t] = j
                served[j] += r
                dfs(t + 1, pairs + 1)
                served[j] -= r
                assign[t] = -1

    dfs(0, 0)
    return _solution(Action(inp.owner, inp.horizon, frozenset(best_pairs)), inp)


def _pick_method(inp: GbrLocalInput, method: str) -> str:
    if method not in ("auto", "exact", "heuristic"):
        raise ConfigurationError("method", f"unknown method {method!r}")
    if method != "auto":
        return method
    lim = inp.limits
    if len(inp.users) <= lim.exact_max_users and inp.horizon <= lim.exact_max_ttis:
        return "exact"
    if lim.allow_heuristic:
        return "heuristic"
    raise CapacityError(
        f"instance ({len(inp.users)} users x {inp.horizon} TTIs) exceeds the exact bound "
        f"({lim.exact_max_users} x {lim.exact_max_ttis}) and the heuristic is not enabled")


def best_response(inp: GbrLocalInput, prev: Action | None = None,
                  method: str = "auto") -> GbrLocalSolution:
    """Cost-minimising action against the given neighbour patterns."""
    if _pick_method(inp, method) == "exact":
        return _exact_best_response(inp)
    return _heuristic_best_response(inp, prev)


def single_step_best_response(prev: Action, inp: GbrLocalInput) -> GbrLocalSolution:
    """Argmin of the cost over {prev} U {prev - pair} U {prev + pair}."""
    R = inp.rate_matrix
    idx = inp.user_index
    base_served = served_traffic(prev, inp)
    base_pen = penalties_for(base_served, inp)
    base_total = 0.0
    for u in inp.users:
        base_total += base_pen[u]
    base_cost = prev.npairs + inp.alpha * base_total

    best_cost = base_cost
    candidates: list[tuple[float, Action]] = [(base_cost, prev)]

    used = prev.ttis()
    for u, t in prev.pairs:
        served_u = base_served[u] - float(R[idx[u], t])
        delta = _penalty(inp, u, served_u) - base_pen[u]
        cost = base_cost - 1 + inp.alpha * delta
        candidates.append((cost, prev.without_pair(u, t)))
        best_cost = min(best_cost, cost)

    for t in range(inp.horizon):
        if t in used or not inp.tti_allowed(t):
            continue
        for u in inp.users:
            r = float(R[idx[u], t])
            delta = _penalty(inp, u, base_served[u] + r) - base_pen[u]
            cost = base_cost + 1 + inp.alpha * delta
            if cost <= best_cost:
                candidates.append((cost, prev.with_pair(u, t)))
                best_cost = min(best_cost, cost)

    ties = [a for c, a in candidates if c == best_cost]
    best = min(ties, key=lambda a: (a.npairs, a.sorted_pairs()))
    return _solution(best, inp)
