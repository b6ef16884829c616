"""Local best-effort problem: max-min user volume under a TTI budget.

A station may use at most ``tti_bound`` of the horizon's TTIs, one user per
TTI, and wants to maximise the smallest total volume across its users
(lexicographically: after the minimum, the second smallest, and so on).

The heuristic is a greedy lexicographic max-min: always top up the currently
poorest user with its best remaining TTI.  The exact mode first finds the
optimal minimum by bisecting over the achievable per-user volumes with a
set-assignment feasibility search, then refines lexicographically over the
surviving assignments.  The two routes are deliberately different from the
brute-force enumeration used as the test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Mapping

import numpy as np

from .errors import ConfigurationError
from .rates import RateModel
from .scheduling import AbsfPattern, Action, SolverLimits


@dataclass(frozen=True, eq=False)
class BeLocalInput:
    owner: int
    users: tuple[int, ...]
    neighbor_patterns: Mapping[int, AbsfPattern]
    horizon: int
    tti_bound: int
    rates: RateModel
    limits: SolverLimits = field(default_factory=SolverLimits)
    allowed_ttis: frozenset[int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(sorted(self.users)))
        if not self.users:
            raise ConfigurationError("users", "best-effort input needs a nonempty user set")
        if self.horizon < 1:
            raise ConfigurationError("horizon", "must be >= 1")
        if self.tti_bound < 1:
            raise ConfigurationError("tti_bound", "must be >= 1")
        if self.tti_bound > self.horizon:
            raise ConfigurationError("tti_bound", "must be <= horizon")
        if self.owner in self.neighbor_patterns:
            raise ConfigurationError("neighbor_patterns", "must not include the owner")

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

    def tti_allowed(self, t: int) -> bool:
        return self.allowed_ttis is None or t in self.allowed_ttis


@dataclass(frozen=True)
class BeLocalSolution:
    action: Action
    per_user_volume: dict[int, float]
    min_volume: float
    mean_volume: float


def volumes_of(action: Action, inp: BeLocalInput) -> dict[int, float]:
    """Per-user volume; contributions added in TTI-ascending order."""
    R = inp.rate_matrix
    idx = inp.user_index
    vol = {u: 0.0 for u in inp.users}
    for u, t in sorted(action.pairs, key=lambda p: p[1]):
        vol[u] += float(R[idx[u], t])
    return vol


def mean_user_volume(per_user_volume: Mapping[int, float]) -> float:
    if not per_user_volume:
        raise ConfigurationError("users", "mean volume of an empty user set is undefined")
    return sum(per_user_volume[u] for u in sorted(per_user_volume)) / len(per_user_volume)


def _solution(action: Action, inp: BeLocalInput) -> BeLocalSolution:
    vol = volumes_of(action, inp)
    return BeLocalSolution(action, vol, min(vol.values()), mean_user_volume(vol))


def _sorted_vector(action: Action, inp: BeLocalInput) -> tuple:
    vol = volumes_of(action, inp)
    return tuple(sorted(vol.values()))


def _rank(action: Action, inp: BeLocalInput) -> tuple:
    """Total preference order: lexicographic max-min, then fewer pairs, then
    the smallest pair set."""
    vec = _sorted_vector(action, inp)
    return (tuple(-v for v in vec), action.npairs, action.sorted_pairs())


def _greedy_action(inp: BeLocalInput) -> Action:
    R = inp.rate_matrix
    n_users, Z = R.shape
    volumes = np.zeros(n_users)
    free = np.array([inp.tti_allowed(t) for t in range(Z)], dtype=bool)
    blocked = np.zeros(n_users, dtype=bool)
    chosen: list[tuple[int, int]] = []
    while len(chosen) < inp.tti_bound and free.any() and not blocked.all():
        order = np.lexsort((np.arange(n_users), np.where(blocked, np.inf, volumes)))
        j = int(order[0])
        rates_j = np.where(free, R[j], -1.0)
        t = int(np.argmax(rates_j))
        if rates_j[t] <= 0.0:
            blocked[j] = True
            continue
        chosen.append((j, t))
        volumes[j] += float(R[j, t])
        free[t] = False
    pairs = frozenset((inp.users[j], t) for j, t in chosen)
    return Action(inp.owner, inp.horizon, pairs)


def _round_robin_action(inp: BeLocalInput) -> Action:
    """Baseline: the first ``tti_bound`` allowed TTIs dealt to users in turn."""
    pairs = []
    ttis = [t for t in range(inp.horizon) if inp.tti_allowed(t)][:inp.tti_bound]
    for j, t in enumerate(ttis):
        pairs.append((inp.users[j % len(inp.users)], t))
    return Action(inp.owner, inp.horizon, frozenset(pairs))


def _heuristic_maxmin(inp: BeLocalInput, prev: Action | None) -> BeLocalSolution:
    best = min((_greedy_action(inp), _round_robin_action(inp)),
               key=lambda a: _rank(a, inp))
    # change-averse: stay with the previous schedule unless strictly beaten
    if prev is not None and _rank(prev, inp)[0] <= _rank(best, inp)[0]:
        best = prev
    return _solution(best, inp)


def _subset_sums(R: np.ndarray, j: int, ttis: list[int], max_size: int):
    """(sum, frozenset) for every subset of user's TTIs up to ``max_size``."""
    out = []
    for size in range(0, max_size + 1):
        for combo in combinations(ttis, size):
            s = 0.0
            for t in combo:
                s += float(R[j, t])
            out.append((s, frozenset(combo)))
    return out


def _feasible_min(inp: BeLocalInput, v: float) -> bool:
    """Can every user reach volume >= v with at most ``tti_bound`` TTIs total?"""
    if v <= 0:
        return True
    R = inp.rate_matrix
    n_users = len(inp.users)
    ttis = [t for t in range(inp.horizon) if inp.tti_allowed(t)]

    per_user_sets: list[list[frozenset]] = []
    for j in range(n_users):
        options = [fs for s, fs in _subset_sums(R, j, ttis, inp.tti_bound) if s >= v]
        if not options:
            return False
        options.sort(key=len)
        per_user_sets.append(options)

    budget = inp.tti_bound

    def assign(j: int, used: frozenset, count: int) -> bool:
        if j == n_users:
            return True
        for fs in per_user_sets[j]:
            if count + len(fs) > budget:
                break  # options sorted by size
            if fs & used:
                continue
            if assign(j + 1, used | fs, count + len(fs)):
                return True
        return False

    return assign(0, frozenset(), 0)


def _exact_maxmin(inp: BeLocalInput) -> BeLocalSolution:
    R = inp.rate_matrix
    n_users, Z = R.shape
    ttis = [t for t in range(Z) if inp.tti_allowed(t)]

    # best achievable minimum: bisect over the per-user achievable volumes
    achievable = set()
    for j in range(n_users):
        for s, _ in _subset_sums(R, j, ttis, inp.tti_bound):
            achievable.add(s)
    values = sorted(achievable)
    lo, hi = 0, len(values) - 1
    best_v = 0.0
    while lo <= hi:
        mid = (lo + hi) // 2
        if _feasible_min(inp, values[mid]):
            best_v = values[mid]
            lo = mid + 1
        else:
            hi = mid - 1

    # lexicographic refinement over assignments whose minimum reaches best_v
    suffix = np.concatenate((np.cumsum(R[:, ::-1], axis=1)[:, ::-1],
                             np.zeros((n_users, 1))), axis=1)
    best_rank: list | None = None
    best_pairs: frozenset = frozenset()
    volumes = np.zeros(n_users)
    assign: list[int] = [-1] * Z

    def dfs(t: int, used: int):
        nonlocal best_rank, best_pairs
        if any(volumes[j] + suffix[j, t] < best_v for j in range(n_users)):
            return
        if t == Z:
            pair_set = frozenset((inp.users[assign[s]], s) for s in range(Z) if assign[s] >= 0)
            vec = tuple(sorted(volumes.tolist()))
            rank = [tuple(-x for x in vec), len(pair_set), tuple(sorted(pair_set))]
            if best_rank is None or rank < best_rank:
                best_rank = rank
                best_pairs = pair_set
            return
        dfs(t + 1, used)
        if used < inp.tti_bound and inp.tti_allowed(t):
            for j in range(n_users):
                if R[j, t] <= 0.0:
                    continue  # zero-rate pairs only waste budget
                assign[t] = j
                volumes[j] += R[j, t]
                dfs(t + 1, used + 1)
                volumes[j] -= R[j, t]
                assign[t] = -1

    dfs(0, 0)
    return _solution(Action(inp.owner, inp.horizon, best_pairs), inp)


def be_maxmin(inp: BeLocalInput, prev: Action | None = None,
              method: str = "auto") -> BeLocalSolution:
    """Max-min schedule under the TTI budget; exact on small instances."""
    if method not in ("auto", "exact", "heuristic"):
        raise ConfigurationError("method", f"unknown method {method!r}")
    if method == "auto":
        lim = inp.limits
        exact = (len(inp.users) <= lim.be_exact_max_users
                 and inp.horizon <= lim.be_exact_max_ttis)
        method = "exact" if exact else "heuristic"
    if method == "exact":
        return _exact_maxmin(inp)
    return _heuristic_maxmin(inp, prev)
