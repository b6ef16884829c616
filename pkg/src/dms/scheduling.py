"""Core scheduling value types shared by both games.

An ``Action`` is a station's set of (user, TTI) pairs over a horizon, with at
most one user per TTI.  An ``AbsfPattern`` is the activity bitmap derived
from an action: bit t set means the owner transmits in TTI t.  Patterns are
what stations exchange; actions stay local.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ConfigurationError


@dataclass(frozen=True)
class SolverLimits:
    """Size bounds below which the exact local solvers are used."""

    exact_max_users: int = 6
    exact_max_ttis: int = 10
    be_exact_max_users: int = 4
    be_exact_max_ttis: int = 8
    allow_heuristic: bool = False


@dataclass(frozen=True)
class Action:
    """One station's schedule: a set of (user, TTI) pairs, one user per TTI."""

    owner: int
    horizon: int
    pairs: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset((int(u), int(t)) for u, t in self.pairs))
        seen = set()
        for u, t in self.pairs:
            if not (0 <= t < self.horizon):
                raise ConfigurationError("action", f"TTI {t} outside horizon {self.horizon}")
            if t in seen:
                raise ConfigurationError("action", f"TTI {t} scheduled more than once")
            seen.add(t)

    @property
    def npairs(self) -> int:
        return len(self.pairs)

    def ttis(self) -> set[int]:
        return {t for _, t in self.pairs}

    def users(self) -> set[int]:
        return {u for u, _ in self.pairs}

    def sorted_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.pairs))

    def with_pair(self, u: int, t: int) -> "Action":
        return Action(self.owner, self.horizon, self.pairs | {(u, t)})

    def without_pair(self, u: int, t: int) -> "Action":
        return Action(self.owner, self.horizon, self.pairs - {(u, t)})

    def truncated(self, horizon: int) -> "Action":
        return Action(self.owner, horizon, frozenset(p for p in self.pairs if p[1] < horizon))


@dataclass(frozen=True)
class AbsfPattern:
    """Activity bitmap over the horizon; the LSB of ``bits`` is TTI 0."""

    owner: int
    horizon: int
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.horizon:
            raise ConfigurationError("pattern", "bits outside horizon")

    def bit(self, t: int) -> bool:
        return bool((self.bits >> t) & 1)

    @property
    def popcount(self) -> int:
        return self.bits.bit_count()

    def active_ttis(self) -> list[int]:
        return [t for t in range(self.horizon) if self.bit(t)]

    def to_hex(self) -> str:
        width = max(1, (self.horizon + 3) // 4)
        return format(self.bits, f"0{width}x")

    @classmethod
    def from_hex(cls, owner: int, horizon: int, text: str) -> "AbsfPattern":
        return cls(owner, horizon, int(text, 16))

    def to_bitstring(self) -> str:
        """TTI-ascending character string, e.g. '1001' for bits {0, 3}."""
        return "".join("1" if self.bit(t) else "0" for t in range(self.horizon))

    @classmethod
    def all_on(cls, owner: int, horizon: int) -> "AbsfPattern":
        return cls(owner, horizon, (1 << horizon) - 1 if horizon else 0)

    @classmethod
    def from_ttis(cls, owner: int, horizon: int, ttis: Iterable[int]) -> "AbsfPattern":
        bits = 0
        for t in ttis:
            bits |= 1 << t
        return cls(owner, horizon, bits)


def pattern_from_action(action: Action) -> AbsfPattern:
    bits = 0
    for _, t in action.pairs:
        bits |= 1 << t
    return AbsfPattern(action.owner, action.horizon, bits)


def is_single_step(prev: Action, nxt: Action) -> bool:
    """Single-step neighbourhood membership, as a disjunction of one-sided
    set-difference bounds: |nxt - prev| <= 1 or |prev - nxt| <= 1."""
    if prev.owner != nxt.owner or prev.horizon != nxt.horizon:
        raise ConfigurationError("action", "single-step comparison needs same owner and horizon")
    return len(nxt.pairs - prev.pairs) <= 1 or len(prev.pairs - nxt.pairs) <= 1


@dataclass(frozen=True)
class ActionProfile:
    """The actions currently played by every station, all on one horizon."""

    actions: Mapping[int, Action]

    def __post_init__(self):
        actions = dict(self.actions)
        horizons = {a.horizon for a in actions.values()}
        if len(horizons) > 1:
            raise ConfigurationError("profile", "all actions must share one horizon")
        object.__setattr__(self, "actions", actions)

    @property
    def horizon(self) -> int:
        return next(iter(self.actions.values())).horizon if self.actions else 0

    def patterns(self) -> dict[int, AbsfPattern]:
        return {bs: pattern_from_action(a) for bs, a in self.actions.items()}

    def canonical_key(self) -> tuple:
        """Exact, hashable snapshot used for cycle/convergence detection."""
        return tuple((bs, self.actions[bs].sorted_pairs()) for bs in sorted(self.actions))

    def truncated(self, horizon: int) -> "ActionProfile":
        return ActionProfile({bs: a.truncated(horizon) for bs, a in self.actions.items()})

    @classmethod
    def empty(cls, players: Iterable[int], horizon: int) -> "ActionProfile":
        return cls({bs: Action(bs, horizon) for bs in players})


def demands_from_rate_mbps(users: Iterable[int], rate_mbps: float,
                           horizon: int, t_slot_s: float) -> dict[int, float]:
    """Per-user volume (bits per pattern period) for a guaranteed rate."""
    volume = rate_mbps * 1e6 * horizon * t_slot_s
    return {u: volume for u in users}
