"""Evaluation metrics and signalling-overhead accounting.

Overhead counts the bits crossing the supervisor-to-station interface (I_C)
and the station-to-station interface (I_B) per scheduling period.  A fully
centralized scheduler needs B-bit channel scalars for every (user, station)
pair plus a W-bit pattern per station on I_C and nothing on I_B.  The
semi-distributed scheme needs two B-bit scalars per station on I_C, while
stations exchange W-bit patterns for k game rounds on I_B.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import ConfigurationError


@dataclass(frozen=True)
class OverheadParams:
    B: int          # bits per scalar
    W: int          # TTIs per pattern
    n_bs: int
    n_users: int
    k: int | None = None  # game rounds; defaults to n_bs ** 2

    def __post_init__(self):
        for name in ("B", "W", "n_bs", "n_users"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(name, "must be a positive integer")
        if self.k is not None and self.k <= 0:
            raise ConfigurationError("k", "must be a positive integer")

    @property
    def rounds(self) -> int:
        return self.k if self.k is not None else self.n_bs ** 2


def time_utilization_index(per_bs_tti_usage: Mapping[int, int], legacy_ttis: int) -> float:
    """Mean per-station TTI usage normalised to the legacy (always-on) count."""
    if legacy_ttis <= 0:
        raise ConfigurationError("legacy_ttis", "must be > 0")
    if not per_bs_tti_usage:
        raise ConfigurationError("per_bs_tti_usage", "needs at least one station")
    return sum(per_bs_tti_usage[b] / legacy_ttis for b in sorted(per_bs_tti_usage)) \
        / len(per_bs_tti_usage)


def overhead_bits(p: OverheadParams, scheme: str) -> tuple[int, int]:
    """(I_C bits, I_B bits) for one scheduling period."""
    if scheme == "centralized":
        return p.B * p.n_users * p.n_bs + p.W * p.n_bs, 0
    if scheme == "dms":
        return 2 * p.B * p.n_bs, p.W * p.rounds * p.n_bs
    raise ConfigurationError("scheme", f"unknown scheme {scheme!r}")


def crossover_users(p: OverheadParams) -> int:
    """Smallest user count for which the semi-distributed overhead wins,
    i.e. the smallest integer |U| with |U| > 1 + (W/B)(k-1)."""
    threshold = 1 + Fraction(p.W, p.B) * (p.rounds - 1)
    return int(threshold) + 1  # floor(threshold) + 1: strict inequality


def rate_cdf(per_user_rates: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical CDF as sorted (rate, cumulative fraction) pairs."""
    if len(per_user_rates) == 0:
        raise ConfigurationError("per_user_rates", "needs at least one value")
    values = sorted(float(v) for v in per_user_rates)
    n = len(values)
    return [(v, (i + 1) / n) for i, v in enumerate(values)]
