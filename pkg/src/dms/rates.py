"""Per-TTI achievable rate providers.

Both scheduling games only ever need "how many bits does user u get in TTI t
when this set of stations is transmitting".  ``PhysicalRateModel`` answers
from the SINR/MCS chain and caches per-activity-mask rate rows, which keeps
repeated game rounds cheap.  ``TableRateModel`` answers from an explicit
lookup and exists so tests can drive the games with hand-set rates.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Protocol, Sequence

import numpy as np

from .radio import LinkGainMatrix, McsTable
from .scheduling import AbsfPattern


class RateModel(Protocol):
    def rate(self, user: int, active: Iterable[int], tti: int = 0) -> float:
        """Bits for ``user`` in one TTI given the transmitting stations ``active``."""
        ...

    def rate_matrix(self, owner: int, users: Sequence[int],
                    neighbor_patterns: Mapping[int, AbsfPattern], horizon: int) -> np.ndarray:
        """(len(users), horizon) matrix of per-TTI rates under the given patterns."""
        ...


def interferer_mask(neighbor_patterns: Mapping[int, AbsfPattern], tti: int) -> int:
    mask = 0
    for bs, pattern in neighbor_patterns.items():
        if pattern.bit(tti):
            mask |= 1 << bs
    return mask


class PhysicalRateModel:
    """SINR-driven rates for one channel realization (one epoch)."""

    def __init__(self, gains: LinkGainMatrix, association: Sequence[int],
                 mcs: McsTable, tx_power_w: float, noise_power_w: float):
        self.gains = gains
        self.association = np.asarray(association, dtype=int)
        self.mcs = mcs
        self.tx_power_w = float(tx_power_w)
        self.noise_power_w = float(noise_power_w)
        g = gains.gains
        n_users = g.shape[0]
        self._pg = self.tx_power_w * g  # (users, bs)
        self._pg_serving = self._pg[np.arange(n_users), self.association] if n_users else np.zeros(0)
        self._rows: dict[int, np.ndarray] = {}

    def _rates_for_mask(self, mask: int) -> np.ndarray:
        """Rates of every user when exactly the stations in ``mask`` transmit."""
        row = self._rows.get(mask)
        if row is None:
            n_users, n_bs = self._pg.shape
            interference = np.zeros(n_users)
            for k in range(n_bs):
                if (mask >> k) & 1:
                    interference += self._pg[:, k]
            # a user's own serving station never interferes with itself
            own_active = ((mask >> self.association) & 1).astype(bool)
            interference = interference - np.where(own_active, self._pg_serving, 0.0)
            s = self._pg_serving / (self.noise_power_w + interference)
            row = self.mcs.rates_for(s)
            self._rows[mask] = row
        return row

    def rate(self, user: int, active: Iterable[int], tti: int = 0) -> float:
        mask = 0
        for k in active:
            mask |= 1 << k
        mask |= 1 << int(self.association[user])
        return float(self._rates_for_mask(mask)[user])

    def rate_matrix(self, owner, users, neighbor_patterns, horizon):
        idx = np.asarray(users, dtype=int)
        out = np.zeros((len(users), horizon))
        own_bit = 1 << owner
        for t in range(horizon):
            mask = interferer_mask(neighbor_patterns, t) | own_bit
            out[:, t] = self._rates_for_mask(mask)[idx]
        return out


class TableRateModel:
    """Rate injection hook: explicit per-(user, TTI, active-set) rates.

    ``lookup(user, tti, interferers)`` receives the frozenset of transmitting
    stations other than the user's serving one.
    """

    def __init__(self, lookup: Callable[[int, int, frozenset], float], association: Sequence[int]):
        self.lookup = lookup
        self.association = list(association)

    @classmethod
    def from_dict(cls, table: Mapping[tuple[int, frozenset], float], association: Sequence[int]):
        def lookup(user, tti, interferers):
            return table[(user, interferers)]
        return cls(lookup, association)

    def rate(self, user: int, active: Iterable[int], tti: int = 0) -> float:
        interferers = frozenset(active) - {self.association[user]}
        return float(self.lookup(user, tti, interferers))

    def rate_matrix(self, owner, users, neighbor_patterns, horizon):
        out = np.zeros((len(users), horizon))
        for t in range(horizon):
            active = frozenset(bs for bs, p in neighbor_patterns.items() if p.bit(t))
            for j, u in enumerate(users):
                out[j, t] = self.lookup(u, t, active - {self.association[u]})
        return out
