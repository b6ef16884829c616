"""Radio layer: hexagonal site deployment, path loss, SINR and MCS rate lookup.

Distances are in meters, powers in watts, rates in bits per TTI.  Channel
gains are dimensionless linear power gains G[u, k] between user u and base
station k.  The default propagation model is the macro-cell urban path loss
PL(d) = 128.1 + 37.6 * log10(d_km), optionally multiplied by a unit-mean
exponential factor (Rayleigh power fading).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError

# Row spacing of a triangular lattice, as a fraction of the site pitch.
ROW_SPACING_FACTOR = math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class Topology:
    """Base-station and user geometry with the Voronoi user association.

    ``grid_rc`` keeps the (row, col) lattice coordinates of each site; they
    drive the 3-colouring used by the frequency-reuse baseline.
    ``effective_isd`` is the pitch actually laid out, which is smaller than
    the requested ``isd`` when the grid had to be compressed to fit the area.
    """

    bs_positions: tuple[tuple[float, float], ...]
    user_positions: tuple[tuple[float, float], ...]
    association: tuple[int, ...]
    area: tuple[float, float]
    isd: float
    effective_isd: float
    grid_rc: tuple[tuple[int, int], ...]

    @property
    def n_bs(self) -> int:
        return len(self.bs_positions)

    @property
    def n_users(self) -> int:
        return len(self.user_positions)

    def users_of(self, bs: int) -> tuple[int, ...]:
        return tuple(u for u, b in enumerate(self.association) if b == bs)

    def to_dict(self) -> dict:
        return {
            "bs_positions": [list(p) for p in self.bs_positions],
            "user_positions": [list(p) for p in self.user_positions],
            "association": list(self.association),
            "area": list(self.area),
            "isd": self.isd,
            "effective_isd": self.effective_isd,
            "grid_rc": [list(rc) for rc in self.grid_rc],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        topo = cls(
            bs_positions=tuple((float(x), float(y)) for x, y in d["bs_positions"]),
            user_positions=tuple((float(x), float(y)) for x, y in d["user_positions"]),
            association=tuple(int(a) for a in d["association"]),
            area=(float(d["area"][0]), float(d["area"][1])),
            isd=float(d["isd"]),
            effective_isd=float(d["effective_isd"]),
            grid_rc=tuple((int(r), int(c)) for r, c in d["grid_rc"]),
        )
        if len(topo.association) != topo.n_users:
            raise ConfigurationError("association", "length must match user count")
        if any(not (0 <= a < topo.n_bs) for a in topo.association):
            raise ConfigurationError("association", "serving index out of range")
        return topo


@dataclass(frozen=True)
class ChannelModel:
    """Distance-based path loss plus optional Rayleigh power fading."""

    pathloss_intercept_db: float = 128.1
    pathloss_slope_db_per_decade: float = 37.6
    fading: str = "none"  # "none" | "rayleigh"
    noise_power_w: float = 1.085e-14
    tx_power_w: float = 1.0
    min_distance_m: float = 10.0

    def __post_init__(self):
        if self.noise_power_w <= 0:
            raise ConfigurationError("noise_power_w", "must be > 0")
        if self.tx_power_w <= 0:
            raise ConfigurationError("tx_power_w", "must be > 0")
        if self.min_distance_m <= 0:
            raise ConfigurationError("min_distance_m", "must be > 0")
        if self.fading not in ("none", "rayleigh"):
            raise ConfigurationError("fading", f"unknown fading kind {self.fading!r}")


@dataclass(eq=False)
class LinkGainMatrix:
    """Linear power gains, shape (n_users, n_bs). All entries positive and finite."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 2:
            raise ConfigurationError("gains", "must be a 2-D (users x bs) matrix")
        if g.size and (not np.all(np.isfinite(g)) or not np.all(g > 0)):
            raise ConfigurationError("gains", "entries must be strictly positive and finite")
        object.__setattr__(self, "gains", g)

    @property
    def n_users(self) -> int:
        return self.gains.shape[0]

    @property
    def n_bs(self) -> int:
        return self.gains.shape[1]

    def to_dict(self) -> dict:
        return {"gains": self.gains.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LinkGainMatrix":
        return cls(np.asarray(d["gains"], dtype=float))


@dataclass(frozen=True, eq=False)
class McsTable:
    """Ordered (SINR threshold, rate) pairs; thresholds and rates strictly increasing.

    ``best_rate`` returns the rate of the highest entry whose threshold is
    <= the given SINR (inclusive), and 0 below the lowest threshold.
    """

    thresholds: np.ndarray  # linear SINR ratios, ascending
    rates: np.ndarray       # bits per TTI, ascending

    def __post_init__(self):
        thr = np.asarray(self.thresholds, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if thr.ndim != 1 or rates.shape != thr.shape or thr.size == 0:
            raise ConfigurationError("mcs_table", "need matching 1-D threshold and rate arrays")
        if thr[0] <= 0:
            raise ConfigurationError("mcs_table", "lowest threshold must be > 0")
        if np.any(np.diff(thr) <= 0) or np.any(np.diff(rates) <= 0):
            raise ConfigurationError("mcs_table", "thresholds and rates must be strictly increasing")
        if np.any(rates <= 0):
            raise ConfigurationError("mcs_table", "rates must be positive")
        object.__setattr__(self, "thresholds", thr)
        object.__setattr__(self, "rates", rates)

    @property
    def n_levels(self) -> int:
        return len(self.thresholds)

    def best_rate(self, s: float) -> float:
        idx = int(np.searchsorted(self.thresholds, s, side="right")) - 1
        return float(self.rates[idx]) if idx >= 0 else 0.0

    def rates_for(self, s: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.thresholds, s, side="right") - 1
        out = np.where(idx >= 0, self.rates[np.maximum(idx, 0)], 0.0)
        return out

    @classmethod
    def from_db_entries(cls, entries: Sequence[Sequence[float]]) -> "McsTable":
        thr_db = np.array([e[0] for e in entries], dtype=float)
        rates = np.array([e[1] for e in entries], dtype=float)
        return cls(10.0 ** (thr_db / 10.0), rates)

    def to_dict(self) -> dict:
        return {"thresholds": self.thresholds.tolist(), "rates": self.rates.tolist()}


def default_mcs_table(bw_hz: float = 20e6, t_slot_s: float = 1e-3, n_levels: int = 15) -> McsTable:
    """CQI-style table: thresholds -6.7..22.7 dB, efficiencies 0.15..5.55 b/s/Hz."""
    thr_db = np.linspace(-6.7, 22.7, n_levels)
    eff = np.linspace(0.15, 5.55, n_levels)
    rates = np.floor(eff * bw_hz * t_slot_s)
    return McsTable(10.0 ** (thr_db / 10.0), rates)


def _rows_needed(n_bs: int, cols: int) -> int:
    if cols == 1:
        return n_bs
    rows, placed = 0, 0
    while placed < n_bs:
        placed += cols if rows % 2 == 0 else cols - 1
        rows += 1
    return rows


def _hex_layout(n_bs: int, isd: float, width: float, height: float):
    """Choose the staggered-grid shape that preserves the largest pitch <= isd."""
    ideal_cols = math.sqrt(n_bs * width / (height * ROW_SPACING_FACTOR)) if height > 0 else float(n_bs)
    best = None
    for cols in range(1, n_bs + 1):
        rows = _rows_needed(n_bs, cols)
        limits = []
        if cols > 1:
            limits.append(width / (cols - 1))
        if rows > 1:
            limits.append(height / ((rows - 1) * ROW_SPACING_FACTOR))
        pitch = min(limits) if limits else math.inf
        key = (min(pitch, isd), -abs(cols - ideal_cols), -cols)
        if best is None or key > best[0]:
            best = (key, cols, rows, min(pitch, isd))
    _, cols, rows, pitch = best
    return cols, rows, pitch


def _drop_uniform_in_cell(rng, bs_xy: np.ndarray, bs: int, count: int,
                          width: float, height: float) -> list[tuple[float, float]]:
    """Rejection-sample points uniform over the Voronoi cell of site ``bs``."""
    got: list[tuple[float, float]] = []
    while len(got) < count:
        m = max(16, 4 * (count - len(got)))
        xs = rng.uniform(0.0, width, m)
        ys = rng.uniform(0.0, height, m)
        d2 = (xs[:, None] - bs_xy[None, :, 0]) ** 2 + (ys[:, None] - bs_xy[None, :, 1]) ** 2
        keep = np.argmin(d2, axis=1) == bs
        got.extend(zip(xs[keep].tolist(), ys[keep].tolist()))
    return got[:count]


def generate_hex_topology(n_bs: int, isd: float, area: Sequence[float],
                          users_per_bs: int, seed: int, strict: bool = False) -> Topology:
    """Lay out ``n_bs`` sites on a staggered hexagonal grid and drop users.

    Users are uniform within the Voronoi cell of their serving site.  When a
    grid at the requested pitch cannot fit the area, the pitch is compressed
    to the largest value that fits and recorded as ``effective_isd``; with
    ``strict=True`` that situation raises a configuration error instead.
    """
    width, height = float(area[0]), float(area[1])
    if n_bs < 1:
        raise ConfigurationError("n_bs", "must be >= 1")
    if users_per_bs < 0:
        raise ConfigurationError("users_per_bs", "must be >= 0")
    if isd <= 0:
        raise ConfigurationError("isd_m", "must be > 0")
    if width <= 0 or height <= 0:
        raise ConfigurationError("area_m", "both dimensions must be > 0")

    cols, rows, pitch = _hex_layout(n_bs, isd, width, height)
    if strict and pitch < isd:
        raise ConfigurationError(
            "isd_m",
            f"hex grid of {n_bs} sites at {isd} m spacing does not fit a "
            f"{width} x {height} m area (max pitch {pitch:.1f} m)")

    dy = pitch * ROW_SPACING_FACTOR
    y0 = (height - (rows - 1) * dy) / 2.0
    x0 = (width - (cols - 1) * pitch) / 2.0 if cols > 1 else width / 2.0
    sites: list[tuple[float, float]] = []
    grid: list[tuple[int, int]] = []
    for r in range(rows):
        if len(sites) == n_bs:
            break
        if cols == 1:
            row_x = [width / 2.0]
        elif r % 2 == 0:
            row_x = [x0 + c * pitch for c in range(cols)]
        else:
            row_x = [x0 + pitch / 2.0 + c * pitch for c in range(cols - 1)]
        for c, x in enumerate(row_x):
            if len(sites) == n_bs:
                break
            sites.append((x, y0 + r * dy))
            grid.append((r, c))

    bs_xy = np.array(sites, dtype=float)
    rng = np.random.default_rng(seed)
    users: list[tuple[float, float]] = []
    assoc: list[int] = []
    for i in range(n_bs):
        pts = _drop_uniform_in_cell(rng, bs_xy, i, users_per_bs, width, height)
        users.extend(pts)
        assoc.extend([i] * users_per_bs)

    return Topology(
        bs_positions=tuple(sites),
        user_positions=tuple(users),
        association=tuple(assoc),
        area=(width, height),
        isd=float(isd),
        effective_isd=float(pitch),
        grid_rc=tuple(grid),
    )


def compute_gains(topology: Topology, model: ChannelModel, seed) -> LinkGainMatrix:
    """Path-loss gains for every (user, BS) pair, times a fresh fading draw.

    ``seed`` may be an int or a numpy Generator; fading draws are a pure
    function of it.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    users = np.array(topology.user_positions, dtype=float).reshape(-1, 2)
    bs = np.array(topology.bs_positions, dtype=float).reshape(-1, 2)
    d = np.hypot(users[:, None, 0] - bs[None, :, 0], users[:, None, 1] - bs[None, :, 1])
    d = np.maximum(d, model.min_distance_m)
    pl_db = model.pathloss_intercept_db + model.pathloss_slope_db_per_decade * np.log10(d / 1000.0)
    g = 10.0 ** (-pl_db / 10.0)
    if model.fading == "rayleigh":
        g = g * rng.exponential(1.0, size=g.shape)
    return LinkGainMatrix(g)


def sinr(gains: LinkGainMatrix, user: int, serving: int, active: Iterable[int],
         tx_power_w: float, noise_power_w: float) -> float:
    """P*G[u,serving] over noise plus interference from ``active`` stations.

    The serving station is excluded from the interferer sum whether or not it
    appears in ``active``.
    """
    g = gains.gains
    interference = 0.0
    for k in active:
        if k != serving:
            interference += tx_power_w * g[user, k]
    return tx_power_w * g[user, serving] / (noise_power_w + interference)


def best_rate(s: float, table: McsTable) -> float:
    """Rate of the best MCS whose threshold is <= s; 0 if below the lowest."""
    return table.best_rate(s)
