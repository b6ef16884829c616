"""Experiment configuration: strict parsing of the JSON config file.

Unknown keys are rejected so a typo cannot silently change an experiment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigurationError
from .radio import ChannelModel, McsTable, default_mcs_table

_VALID_BASELINES = ("none", "legacy", "reuse3")
_VALID_FADING = ("none", "rayleigh")
_VALID_FADING_POLICY = ("per_epoch", "static")


@dataclass
class ScenarioConfig:
    n_bs: int = 7
    users_per_bs: int = 10
    isd_m: float = 200.0
    area_m: tuple[float, float] = (300.0, 500.0)
    W: int = 70
    T_slot_ms: float = 1.0
    gbr_rate_mbps: float = 4.0
    be_users_per_bs: int = 0
    alpha: float = 1000.0
    penalty_mode: str = "residual"          # "residual" or "fixed"
    fixed_penalty: float = 0.1
    mcs_table: Any = None                   # None | [[sinr_db, rate_bits], ...] | path
    pathloss_intercept_db: float = 128.1
    pathloss_slope_db_per_decade: float = 37.6
    fading: str = "rayleigh"
    fading_policy: str = "per_epoch"
    noise_power_w: float = 1.085e-14
    tx_power_w: float = 1.0
    min_distance_m: float = 10.0
    B_bits: int = 64
    seeds: tuple[int, ...] = (1,)
    epochs: int = 1
    demand_schedule: tuple[tuple[int, float], ...] = ()
    deadline_policy: tuple[str, int | None] = ("n_squared", None)
    baseline: str = "none"

    def __post_init__(self):
        _positive_int(self, "n_bs")
        _nonneg_int(self, "users_per_bs")
        _nonneg_int(self, "be_users_per_bs")
        _positive(self, "isd_m")
        _positive(self, "T_slot_ms")
        _positive(self, "alpha")
        _positive(self, "tx_power_w")
        _positive(self, "noise_power_w")
        _positive(self, "min_distance_m")
        _positive_int(self, "W")
        _positive_int(self, "epochs")
        _positive_int(self, "B_bits")
        if self.gbr_rate_mbps < 0:
            raise ConfigurationError("gbr_rate_mbps", "must be >= 0")
        if len(self.area_m) != 2 or any(a <= 0 for a in self.area_m):
            raise ConfigurationError("area_m", "expects [width_m, height_m], both > 0")
        if self.penalty_mode not in ("residual", "fixed"):
            raise ConfigurationError("penalty_mode", "expects 'residual' or {'fixed': value}")
        if self.fading not in _VALID_FADING:
            raise ConfigurationError("fading", f"expects one of {_VALID_FADING}")
        if self.fading_policy not in _VALID_FADING_POLICY:
            raise ConfigurationError("fading_policy", f"expects one of {_VALID_FADING_POLICY}")
        if self.baseline not in _VALID_BASELINES:
            raise ConfigurationError("baseline", f"expects one of {_VALID_BASELINES}")
        if not self.seeds:
            raise ConfigurationError("seeds", "needs at least one seed")
        last = -1
        for entry in self.demand_schedule:
            epoch, rate = entry
            if epoch <= last:
                raise ConfigurationError("demand_schedule", "epochs must be strictly increasing")
            if rate < 0:
                raise ConfigurationError("demand_schedule", "rates must be >= 0")
            last = epoch
        kind, value = self.deadline_policy
        if kind not in ("n", "n_squared", "explicit"):
            raise ConfigurationError("deadline_policy",
                                     "expects 'n', 'n_squared' or {'explicit': rounds}")
        if kind == "explicit" and (value is None or value < 1):
            raise ConfigurationError("deadline_policy", "explicit deadline must be >= 1 round")

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        known = set(cls.__dataclass_fields__)
        data = dict(raw)
        for key in data:
            if key not in known:
                raise ConfigurationError(key, "unknown configuration field")
        if "area_m" in data:
            data["area_m"] = tuple(data["area_m"])
        if "seeds" in data:
            data["seeds"] = tuple(int(s) for s in data["seeds"])
        if "demand_schedule" in data:
            data["demand_schedule"] = tuple((int(e), float(r)) for e, r in data["demand_schedule"])
        if "penalty_mode" in data and isinstance(data["penalty_mode"], dict):
            mode = data["penalty_mode"]
            if list(mode) != ["fixed"]:
                raise ConfigurationError("penalty_mode", "expects 'residual' or {'fixed': value}")
            data["penalty_mode"] = "fixed"
            data["fixed_penalty"] = float(mode["fixed"])
        if "deadline_policy" in data:
            pol = data["deadline_policy"]
            if isinstance(pol, str):
                data["deadline_policy"] = (pol, None)
            elif isinstance(pol, dict) and list(pol) == ["explicit"]:
                data["deadline_policy"] = ("explicit", int(pol["explicit"]))
            else:
                raise ConfigurationError("deadline_policy",
                                         "expects 'n', 'n_squared' or {'explicit': rounds}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError("config", str(exc)) from exc

    @classmethod
    def from_json_file(cls, path) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError("config", f"file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigurationError("config", f"invalid JSON: {exc}")
        if not isinstance(raw, dict):
            raise ConfigurationError("config", "top level must be a JSON object")
        return cls.from_dict(raw)

    def channel_model(self) -> ChannelModel:
        return ChannelModel(
            pathloss_intercept_db=self.pathloss_intercept_db,
            pathloss_slope_db_per_decade=self.pathloss_slope_db_per_decade,
            fading=self.fading, noise_power_w=self.noise_power_w,
            tx_power_w=self.tx_power_w, min_distance_m=self.min_distance_m)

    def mcs(self) -> McsTable:
        if self.mcs_table is None:
            return default_mcs_table(t_slot_s=self.T_slot_ms * 1e-3)
        if isinstance(self.mcs_table, str):
            path = Path(self.mcs_table)
            if not path.exists():
                raise ConfigurationError("mcs_table", f"file not found: {path}")
            with open(path) as fh:
                entries = json.load(fh)
            return McsTable.from_db_entries(entries)
        return McsTable.from_db_entries(self.mcs_table)

    def t_slot_s(self) -> float:
        return self.T_slot_ms * 1e-3

    def gbr_rate_at(self, epoch: int) -> float:
        rate = self.gbr_rate_mbps
        for e, r in self.demand_schedule:
            if epoch >= e:
                rate = r
        return rate

    def deadline_rounds(self, n_players: int) -> int:
        kind, value = self.deadline_policy
        if kind == "n":
            return max(1, n_players)
        if kind == "n_squared":
            return max(1, n_players * n_players)
        return value

    def to_dict(self) -> dict:
        return {
            "n_bs": self.n_bs, "users_per_bs": self.users_per_bs, "isd_m": self.isd_m,
            "area_m": list(self.area_m), "W": self.W, "T_slot_ms": self.T_slot_ms,
            "gbr_rate_mbps": self.gbr_rate_mbps, "be_users_per_bs": self.be_users_per_bs,
            "alpha": self.alpha,
            "penalty_mode": self.penalty_mode if self.penalty_mode == "residual"
            else {"fixed": self.fixed_penalty},
            "mcs_table": self.mcs_table,
            "pathloss_intercept_db": self.pathloss_intercept_db,
            "pathloss_slope_db_per_decade": self.pathloss_slope_db_per_decade,
            "fading": self.fading, "fading_policy": self.fading_policy,
            "noise_power_w": self.noise_power_w, "tx_power_w": self.tx_power_w,
            "min_distance_m": self.min_distance_m, "B_bits": self.B_bits,
            "seeds": list(self.seeds), "epochs": self.epochs,
            "demand_schedule": [list(x) for x in self.demand_schedule],
            "deadline_policy": self.deadline_policy[0] if self.deadline_policy[1] is None
            else {"explicit": self.deadline_policy[1]},
            "baseline": self.baseline,
        }


def _positive(cfg, name):
    if getattr(cfg, name) <= 0:
        raise ConfigurationError(name, "must be > 0")


def _positive_int(cfg, name):
    v = getattr(cfg, name)
    if not isinstance(v, int) or v <= 0:
        raise ConfigurationError(name, "must be a positive integer")


def _nonneg_int(cfg, name):
    v = getattr(cfg, name)
    if not isinstance(v, int) or v < 0:
        raise ConfigurationError(name, "must be a non-negative integer")
