"""Scenario assembly: who plays, with which users, demands and rates.

A ``Scenario`` is everything the games and oracles need for one epoch: the
rate model for the current channel realization, the guaranteed-traffic users
with their demands, and the best-effort users.  The harness builds one per
epoch (fading is redrawn between epochs unless the policy says otherwise).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .be_local import BeLocalInput
from .errors import ConfigurationError
from .gbr_local import GbrLocalInput
from .radio import ChannelModel, LinkGainMatrix, McsTable, Topology, compute_gains
from .rates import PhysicalRateModel, RateModel
from .scheduling import SolverLimits


@dataclass(frozen=True)
class Scenario:
    n_bs: int
    rates: RateModel
    gbr_users_of: tuple[tuple[int, ...], ...]
    demands: Mapping[int, float]
    be_users_of: tuple[tuple[int, ...], ...] = ()
    alpha: float = 1000.0
    penalty_mode: str = "residual"
    fixed_penalty: float = 0.1
    limits: SolverLimits = field(default_factory=SolverLimits)

    def __post_init__(self):
        if len(self.gbr_users_of) not in (0, self.n_bs):
            raise ConfigurationError("gbr_users_of", "needs one user tuple per station")
        if len(self.be_users_of) not in (0, self.n_bs):
            raise ConfigurationError("be_users_of", "needs one user tuple per station")

    def has_gbr_users(self) -> bool:
        return any(self.gbr_users_of) and any(us for us in self.gbr_users_of)

    def be_players(self) -> list[int]:
        return [i for i, us in enumerate(self.be_users_of) if us]

    def gbr_inputs(self, horizon: int,
                   allowed_ttis: Mapping[int, frozenset] | None = None) -> dict[int, GbrLocalInput]:
        inputs = {}
        for i in range(self.n_bs):
            users = self.gbr_users_of[i] if self.gbr_users_of else ()
            inputs[i] = GbrLocalInput(
                owner=i, users=users,
                demands={u: self.demands.get(u, 0.0) for u in users},
                neighbor_patterns={}, horizon=horizon, alpha=self.alpha,
                rates=self.rates, penalty_mode=self.penalty_mode,
                fixed_penalty=self.fixed_penalty, limits=self.limits,
                allowed_ttis=allowed_ttis.get(i) if allowed_ttis else None)
        return inputs

    def be_inputs(self, horizon: int, caps: Mapping[int, int],
                  allowed_ttis: Mapping[int, frozenset] | None = None) -> dict[int, BeLocalInput]:
        inputs = {}
        for i in self.be_players():
            inputs[i] = BeLocalInput(
                owner=i, users=self.be_users_of[i], neighbor_patterns={},
                horizon=horizon, tti_bound=min(caps[i], horizon), rates=self.rates,
                limits=self.limits,
                allowed_ttis=allowed_ttis.get(i) if allowed_ttis else None)
        return inputs


@dataclass(frozen=True)
class Instance:
    """One seeded deployment: geometry plus the user split, before fading."""

    topology: Topology
    channel: ChannelModel
    mcs: McsTable
    gbr_users_of: tuple[tuple[int, ...], ...]
    be_users_of: tuple[tuple[int, ...], ...]

    @property
    def n_bs(self) -> int:
        return self.topology.n_bs

    def rate_model(self, gains: LinkGainMatrix) -> PhysicalRateModel:
        return PhysicalRateModel(gains, self.topology.association, self.mcs,
                                 self.channel.tx_power_w, self.channel.noise_power_w)

    def scenario(self, gains: LinkGainMatrix, demands: Mapping[int, float],
                 alpha: float = 1000.0, penalty_mode: str = "residual",
                 fixed_penalty: float = 0.1,
                 limits: SolverLimits | None = None) -> Scenario:
        return Scenario(
            n_bs=self.n_bs, rates=self.rate_model(gains),
            gbr_users_of=self.gbr_users_of, demands=dict(demands),
            be_users_of=self.be_users_of, alpha=alpha, penalty_mode=penalty_mode,
            fixed_penalty=fixed_penalty,
            limits=limits if limits is not None else SolverLimits(allow_heuristic=True))


def split_users(topology: Topology, n_gbr_per_bs: int, n_be_per_bs: int):
    """First n_gbr users of each cell are guaranteed-traffic, the rest
    best-effort; user ids follow the topology's generation order."""
    gbr, be = [], []
    for i in range(topology.n_bs):
        users = topology.users_of(i)
        if len(users) != n_gbr_per_bs + n_be_per_bs:
            raise ConfigurationError("users_per_bs", "topology user counts do not match the split")
        gbr.append(tuple(users[:n_gbr_per_bs]))
        be.append(tuple(users[n_gbr_per_bs:]))
    return tuple(gbr), tuple(be)


def fading_rng(seed: int, epoch: int) -> np.random.Generator:
    """Isolated fading stream per (replication seed, epoch)."""
    return np.random.default_rng(np.random.SeedSequence((seed, 0xFAD, epoch)))


def save_topology(path, topology: Topology) -> None:
    with open(path, "w") as fh:
        json.dump({"format": "dms-topology-v1", **topology.to_dict()}, fh, indent=1)


def load_topology(path) -> Topology:
    with open(path) as fh:
        data = json.load(fh)
    if data.get("format") != "dms-topology-v1":
        raise ConfigurationError("topology", "unrecognised topology file format")
    data.pop("format")
    return Topology.from_dict(data)


def save_gains(path, gains: LinkGainMatrix) -> None:
    with open(path, "w") as fh:
        json.dump({"format": "dms-gains-v1", **gains.to_dict()}, fh)


def load_gains(path) -> LinkGainMatrix:
    with open(path) as fh:
        data = json.load(fh)
    if data.get("format") != "dms-gains-v1":
        raise ConfigurationError("gains", "unrecognised gain file format")
    return LinkGainMatrix.from_dict(data)
