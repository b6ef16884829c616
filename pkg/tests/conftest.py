import numpy as np
import pytest

from dms import ChannelModel, TableRateModel, default_mcs_table, generate_hex_topology, compute_gains
from dms.gbr_local import GbrLocalInput
from dms.be_local import BeLocalInput
from dms.scenario import Instance, Scenario, split_users
from dms.scheduling import SolverLimits


def matrix_rates(R):
    """Rate model driven by an explicit (user x TTI) matrix, single station."""
    R = np.asarray(R, dtype=float)
    return TableRateModel(lambda u, t, fs: float(R[u, t]), association=[0] * R.shape[0])


def gbr_input(R, demands, alpha=1000.0, mode="residual", fixed_penalty=0.1, allowed=None):
    R = np.asarray(R, dtype=float)
    return GbrLocalInput(owner=0, users=tuple(range(R.shape[0])),
                         demands=dict(enumerate(demands)), neighbor_patterns={},
                         horizon=R.shape[1], alpha=alpha, rates=matrix_rates(R),
                         penalty_mode=mode, fixed_penalty=fixed_penalty,
                         allowed_ttis=allowed)


def be_input(R, tti_bound, allowed=None):
    R = np.asarray(R, dtype=float)
    return BeLocalInput(owner=0, users=tuple(range(R.shape[0])), neighbor_patterns={},
                        horizon=R.shape[1], tti_bound=tti_bound, rates=matrix_rates(R),
                        allowed_ttis=allowed)


def cyclic_rates(alone=5.55, with_next=5.11, with_prev=2.73, with_all=2.51, n=3):
    """Three stations, one user each; a user's rate depends on which of the
    other stations share its TTI, with the cyclic structure used by the
    oscillation regression scenario."""
    def lookup(user, tti, interferers):
        if not interferers:
            return alone
        nxt = (user + 1) % n
        prv = (user + 2) % n
        if interferers == frozenset({nxt}):
            return with_next
        if interferers == frozenset({prv}):
            return with_prev
        return with_all

    return TableRateModel(lookup, association=list(range(n)))


def oscillation_inputs(horizon=2, demand=5.0, alpha=1000.0, fixed_penalty=0.1):
    rates = cyclic_rates()
    return {
        i: GbrLocalInput(owner=i, users=(i,), demands={i: demand}, neighbor_patterns={},
                         horizon=horizon, alpha=alpha, rates=rates,
                         penalty_mode="fixed", fixed_penalty=fixed_penalty)
        for i in range(3)
    }


def tiny_instance(seed, n_bs=3, gbr_per_bs=2, be_per_bs=2, isd=120.0, area=(260.0, 260.0)):
    topo = generate_hex_topology(n_bs, isd, area, gbr_per_bs + be_per_bs, seed=seed)
    chan = ChannelModel(fading="none")
    inst = Instance(topo, chan, default_mcs_table(), *split_users(topo, gbr_per_bs, be_per_bs))
    gains = compute_gains(topo, chan, seed)
    return inst, gains
