"""Experiment harness: seeded replications, baselines, persistence.

The three run modes share one epoch loop: ``dms`` plays both traffic classes,
``gbr`` drops the best-effort users, ``be`` drops the guaranteed users and
hands the whole horizon to the best-effort game.  Baseline curves (legacy,
frequency reuse 3) are evaluated on the same epochs, reusing the period the
supervisor picked, which is how the comparison figures are meant to be read.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from . import __version__
from .be_local import BeLocalInput, be_maxmin, volumes_of
from .config import ScenarioConfig
from .errors import ConfigurationError
from .gbr_local import best_response, penalties_for, served_traffic
from .metrics import OverheadParams, overhead_bits, time_utilization_index
from .radio import compute_gains, generate_hex_topology
from .records import CSV_VERSION, RunRecord, write_records_csv
from .scheduling import AbsfPattern, SolverLimits, demands_from_rate_mbps
from .scenario import Instance, Scenario, fading_rng, split_users
from .supervisor import EpochOutcome, run_dms_epochs


def build_instance(config: ScenarioConfig, seed: int) -> Instance:
    topology = generate_hex_topology(
        config.n_bs, config.isd_m, config.area_m,
        config.users_per_bs + config.be_users_per_bs, seed)
    gbr_users, be_users = split_users(topology, config.users_per_bs, config.be_users_per_bs)
    return Instance(topology=topology, channel=config.channel_model(), mcs=config.mcs(),
                    gbr_users_of=gbr_users, be_users_of=be_users)


def hex_colors(topology) -> dict[int, int]:
    """Proper 3-colouring of the hexagonal lattice sites."""
    colors = {}
    for i, (r, c) in enumerate(topology.grid_rc):
        q = c - r // 2
        colors[i] = (q - r) % 3
    for i, (r1, c1) in enumerate(topology.grid_rc):
        for j, (r2, c2) in enumerate(topology.grid_rc):
            if i < j and colors[i] == colors[j] and abs(r1 - r2) <= 1:
                dx = topology.bs_positions[i][0] - topology.bs_positions[j][0]
                dy = topology.bs_positions[i][1] - topology.bs_positions[j][1]
                if (dx * dx + dy * dy) ** 0.5 <= topology.effective_isd * 1.01:
                    raise ConfigurationError("baseline", "grid is not 3-colorable")
    return colors


def baseline_legacy(scenario: Scenario, gbr_horizon: int, be_horizon: int) -> dict:
    """Uncontrolled stations: everybody transmits in every TTI.

    Guaranteed users are scheduled by each station's own heuristic against
    all-active interference over ``gbr_horizon``; best-effort users likewise
    over ``be_horizon``.
    """
    out = {"gbr_served": {}, "gbr_penalties": {}, "per_bs_usage": {},
           "be_volumes": {}, "per_bs_min_volume": {}, "eta_hat": 0.0}
    if scenario.has_gbr_users() and gbr_horizon > 0:
        inputs = scenario.gbr_inputs(gbr_horizon)
        for i, inp in inputs.items():
            patterns = {k: AbsfPattern.all_on(k, gbr_horizon)
                        for k in range(scenario.n_bs) if k != i}
            inp = replace(inp, neighbor_patterns=patterns)
            sol = best_response(inp)
            out["gbr_served"].update(sol.served)
            out["gbr_penalties"].update(sol.penalties)
            out["per_bs_usage"][i] = len(sol.action.ttis())
    if be_horizon > 0 and scenario.be_players():
        caps = {i: be_horizon for i in scenario.be_players()}
        inputs = scenario.be_inputs(be_horizon, caps)
        for i, inp in inputs.items():
            patterns = {k: AbsfPattern.all_on(k, be_horizon)
                        for k in range(scenario.n_bs) if k != i}
            inp = replace(inp, neighbor_patterns=patterns)
            sol = be_maxmin(inp)
            out["be_volumes"].update(sol.per_user_volume)
            out["per_bs_min_volume"][i] = sol.min_volume
        out["eta_hat"] = sum(out["per_bs_min_volume"].values())
    return out


def baseline_reuse3(scenario: Scenario, topology, be_horizon: int) -> dict:
    """Frequency reuse 3 emulated in time: each lattice colour owns every
    third TTI, so only same-colour stations ever interfere."""
    colors = hex_colors(topology)
    out = {"be_volumes": {}, "per_bs_min_volume": {}, "eta_hat": 0.0}
    if be_horizon <= 0 or not scenario.be_players():
        return out
    own_ttis = {i: frozenset(t for t in range(be_horizon) if t % 3 == colors[i])
                for i in range(scenario.n_bs)}
    caps = {i: max(1, len(own_ttis[i])) for i in scenario.be_players()}
    inputs = scenario.be_inputs(be_horizon, caps,
                                allowed_ttis={i: own_ttis[i] for i in scenario.be_players()})
    for i, inp in inputs.items():
        if not own_ttis[i]:
            out["be_volumes"].update({u: 0.0 for u in inp.users})
            out["per_bs_min_volume"][i] = 0.0
            continue
        patterns = {k: AbsfPattern.from_ttis(k, be_horizon, own_ttis[k])
                    for k in range(scenario.n_bs) if k != i}
        sol = be_maxmin(replace(inp, neighbor_patterns=patterns))
        out["be_volumes"].update(sol.per_user_volume)
        out["per_bs_min_volume"][i] = sol.min_volume
    out["eta_hat"] = sum(out["per_bs_min_volume"].values())
    return out


@dataclass
class _SeedRun:
    seed: int
    outcomes: list[EpochOutcome]
    records: list[RunRecord]
    user_rates: list[tuple]  # (seed, scheme, user, kind, rate_mbps)
    trace: dict | None


def _scenario_provider(config: ScenarioConfig, instance: Instance, seed: int, mode: str):
    gains_cache: dict[int, object] = {}
    scenario_limits = SolverLimits(allow_heuristic=True)

    def gains_for(epoch: int):
        key = 0 if config.fading_policy == "static" or config.fading == "none" else epoch
        if key not in gains_cache:
            gains_cache[key] = compute_gains(instance.topology, instance.channel,
                                             fading_rng(seed, key))
        return gains_cache[key]

    rate_models: dict[int, object] = {}

    def provider(epoch: int) -> Scenario:
        key = 0 if config.fading_policy == "static" or config.fading == "none" else epoch
        if key not in rate_models:
            rate_models[key] = instance.rate_model(gains_for(epoch))
        gbr_users = instance.gbr_users_of if mode in ("dms", "gbr") else ()
        be_users = instance.be_users_of if mode in ("dms", "be") else ()
        demands = {}
        if gbr_users:
            rate = config.gbr_rate_at(epoch)
            all_gbr = [u for us in gbr_users for u in us]
            demands = demands_from_rate_mbps(all_gbr, rate, config.W, config.t_slot_s())
        return Scenario(
            n_bs=instance.n_bs, rates=rate_models[key],
            gbr_users_of=gbr_users, demands=demands, be_users_of=be_users,
            alpha=config.alpha, penalty_mode=config.penalty_mode,
            fixed_penalty=config.fixed_penalty, limits=scenario_limits)

    return provider


def _outcome_to_record(config: ScenarioConfig, seed: int, outcome: EpochOutcome,
                       baseline: dict | None) -> RunRecord:
    t_slot = config.t_slot_s()
    period_s = config.W * t_slot
    scenario: Scenario = outcome.scenario

    total_penalty = 0.0
    gbr_tp = 0.0
    util = 0.0
    gbr_patterns = {}
    gamma_rounds = 0
    gamma_converged = True
    gamma_cycle = False
    if outcome.gbr_game is not None:
        g = outcome.gbr_game
        total_penalty = sum(g.penalties[u] for u in sorted(g.penalties))
        gbr_tp = sum(min(g.served[u], scenario.demands.get(u, 0.0))
                     for u in sorted(g.served)) / period_s / 1e6
        usage = g.per_bs_tti_usage()
        if outcome.T > 0 and usage:
            util = time_utilization_index(usage, outcome.T)
        gbr_patterns = {bs: p.to_hex() for bs, p in g.patterns.items()}
        gamma_rounds = g.rounds
        gamma_converged = g.converged
        gamma_cycle = g.cycle_detected

    be_tp = 0.0
    eta = 0.0
    eta_hat = 0.0
    per_bs_eta = {}
    be_patterns = {}
    omega_rounds = 0
    omega_converged = True
    omega_deadline = False
    if outcome.be_game is not None:
        b = outcome.be_game
        be_tp = sum(b.per_user_volume[u] for u in sorted(b.per_user_volume)) / period_s / 1e6
        per_bs_eta = dict(b.per_bs_eta)
        eta = sum(per_bs_eta[i] for i in sorted(per_bs_eta))
        eta_hat = b.eta_hat
        be_patterns = {bs: p.to_hex() for bs, p in b.patterns.items()}
        omega_rounds = b.rounds
        omega_converged = b.converged
        omega_deadline = b.terminated_by_deadline

    n_users = sum(len(us) for us in scenario.gbr_users_of) \
        + sum(len(us) for us in scenario.be_users_of)
    k = max(1, gamma_rounds + omega_rounds)
    ic, ib = overhead_bits(OverheadParams(B=config.B_bits, W=config.W,
                                          n_bs=scenario.n_bs,
                                          n_users=max(1, n_users), k=k), "dms")

    rec = RunRecord(
        seed=seed, epoch=outcome.epoch, T=outcome.T, Z=outcome.Z,
        total_penalty=total_penalty, gbr_throughput_mbps=gbr_tp,
        be_throughput_mbps=be_tp, eta=eta, eta_hat=eta_hat,
        per_bs_eta=per_bs_eta, M=dict(outcome.caps),
        gamma_rounds=gamma_rounds, omega_rounds=omega_rounds,
        gamma_converged=gamma_converged, gamma_cycle_detected=gamma_cycle,
        omega_converged=omega_converged, omega_deadline_hit=omega_deadline,
        gbr_infeasible=outcome.gbr_infeasible, squeeze_probes=outcome.squeeze_probes,
        utilization_index=util, overhead_ic_bits=ic, overhead_ib_bits=ib,
        gbr_patterns=gbr_patterns, be_patterns=be_patterns,
        baseline=config.baseline if baseline is not None else "",
    )
    if baseline is not None:
        if "gbr_served" in baseline and baseline["gbr_served"]:
            rec.baseline_gbr_throughput_mbps = sum(
                min(baseline["gbr_served"][u], scenario.demands.get(u, 0.0))
                for u in sorted(baseline["gbr_served"])) / period_s / 1e6
        if baseline.get("be_volumes"):
            rec.baseline_be_throughput_mbps = sum(
                baseline["be_volumes"][u] for u in sorted(baseline["be_volumes"])) \
                / period_s / 1e6
        rec.baseline_eta_hat = baseline.get("eta_hat", 0.0)
    return rec


def _run_seed(config: ScenarioConfig, seed: int, mode: str, trace: bool) -> _SeedRun:
    instance = build_instance(config, seed)
    provider = _scenario_provider(config, instance, seed, mode)
    n_be_players = sum(1 for us in (instance.be_users_of if mode in ("dms", "be") else ())
                       if us)
    deadline = config.deadline_rounds(max(1, n_be_players))
    outcomes = run_dms_epochs(provider, config.W, config.epochs, deadline=deadline)

    records = []
    rates_rows = []
    trace_data = {"seed": seed, "epochs": []} if trace else None
    for outcome in outcomes:
        baseline = None
        if config.baseline == "legacy":
            baseline = baseline_legacy(outcome.scenario, config.W, outcome.Z)
        elif config.baseline == "reuse3":
            baseline = baseline_reuse3(outcome.scenario, instance.topology, outcome.Z)
        records.append(_outcome_to_record(config, seed, outcome, baseline))
        if trace_data is not None:
            trace_data["epochs"].append(_trace_epoch(outcome))

    final = outcomes[-1]
    t_slot = config.t_slot_s()
    period_s = config.W * t_slot
    scenario = final.scenario
    if final.gbr_game is not None:
        for u in sorted(final.gbr_game.served):
            served = min(final.gbr_game.served[u], scenario.demands.get(u, 0.0))
            rates_rows.append((seed, "dms", u, "gbr", served / period_s / 1e6))
    if final.be_game is not None:
        for u in sorted(final.be_game.per_user_volume):
            rates_rows.append((seed, "dms", u, "be",
                               final.be_game.per_user_volume[u] / period_s / 1e6))
    if config.baseline != "none":
        baseline = (baseline_legacy(scenario, config.W, final.Z)
                    if config.baseline == "legacy"
                    else baseline_reuse3(scenario, instance.topology, final.Z))
        for u in sorted(baseline.get("be_volumes", {})):
            rates_rows.append((seed, config.baseline, u, "be",
                               baseline["be_volumes"][u] / period_s / 1e6))

    return _SeedRun(seed=seed, outcomes=outcomes, records=records,
                    user_rates=rates_rows, trace=trace_data)


def _trace_epoch(outcome: EpochOutcome) -> dict:
    epoch = {"epoch": outcome.epoch, "T": outcome.T, "Z": outcome.Z}
    if outcome.gbr_game is not None:
        epoch["gbr_actions"] = {
            str(bs): sorted([list(p) for p in a.pairs])
            for bs, a in outcome.gbr_game.profile.actions.items()}
        epoch["gbr_costs"] = {str(bs): c for bs, c in outcome.gbr_game.costs.items()}
    if outcome.be_game is not None:
        epoch["be_actions"] = {
            str(bs): sorted([list(p) for p in a.pairs])
            for bs, a in outcome.be_game.profile.actions.items()}
        epoch["per_bs_eta"] = {str(bs): v for bs, v in outcome.be_game.per_bs_eta.items()}
    return epoch


def run_experiment(config: ScenarioConfig, out_dir, mode: str = "dms",
                   trace: bool = False) -> list[RunRecord]:
    """Run every seed, write records.csv, user_rates.csv and summary.json."""
    if mode not in ("dms", "gbr", "be"):
        raise ConfigurationError("mode", f"unknown run mode {mode!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    all_records: list[RunRecord] = []
    all_rates: list[tuple] = []
    traces = []
    for seed in config.seeds:
        run = _run_seed(config, seed, mode, trace)
        all_records.extend(run.records)
        all_rates.extend(run.user_rates)
        if run.trace is not None:
            traces.append(run.trace)

    write_records_csv(out / "records.csv", all_records, f"dms-icic {__version__}")
    with open(out / "user_rates.csv", "w") as fh:
        fh.write("seed,scheme,user,kind,rate_mbps\n")
        for seed, scheme, user, kind, rate in all_rates:
            fh.write(f"{seed},{scheme},{user},{kind},{rate!r}\n")
    summary = _summarize(config, mode, all_records)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    if trace:
        with open(out / "traces.json", "w") as fh:
            json.dump(traces, fh)
    return all_records


def _summarize(config: ScenarioConfig, mode: str, records: list[RunRecord]) -> dict:
    def mean(xs):
        xs = list(xs)
        return sum(xs) / len(xs) if xs else 0.0

    return {
        "mode": mode,
        "config": config.to_dict(),
        "n_records": len(records),
        "mean_gbr_throughput_mbps": mean(r.gbr_throughput_mbps for r in records),
        "mean_be_throughput_mbps": mean(r.be_throughput_mbps for r in records),
        "mean_eta_hat": mean(r.eta_hat for r in records),
        "mean_utilization_index": mean(r.utilization_index for r in records),
        "mean_T": mean(r.T for r in records),
        "gamma_convergence_rate": mean(1.0 if r.gamma_converged else 0.0 for r in records),
        "omega_convergence_rate": mean(1.0 if r.omega_converged else 0.0 for r in records),
        "mean_gamma_rounds": mean(r.gamma_rounds for r in records),
        "mean_omega_rounds": mean(r.omega_rounds for r in records),
        "infeasible_epochs": sum(1 for r in records if r.gbr_infeasible),
    }
