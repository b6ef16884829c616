"""Per-epoch run records and their CSV persistence.

The CSV starts with one version header line; everything after it is a pure
function of the configuration and seeds, so identical runs produce identical
bytes below the header.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

CSV_VERSION = "dms-records-v1"

CSV_COLUMNS = [
    "seed", "epoch", "T", "Z", "total_penalty",
    "gbr_throughput_mbps", "be_throughput_mbps",
    "eta", "eta_hat", "per_bs_eta", "M",
    "gamma_rounds", "omega_rounds",
    "gamma_converged", "gamma_cycle_detected",
    "omega_converged", "omega_deadline_hit",
    "gbr_infeasible", "squeeze_probes", "utilization_index",
    "overhead_ic_bits", "overhead_ib_bits",
    "gbr_patterns", "be_patterns",
    "baseline", "baseline_gbr_throughput_mbps", "baseline_be_throughput_mbps",
    "baseline_eta_hat",
]


@dataclass
class RunRecord:
    seed: int
    epoch: int
    T: int
    Z: int
    total_penalty: float
    gbr_throughput_mbps: float
    be_throughput_mbps: float
    eta: float
    eta_hat: float
    per_bs_eta: dict[int, float] = field(default_factory=dict)
    M: dict[int, int] = field(default_factory=dict)
    gamma_rounds: int = 0
    omega_rounds: int = 0
    gamma_converged: bool = False
    gamma_cycle_detected: bool = False
    omega_converged: bool = False
    omega_deadline_hit: bool = False
    gbr_infeasible: bool = False
    squeeze_probes: int = 0
    utilization_index: float = 0.0
    overhead_ic_bits: int = 0
    overhead_ib_bits: int = 0
    gbr_patterns: dict[int, str] = field(default_factory=dict)
    be_patterns: dict[int, str] = field(default_factory=dict)
    baseline: str = ""
    baseline_gbr_throughput_mbps: float | None = None
    baseline_be_throughput_mbps: float | None = None
    baseline_eta_hat: float | None = None

    def __post_init__(self):
        if self.Z != 0 and self.T + self.Z <= 0:
            raise ValueError("inconsistent T/Z")

    def to_row(self) -> list[str]:
        def join_map(m):
            return ";".join(f"{k}:{m[k]!r}" if isinstance(m[k], float) else f"{k}:{m[k]}"
                            for k in sorted(m))

        def opt(x):
            return "" if x is None else repr(float(x))

        return [
            str(self.seed), str(self.epoch), str(self.T), str(self.Z),
            repr(float(self.total_penalty)),
            repr(float(self.gbr_throughput_mbps)), repr(float(self.be_throughput_mbps)),
            repr(float(self.eta)), repr(float(self.eta_hat)),
            join_map(self.per_bs_eta), join_map(self.M),
            str(self.gamma_rounds), str(self.omega_rounds),
            str(int(self.gamma_converged)), str(int(self.gamma_cycle_detected)),
            str(int(self.omega_converged)), str(int(self.omega_deadline_hit)),
            str(int(self.gbr_infeasible)), str(self.squeeze_probes),
            repr(float(self.utilization_index)),
            str(self.overhead_ic_bits), str(self.overhead_ib_bits),
            join_map(self.gbr_patterns), join_map(self.be_patterns),
            self.baseline, opt(self.baseline_gbr_throughput_mbps),
            opt(self.baseline_be_throughput_mbps), opt(self.baseline_eta_hat),
        ]


def write_records_csv(path, records: list[RunRecord], version: str) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {version} {CSV_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(rec.to_row())


def read_records_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError("missing version header line")
        reader = csv.DictReader(fh)
        return list(reader)
