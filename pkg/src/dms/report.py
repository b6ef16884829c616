"""Figure and summary rendering from a finished run directory.

Reads records.csv / user_rates.csv produced by the harness and writes PNG
figures plus a delimited per-epoch summary next to them.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .errors import ConfigurationError
from .metrics import rate_cdf
from .records import read_records_csv


def _by_epoch(rows, column):
    grouped = defaultdict(list)
    for row in rows:
        grouped[int(row["epoch"])].append(float(row[column]))
    epochs = sorted(grouped)
    return epochs, [sum(grouped[e]) / len(grouped[e]) for e in epochs]


def render_report(run_dir, out_dir=None) -> list[Path]:
    run_dir = Path(run_dir)
    out = Path(out_dir) if out_dir is not None else run_dir
    out.mkdir(parents=True, exist_ok=True)
    records_path = run_dir / "records.csv"
    if not records_path.exists():
        raise ConfigurationError("run", f"no records.csv under {run_dir}")
    rows = read_records_csv(records_path)
    written: list[Path] = []

    # throughput timeline
    fig, ax = plt.subplots(figsize=(7, 4))
    epochs, gbr = _by_epoch(rows, "gbr_throughput_mbps")
    _, be = _by_epoch(rows, "be_throughput_mbps")
    ax.plot(epochs, gbr, marker="o", label="GBR (DMS)")
    ax.plot(epochs, be, marker="s", label="BE (DMS)")
    if any(r["baseline_be_throughput_mbps"] for r in rows):
        base_rows = [r for r in rows if r["baseline_be_throughput_mbps"]]
        label = f"BE ({base_rows[0]['baseline']})"
        eb, vb = _by_epoch(base_rows, "baseline_be_throughput_mbps")
        ax.plot(eb, vb, marker="^", linestyle="--", label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel("throughput [Mbps]")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = out / "fig_throughput.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    # time-utilization index timeline
    fig, ax = plt.subplots(figsize=(7, 4))
    epochs, util = _by_epoch(rows, "utilization_index")
    ax.plot(epochs, util, marker="o", color="tab:green")
    n_bs = len(rows[0]["gbr_patterns"].split(";")) if rows and rows[0]["gbr_patterns"] else 0
    if n_bs:
        ax.axhline(1.0 / n_bs, color="gray", linestyle=":", label="lower bound 1/N")
        ax.legend()
    ax.set_xlabel("epoch")
    ax.set_ylabel("time-utilization index")
    ax.set_ylim(0, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = out / "fig_utilization.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    # convergence rounds CDF
    fig, ax = plt.subplots(figsize=(7, 4))
    for col, label in (("gamma_rounds", "GBR game"), ("omega_rounds", "BE game")):
        values = [int(r[col]) for r in rows if int(r[col]) > 0]
        if values:
            cdf = rate_cdf(values)
            ax.step([v for v, _ in cdf], [p for _, p in cdf], where="post", label=label)
    ax.set_xlabel("rounds to finish")
    ax.set_ylabel("CDF")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = out / "fig_convergence_cdf.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    # user-rate CDF
    rates_path = run_dir / "user_rates.csv"
    if rates_path.exists():
        with open(rates_path) as fh:
            rate_rows = list(csv.DictReader(fh))
        by_scheme = defaultdict(list)
        for r in rate_rows:
            if r["kind"] == "be":
                by_scheme[r["scheme"]].append(float(r["rate_mbps"]))
        if by_scheme:
            fig, ax = plt.subplots(figsize=(7, 4))
            for scheme in sorted(by_scheme):
                cdf = rate_cdf(by_scheme[scheme])
                ax.step([v for v, _ in cdf], [p for _, p in cdf], where="post", label=scheme)
            ax.set_xlabel("average user rate [Mbps]")
            ax.set_ylabel("CDF")
            ax.legend()
            ax.grid(True, alpha=0.3)
            fig.tight_layout()
            path = out / "fig_user_rate_cdf.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)

    # delimited per-epoch summary alongside the figures
    path = out / "report_summary.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_T", "mean_gbr_throughput_mbps",
                         "mean_be_throughput_mbps", "mean_eta_hat",
                         "mean_utilization_index"])
        epochs, t_mean = _by_epoch(rows, "T")
        _, gbr = _by_epoch(rows, "gbr_throughput_mbps")
        _, be = _by_epoch(rows, "be_throughput_mbps")
        _, eh = _by_epoch(rows, "eta_hat")
        _, util = _by_epoch(rows, "utilization_index")
        for j, e in enumerate(epochs):
            writer.writerow([e, t_mean[j], gbr[j], be[j], eh[j], util[j]])
    written.append(path)
    return written
