"""Output files for a simulation run: trace, monthly bills, summary, plot data."""
from __future__ import annotations

import os
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from .microgrid import MonthlyBill
from .simulation import SimulationTrace

__all__ = [
    "OUTPUT_FILES",
    "SUMMARY_LABELS",
    "summary_rows",
    "format_summary",
    "plot_frame",
    "write_outputs",
    "render_figures",
]

OUTPUT_FILES = {
    "trace": "trace.csv",
    "bills": "monthly_bills.csv",
    "summary": "summary.csv",
    "plot": "plot_data.csv",
}

SUMMARY_LABELS = ["NCDC", "OPDC", "Energy Cost", "BESS loss", "Total Cost", "Total BESS cycles", "Y at year end"]


def summary_rows(trace: SimulationTrace) -> Dict[str, float]:
    total = trace.yearly
    return {
        "NCDC": total.ncdc,
        "OPDC": total.opdc,
        "Energy Cost": total.energy_cost,
        "BESS loss": total.bess_loss_cost,
        "Total Cost": total.total,
        "Total BESS cycles": total.bess_cycles,
        "Y at year end": trace.final_y,
    }


def format_summary(columns: Dict[str, Dict[str, float]]) -> str:
    """Text table with one column per run, rows in the fixed label order."""
    names = list(columns)
    width = max(len(lab) for lab in SUMMARY_LABELS) + 2
    col_w = max(14, *(len(n) + 2 for n in names))
    lines = ["Costs".ljust(width) + "".join(n.rjust(col_w) for n in names)]
    for lab in SUMMARY_LABELS:
        cells = []
        for n in names:
            v = columns[n][lab]
            if lab == "Total BESS cycles":
                cells.append(f"{v:.1f}")
            elif lab == "Y at year end":
                cells.append(f"{100 * v:.1f}%")
            else:
                cells.append(f"${v:,.0f}")
        lines.append(lab.ljust(width) + "".join(c.rjust(col_w) for c in cells))
    return "\n".join(lines)


def _bills_frame(bills: Sequence[MonthlyBill]) -> pd.DataFrame:
    return pd.DataFrame([
        {"month": b.month, "ncdc": b.ncdc, "opdc": b.opdc, "energy_cost": b.energy_cost,
         "bess_loss_cost": b.bess_loss_cost, "total": b.total, "bess_cycles": b.bess_cycles}
        for b in bills
    ])


def plot_frame(trace: SimulationTrace) -> pd.DataFrame:
    """Series for the Y, h and |dZ| panels; Z = |alpha - Y| on the exact count/t."""
    f = trace.frame
    alpha = trace.config.alpha
    t = f["t"].to_numpy()
    y = np.where(t > 0, f["count"].to_numpy() / np.maximum(t, 1), 0.0)
    z = np.abs(alpha - y)
    dz = np.abs(np.diff(z, prepend=np.abs(alpha)))
    return pd.DataFrame({
        "timestamp": f["timestamp"], "t": t, "y": y, "alpha": alpha,
        "h1": f["h1"], "h2": f["h2"], "abs_dz": dz,
    })


def _write_csv(frame: pd.DataFrame, path: str) -> None:
    frame.to_csv(path, index=False, lineterminator="\n", date_format="%Y-%m-%dT%H:%M:%S")


def write_outputs(trace: SimulationTrace, out_dir: str, figures: bool = False) -> List[str]:
    """Write the four CSV files (and optionally PNG figures); returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {k: os.path.join(out_dir, v) for k, v in OUTPUT_FILES.items()}
    _write_csv(trace.frame, paths["trace"])
    _write_csv(_bills_frame(trace.bills), paths["bills"])
    rows = summary_rows(trace)
    _write_csv(pd.DataFrame({"label": list(rows), "value": list(rows.values())}), paths["summary"])
    _write_csv(plot_frame(trace), paths["plot"])
    written = list(paths.values())
    if figures:
        written += render_figures({trace.config.test_case: trace}, out_dir)
    return written


def render_figures(traces: Dict[str, SimulationTrace], out_dir: str) -> List[str]:
    """Y, h and |dZ| panels for one or more runs, saved as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    frames = {name: plot_frame(tr) for name, tr in traces.items()}
    alpha = next(iter(traces.values())).config.alpha
    paths = []

    fig, ax = plt.subplots(figsize=(8, 3.5))
    for name, pf in frames.items():
        ax.plot(pf["timestamp"], pf["y"], lw=1, label=name)
    ax.axhline(alpha, color="k", ls="--", lw=1, label="alpha")
    ax.set_ylabel("Y")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    paths.append(os.path.join(out_dir, "fig_y.png"))
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 3.5))
    for name, pf in frames.items():
        ax.plot(pf["timestamp"], pf["h1"], lw=1, label=f"{name} h1")
        if not np.allclose(pf["h1"], pf["h2"]):
            ax.plot(pf["timestamp"], pf["h2"], lw=1, ls=":", label=f"{name} h2")
    ax.set_ylabel("h")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    paths.append(os.path.join(out_dir, "fig_h.png"))
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 3.5))
    for name, pf in frames.items():
        ax.semilogy(pf["timestamp"], np.maximum(pf["abs_dz"], 1e-12), lw=0.5, label=name)
    ax.set_ylabel("|Z(t+1) - Z(t)|")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    paths.append(os.path.join(out_dir, "fig_dz.png"))
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)
    return paths
