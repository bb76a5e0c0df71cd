"""Artifact emission: delimited tables, config echoes, and figures.

Every table starts with ``# key: value`` comment lines carrying the tool
version, the configuration fingerprint, and the master seed, so any number
in any output can be traced back to a rerunnable configuration. Floats are
written with six significant digits; seeds and hashes keep full precision.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .core import _json_default  # noqa: E402


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if np.isnan(v):
            return "nan"
        return f"{v:.6g}"
    return str(value)


def write_csv(path, rows, provenance: dict) -> Path:
    """Write dict rows with a commented provenance header."""
    path = Path(path)
    rows = list(rows)
    if not rows:
        raise ValueError("refusing to write an empty table")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for key, value in provenance.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        header = list(rows[0].keys())
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in header])
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def read_csv_body(path) -> str:
    """Everything after the comment header, for determinism comparisons."""
    lines = Path(path).read_text().splitlines(keepends=True)
    return "".join(line for line in lines if not line.startswith("#"))


# --- figures ----------------------------------------------------------------


def fig_heatmap(grid, path, value: str = "diff") -> Path:
    """Render one surface of a PowerGrid as an annotated heatmap."""
    if value == "diff":
        mat = grid.power_a - grid.power_b
        title = f"power({grid.label_a}) - power({grid.label_b})"
    elif value in grid.extra:
        mat = grid.extra[value]
        title = value
    else:
        raise ValueError(f"nothing named {value!r} on this grid")
    fig, ax = plt.subplots(figsize=(1.1 * len(grid.p_grid) + 2, 0.8 * len(grid.h0_grid) + 2))
    im = ax.imshow(mat, origin="lower", aspect="auto", cmap="RdBu_r")
    ax.set_xticks(range(len(grid.p_grid)), [str(int(p)) for p in grid.p_grid])
    ax.set_yticks(range(len(grid.h0_grid)), [f"{h:g}" for h in grid.h0_grid])
    ax.set_xlabel("number of arms p")
    ax.set_ylabel("signal strength h0")
    ax.set_title(title)
    for i in range(len(grid.h0_grid)):
        for j in range(len(grid.p_grid)):
            if np.isfinite(mat[i, j]):
                ax.text(j, i, f"{mat[i, j]:.2f}", ha="center", va="center", fontsize=7)
    fig.colorbar(im, ax=ax, shrink=0.9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def fig_curves(rows, x: str, y: str, group, path, ylabel: str = "power",
               se: str | None = "se") -> Path:
    """Line plot of y against x, one line per distinct group key."""
    rows = list(rows)
    group_keys = group if isinstance(group, (list, tuple)) else [group]
    labels = sorted({tuple(r[g] for g in group_keys) for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for lab in labels:
        pts = [r for r in rows if tuple(r[g] for g in group_keys) == lab]
        pts.sort(key=lambda r: r[x])
        xs = [r[x] for r in pts]
        ys = [r[y] for r in pts]
        name = ", ".join(f"{g}={v}" for g, v in zip(group_keys, lab))
        if se and se in pts[0]:
            ax.errorbar(xs, ys, yerr=[2 * r[se] for r in pts], marker="o",
                        capsize=3, label=name)
        else:
            ax.plot(xs, ys, marker="o", label=name)
    ax.set_xlabel(x)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def fig_oracle(result, path) -> Path:
    """Power against the signal arm's weight, with the maximizer marked."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(result.q1_grid, result.power_grid, yerr=2 * result.se_grid,
                lw=1, elinewidth=0.5, color="tab:blue")
    ax.axvline(result.q1_star, color="tab:red", ls="--",
               label=f"q1* = {result.q1_star:.3f}")
    ax.set_xlabel("signal arm weight q1")
    ax.set_ylabel("power")
    if result.flat:
        ax.set_title("profile flat to MC error")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
