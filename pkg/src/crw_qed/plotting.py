"""Figure rendering (files only, Agg backend) and stand-alone plot scripts."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLES = ["-", "-.", "--", ":"]
COLORS = ["tab:blue", "tab:red", "black", "tab:green"]


def _finish(fig, ax, path) -> Path:
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_reflection(series: Mapping[str, tuple[np.ndarray, np.ndarray]], path, title: str = "") -> Path:
    """|r_k|^2 versus k, one line per labelled series."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, (label, (k, R)) in enumerate(series.items()):
        ax.plot(k, R, STYLES[i % 4], color=COLORS[i % 4], label=label)
    ax.set_xlabel(r"$k$")
    ax.set_ylabel(r"$|r_k|^2$")
    ax.set_xlim(0, np.pi)
    ax.set_ylim(0, 1.05)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)
    return _finish(fig, ax, path)


def plot_decay_panels(panels: Sequence[tuple[str, np.ndarray, np.ndarray]], path) -> Path:
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4), squeeze=False)
    for ax, (label, k, gamma) in zip(axes[0], panels):
        ax.plot(k, gamma, color="tab:blue")
        ax.set_xlabel(r"$k$")
        ax.set_ylabel(r"$\Gamma_k$")
        ax.set_title(label)
        ax.set_xlim(0, np.pi)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_trajectory(t: np.ndarray, columns: Mapping[str, np.ndarray], path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, (name, y) in enumerate(columns.items()):
        ax.plot(t, y, STYLES[i % 4], label=name)
    ax.set_xlabel(r"$t$")
    ax.set_ylabel("probability")
    ax.legend(fontsize=7)
    return _finish(fig, ax, path)


def plot_dispersion(k: np.ndarray, omega: np.ndarray, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(k, omega)
    ax.set_xlabel(r"$k$")
    ax.set_ylabel(r"$\Omega_k$")
    return _finish(fig, ax, path)


_SCRIPT = '''\
"""Re-plot {png} from {csv_list}."""
import csv
import matplotlib.pyplot as plt

def read(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return rows

{body}
plt.tight_layout()
plt.savefig("{png}", dpi=150)
'''


def write_plot_script(path, png: str, csv_files: Sequence[str], x: str, y: str,
                      group: str | None = None) -> Path:
    """Plain-text matplotlib script that rebuilds a figure from its CSV files.

    ``group`` names a column that splits one CSV into several series.
    """
    lines = [f"fig, axes = plt.subplots(1, {len(csv_files)}, figsize=({5 * len(csv_files)}, 4), squeeze=False)"]
    for i, name in enumerate(csv_files):
        lines.append(f"ax = axes[0][{i}]")
        lines.append(f"rows = read({name!r})")
        if group:
            lines.append(f"for label in dict.fromkeys(r[{group!r}] for r in rows):")
            lines.append(f"    sel = [r for r in rows if r[{group!r}] == label]")
            lines.append(f"    ax.plot([float(r[{x!r}]) for r in sel], [float(r[{y!r}]) for r in sel], label=label)")
            lines.append("ax.legend(fontsize=7)")
        else:
            lines.append(f"ax.plot([float(r[{x!r}]) for r in rows], [float(r[{y!r}]) for r in rows])")
        lines.append(f"ax.set_xlabel({x!r}); ax.set_ylabel({y!r}); ax.set_title({name!r})")
    text = _SCRIPT.format(png=png, csv_list=", ".join(csv_files), body="\n".join(lines))
    path = Path(path)
    path.write_text(text)
    return path
