"""Figure rendering for scenario and cross-check outputs.

Uses the Agg backend so rendering works without a display; every
function writes PNG files into the output directory and returns the
file names it created.
"""

from __future__ import annotations

import os
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .runner import ScenarioRun

__all__ = ["render_state_figures", "render_oracle_figure"]


def _quadrature_label(index: int) -> str:
    mode = index // 2 + 1
    return f"x{mode}" if index % 2 == 0 else f"p{mode}"


def _save(fig, out_dir: str, name: str, written: List[str]) -> None:
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, name), dpi=150)
    plt.close(fig)
    written.append(name)


def render_state_figures(run: ScenarioRun, out_dir: str, n_modes: int) -> List[str]:
    """Renders the moment trajectories and any requested diagnostics."""
    written: List[str] = []
    dim = 2 * n_modes

    fig, (ax_var, ax_nu) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    for k in range(dim):
        ax_var.plot(run.times, run.covs[:, k, k], label=_quadrature_label(k))
    ax_var.set_xlabel("time")
    ax_var.set_ylabel("variance")
    ax_var.legend()
    for m in range(n_modes):
        ax_nu.plot(run.times, run.nus[:, m], label=f"mode {m + 1}")
    ax_nu.axhline(0.5, color="gray", linestyle="--", linewidth=1.0)
    ax_nu.set_xlabel("time")
    ax_nu.set_ylabel("symplectic eigenvalue")
    ax_nu.legend()
    _save(fig, out_dir, "states.png", written)

    diag = run.diagnostics
    panels = []
    if "nu_tilde_min" in diag:
        panels.append("ppt")
    if "S_total" in diag:
        panels.append("entropy")
    if "I_C" in diag:
        panels.append("coherent_info")
    if panels:
        fig, axes = plt.subplots(1, len(panels), figsize=(4.5 * len(panels), 4.0))
        axes = [axes] if len(panels) == 1 else list(axes)
        for ax, panel in zip(axes, panels):
            if panel == "ppt":
                ax.semilogy(run.times, diag["nu_tilde_min"])
                ax.axhline(0.5, color="gray", linestyle="--", linewidth=1.0)
                ax.set_ylabel("min PT symplectic eigenvalue")
            elif panel == "entropy":
                ax.plot(run.times, diag["S_total"], label="joint")
                ax.plot(run.times, diag["S_reduced"], label="reduced")
                ax.set_ylabel("entropy (nats)")
                ax.legend()
            else:
                ax.plot(run.times, diag["I_C"])
                ax.set_ylabel("coherent information bound")
            ax.set_xlabel("time")
        _save(fig, out_dir, "entanglement.png", written)

    if run.jump_count_histogram:
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        counts = sorted(run.jump_count_histogram.items())
        ax.bar([k for k, _ in counts], [v for _, v in counts], color="steelblue")
        ax.set_xlabel("jumps at final time")
        ax.set_ylabel("trajectories")
        if run.n_divergent:
            ax.set_title(f"{run.n_divergent} divergent trajectories excluded")
        _save(fig, out_dir, "ensemble.png", written)

    return written


def render_oracle_figure(payload: dict, out_dir: str) -> List[str]:
    """Renders residuals against their thresholds on a log scale."""
    written: List[str] = []
    names = list(payload["residuals"])
    residuals = [max(payload["residuals"][n], 1e-18) for n in names]
    thresholds = [payload["thresholds"][n] for n in names]
    positions = range(len(names))

    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.bar(positions, residuals, color="steelblue", label="residual")
    ax.scatter(positions, thresholds, color="firebrick", marker="_", s=400,
               label="threshold")
    ax.set_yscale("log")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("max abs deviation")
    ax.legend()
    _save(fig, out_dir, "oracle.png", written)
    return written
