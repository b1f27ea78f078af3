"""Figure rendering for study reports.

Figures are written next to the CSV output; the CSV stays the canonical
record, the figures are the human-readable view of the same numbers.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def render_convergence_figure(result, path) -> None:
    """Log-log medians of the three distances against eps."""
    summary = result.summary()
    eps = [s["eps"] for s in summary]
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, label in (
        ("median_sup", "sup distance"),
        ("median_pvar", "p-var distance"),
        ("median_rem", "remainder q-var distance"),
    ):
        ax.loglog(eps, [s[key] for s in summary], "o-", label=label)
    ax.set_xlabel("eps")
    ax.set_ylabel("median distance over seeds")
    ax.set_title(f"Convergence to the averaged equation ({result.config.scenario})")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_path_overlay(config, seed: int, path) -> None:
    """One seed's slow paths across the eps ladder against the averaged one."""
    from .experiment import (
        drift_interpolant,
        probe_averaged_drift,
        seed_noise,
    )
    from .fastslow import solve_averaged, solve_fastslow

    lift1, omega2 = seed_noise(config, seed)
    params = config.rough_params
    fig, ax = plt.subplots(figsize=(6, 4))
    for eps in config.eps_ladder:
        system = config.make_system(eps)
        x_sol, _ = solve_fastslow(
            system, lift1, omega2, config.t_end,
            fast_resolution=config.fast_resolution, params=params,
        )
        ax.plot(x_sol.path.times, x_sol.path.values[:, 0], label=f"eps={eps}")
    fbar = drift_interpolant(probe_averaged_drift(config))
    bar = solve_averaged(
        config.make_system(max(config.eps_ladder)), fbar, lift1,
        config.t_end, params=params,
    )
    ax.plot(bar.path.times, bar.path.values[:, 0], "k--", label="averaged")
    ax.set_xlabel("t")
    ax.set_ylabel("slow state")
    ax.set_title(f"Slow paths, seed {seed} ({config.scenario})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_study_figures(result, out_dir) -> list:
    out_dir = Path(out_dir)
    written = []
    conv = out_dir / "convergence.png"
    render_convergence_figure(result, conv)
    written.append(conv)
    overlay = out_dir / "paths_seed0.png"
    render_path_overlay(result.config, 0, overlay)
    written.append(overlay)
    return written
