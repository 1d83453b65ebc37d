"""Figure rendering for CLI reports. All figures go to files, never screens."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update({
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
})

_REGION_COLORS = {"mainlobe": "#2a9d4e", "null": "#d04040"}


def _shade_regions(ax, spec):
    for lo, hi in spec.mainlobe_regions:
        ax.axvspan(lo, hi, color=_REGION_COLORS["mainlobe"], alpha=0.12, lw=0)
    for lo, hi in spec.null_regions:
        ax.axvspan(lo, hi, color=_REGION_COLORS["null"], alpha=0.12, lw=0)


def save_pattern_figure(path, angles_deg, gains_db, spec, title="Beam pattern") -> Path:
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(angles_deg, gains_db, lw=1.2)
    _shade_regions(ax, spec)
    ax.axhline(spec.eta_sl_db, color="gray", ls="--", lw=0.9, label=f"sidelobe {spec.eta_sl_db:g} dB")
    ax.axhline(spec.eta_z_db, color="#d04040", ls="--", lw=0.9, label=f"null {spec.eta_z_db:g} dB")
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("normalized gain (dB)")
    ax.set_ylim(min(-60.0, spec.eta_z_db - 10.0), 3.0)
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def save_convergence_figure(path, traces: dict[str, list], title="ADMM convergence") -> Path:
    """Plot the scale/ripple value per iteration for each named trace."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for name, trace in traces.items():
        ax.plot([row.iteration for row in trace], [row.epsilon_l for row in trace],
                lw=1.0, label=name)
    ax.set_xlabel("iteration")
    ax.set_ylabel("scale / ripple value")
    ax.set_title(title)
    if len(traces) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def save_scaling_figure(path, fit) -> Path:
    x = np.asarray([r.num_aps for r in fit.rows], dtype=float)
    y = np.asarray([r.median_time_s for r in fit.rows], dtype=float)
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(x, y, "o", label="median runtime")
    xs = np.linspace(x.min(), x.max(), 50)
    ax.plot(xs, fit.slope * xs + fit.intercept, "-", lw=1.0,
            label=f"linear fit (R$^2$={fit.r_squared:.3f})")
    ax.set_xlabel("number of nodes")
    ax.set_ylabel("synthesis time (s)")
    ax.set_title("Runtime scaling with node count")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def save_compare_figure(path, rows) -> Path:
    idx = np.arange(len(rows))
    t_a = np.asarray([r.armijo_time_s for r in rows])
    t_u = np.asarray([r.unfolded_time_s for r in rows])
    ratio = np.asarray([r.objective_ratio for r in rows])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.4))
    ax1.plot(idx, 1e3 * t_a, ".", label="line search")
    ax1.plot(idx, 1e3 * t_u, ".", label="learned steps")
    ax1.set_xlabel("instance")
    ax1.set_ylabel("solve time (ms)")
    ax1.set_yscale("log")
    ax1.legend(fontsize=8)
    ax2.hist(ratio[np.isfinite(ratio)], bins=20, color="#4778b0")
    ax2.set_xlabel("objective ratio (learned / line search)")
    ax2.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def save_impairment_figure(path, patterns, null_db: dict[str, float]) -> Path:
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for name, color in (("ideal", "#333333"), ("uncorrected", "#2a9d4e"),
                        ("compensated", "#d08a1f")):
        trace = getattr(patterns, name)
        power = np.abs(trace) ** 2
        gains = 10.0 * np.log10(power / power.max())
        ax.plot(patterns.theta_deg, gains, lw=1.1, color=color,
                label=f"{name} (null {null_db[name]:.1f} dB)")
    ax.set_xlabel("azimuth (deg)")
    ax.set_ylabel("normalized gain (dB)")
    ax.set_ylim(-70, 3)
    ax.set_title("Pattern under hardware impairments")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)
