"""Figures for tilt scans and rotating-plate tomography curves.

Everything renders through the Agg backend straight to a file.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.2,
    "savefig.dpi": 150,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_tilt_scan(scan, path, theta_star=None):
    """Singles (top) and coincidences (bottom) against tilt angle."""
    with plt.rc_context(_STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(4.5, 4.5))
        ax1.plot(scan.theta_deg, scan.singles, color="k")
        ax1.set_ylabel("singles")
        ax2.plot(scan.theta_deg, scan.coincidence, color="tab:red")
        ax2.set_ylabel("coincidences")
        ax2.set_xlabel(r"tilt $\theta$ (deg)")
        if theta_star is not None:
            for ax in (ax1, ax2):
                ax.axvline(theta_star, color="0.5", ls="--", lw=0.8)
        for ax in (ax1, ax2):
            ax.set_ylim(-0.05, 1.05)
        _save(fig, path)


def plot_protocol2(records, path, model=None):
    """Counts against second-plate angle, one panel per first-plate angle.

    ``model`` is an optional array of expected counts drawn as a line.
    """
    thetas = sorted({r.setting.theta for r in records})
    counts = records.counts
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(len(thetas), 1, sharex=True, figsize=(4.5, 1.6 * len(thetas) + 0.6),
                                 squeeze=False)
        for ax, th in zip(axes[:, 0], thetas):
            idx = [k for k, r in enumerate(records) if r.setting.theta == th]
            phi = np.array([records[k].setting.phi for k in idx])
            order = np.argsort(phi)
            ax.plot(phi[order], counts[idx][order], "o", ms=3, color="k")
            if model is not None:
                ax.plot(phi[order], np.asarray(model)[idx][order], color="tab:blue")
            ax.set_ylabel("counts")
            ax.text(0.98, 0.85, rf"$\theta$ = {th:g}$^\circ$", transform=ax.transAxes, ha="right")
        axes[-1, 0].set_xlabel(r"$\varphi$ (deg)")
        _save(fig, path)
