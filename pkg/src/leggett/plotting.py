"""Static figures written next to the CSV reports."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .correlations import e3_quantum_closed_form, leggett_bound  # noqa: E402

QM_STYLE = dict(color="darkviolet", ls="--", lw=1.2, label=r"$E_3^{QM}$")
BOUND_STYLE = dict(color="red", ls="-", lw=1.5, label=r"$L_3$")
DATA_STYLE = dict(fmt="o", ms=3.5, color="tab:blue", ecolor="tab:blue", capsize=2, label="simulated")


def _theory(ax, lo=0.0, hi=180.0):
    phi = np.linspace(lo, hi, 721)
    ax.plot(phi, [e3_quantum_closed_form(p) for p in phi], **QM_STYLE)
    ax.plot(phi, [leggett_bound(p) for p in phi], **BOUND_STYLE)


def _finish(ax, title=None):
    ax.set_xlabel(r"$\varphi$ (deg)")
    ax.set_ylabel(r"$E_3(\varphi)$")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)


def plot_theory(path, window=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    _theory(ax)
    if window:
        ax.axvspan(*window, color="0.9", zorder=0)
    ax.set_xlim(0, 180)
    _finish(ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(reports, path, sigma_threshold=3.0):
    """Two panels: full range, and a zoom on the rows above ``sigma_threshold``."""
    rows = [r for r in reports if not math.isnan(r.e3_est)]
    phi = np.array([r.phi for r in rows])
    e3 = np.array([r.e3_est for r in rows])
    err = np.array([r.sigma_e3 for r in rows])

    fig, (full, zoom) = plt.subplots(1, 2, figsize=(9, 3.5))
    _theory(full)
    full.errorbar(phi, e3, yerr=err, **DATA_STYLE)
    full.set_xlim(0, 180)
    _finish(full, "(a)")

    hits = phi[np.array([r.n_sigma >= sigma_threshold for r in rows], dtype=bool)]
    if hits.size:
        lo, hi = max(0.0, hits.min() - 8), min(180.0, hits.max() + 8)
    else:
        lo, hi = 0.0, 80.0
    sel = (phi >= lo) & (phi <= hi)
    _theory(zoom, lo, hi)
    zoom.errorbar(phi[sel], e3[sel], yerr=err[sel], **DATA_STYLE)
    zoom.set_xlim(lo, hi)
    _finish(zoom, "(b)")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
