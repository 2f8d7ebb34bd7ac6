"""Figures for the report path.  matplotlib is imported lazily and is optional."""
from __future__ import annotations

import os

import numpy as np

from .errors import ConfigError


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise ConfigError("plotting needs matplotlib: pip install 'artifact[plot]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _col(env, name, rows=None):
    rows = env.rows if rows is None else rows
    return np.array([np.nan if r.get(name) in ("", None) else float(r[name]) for r in rows])


def _sweep(env, ax):
    L, S = _col(env, "L"), _col(env, "Re_SA")
    ax.semilogx(L, S, "o-", label="Re S_A")
    slope = env.summary.get("slope")
    if slope is not None:
        ax.semilogx(L, slope * np.log(L) + env.summary["intercept"], "--",
                    label=f"fit slope {slope:.3f}")
    ax.set_xlabel("L")
    ax.set_ylabel("Re S_A")


def _hierarchy(env, ax):
    ranks = sorted({r["branch_rank"] for r in env.rows})
    for b in ranks:
        rows = [r for r in env.rows if r["branch_rank"] == b]
        ax.loglog(_col(env, "L", rows), _col(env, "abs_p", rows), "o-",
                  label=f"branch {b}: {rows[0]['exponent']:.2f}")
    ax.set_xlabel("L")
    ax.set_ylabel("|p - 1/2|")


def _bulk(env, ax):
    L = _col(env, "L")
    ax.plot(L, _col(env, "Re_SA"), "o-", label="Re S_A")
    ax2 = ax.twinx()
    ax2.plot(L, _col(env, "excursion"), "s:", color="C1", label="excursion")
    ax2.set_ylabel("max distance of Re p outside [0, 1]")
    ax.set_xlabel("L")
    ax.set_ylabel("Re S_A")


def _gapped(env, ax):
    rows = [r for r in env.rows if r["section"] == "log_slope"]
    ax.plot(_col(env, "Ly", rows), _col(env, "value", rows), "o-", label="dS/dlnL")
    sat = [r for r in env.rows if r["section"] == "saturation"]
    if sat:
        ax.plot(_col(env, "Ly", sat), _col(env, "value", sat), "s-", label="S_min")
    ax.set_xlabel("Ly")


def _spectrum(env, ax):
    ax.plot(_col(env, "k"), _col(env, "Re_E"), ".", ms=2, label="Re E")
    ax.plot(_col(env, "k"), _col(env, "Im_E"), ".", ms=2, label="Im E")
    ax.set_xlabel("k")


_PLOTTERS = {"sweep": _sweep, "hierarchy": _hierarchy, "bulk-ep-scan": _bulk,
             "gapped-scaling": _gapped, "spectrum": _spectrum}


def render(env, path: str) -> str | None:
    """Render the task's figure to ``path``; returns None for tasks without a figure."""
    fn = _PLOTTERS.get(env.task)
    if fn is None or not env.rows:
        return None
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.6))
    fn(env, ax)
    ax.legend(fontsize=7)
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
