"""Figures written next to the CSV tables.  Agg backend, no timestamps, so the
PNG bytes depend only on the data."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# command -> (x column, y columns, log-log)
LAYOUTS = {
    "spectrum": ("lambda", ["count", "weyl_leading"], True),
    "profile": ("lambda", ["norm2_quadrature"], False),
    "fr": ("R", ["fr_R"], True),
    "approx": ("trial", ["error2"], False),
    "stability": ("R", ["l2_norm", "lp_norm", "support_volume"], True),
    "endpoint": ("j", ["a_j", "b_j"], False),
    "uncertainty": ("R", ["fr_R", "lower_bound", "upper_bound"], True),
    "kuznecov": ("lambda", ["cumulative"], True),
    "volume": ("delta", ["volume"], True),
}


def render(command, columns, rows, path, title=None):
    """Plot the layout for ``command`` from ``rows`` (list of dicts); returns False if nothing to draw."""
    if command not in LAYOUTS or not rows:
        return False
    xname, ynames, loglog = LAYOUTS[command]
    ynames = [y for y in ynames if y in columns]
    if xname not in columns or not ynames:
        return False
    x = np.array([float(r[xname]) for r in rows])
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=100)
    for y in ynames:
        vals = np.array([float(r[y]) if r[y] != "" else np.nan for r in rows])
        ok = np.isfinite(vals)
        if loglog:
            ok &= (vals > 0) & (x > 0)
        if command == "approx":
            ax.hist(vals[ok], bins=60, color="0.4")
            ax.set_xlabel(y)
            ax.set_ylabel("trials")
            continue
        style = "o-" if len(x) < 40 else "-"
        ax.plot(x[ok], vals[ok], style, ms=3, lw=1, label=y)
    if command != "approx":
        if loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(xname)
        ax.legend(frameon=False, fontsize=8)
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return True
