"""Rendering of the five stock figures from exported CSV tables.

Everything is drawn through one entry point, render(spec, out_path), so the
determinism knobs live in a single place: Agg canvas, fixed geometry, fixed
svg hash salt, no date metadata.  Re-running on identical inputs must give
byte-identical files.
"""

import os

import matplotlib
matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "edgefigs"

import matplotlib.pyplot as plt
import numpy as np

from .spec import SchemaMismatchError

_FIGSIZE = (6.4, 4.2)
_DPI = 160


def render(spec, out_path):
    """Draw the figure described by spec and write it to out_path.

    The extension selects the format (png or svg).  Returns out_path.
    """
    tables = spec.load()
    fig = plt.figure(figsize=_FIGSIZE, dpi=_DPI)
    try:
        _DRAW[spec.figure](fig, tables, spec)
        _save(fig, out_path)
    finally:
        plt.close(fig)
    return out_path


def _save(fig, out_path):
    ext = os.path.splitext(out_path)[1].lower().lstrip(".")
    if ext not in ("png", "svg"):
        raise ValueError("unsupported output format %r (png or svg)" % ext)
    meta = {"Date": None} if ext == "svg" else None
    fig.savefig(out_path, format=ext, metadata=meta)


def _axes(fig, spec, n=1):
    axs = fig.subplots(n, 1, sharex=True)
    axs = np.atleast_1d(axs)
    for ax in axs:
        if spec.xlim:
            ax.set_xlim(*spec.xlim)
        if spec.ylim:
            ax.set_ylim(*spec.ylim)
        ax.set_ylabel("$E$")
    axs[-1].set_xlabel("$k_y$")
    return axs


def _draw_fig1(fig, tables, spec):
    # shaded bulk bands with the half-plane edge branches across the gaps
    ax = _axes(fig, spec)[0]
    bands = tables["bands"].sort_values(["band", "ky"])
    for _, grp in bands.groupby("band"):
        ax.fill_between(grp["ky"], grp["e_min"], grp["e_max"],
                        **spec.style["bulk"])
    edges = tables["edges"].sort_values(["branch_id", "ky"])
    for _, grp in edges.groupby("branch_id"):
        ax.plot(grp["ky"], grp["E"], **spec.style["edge_mode"])
    lo = bands["e_min"].min()
    hi = bands["e_max"].max()
    if spec.ylim is None and np.isfinite(lo):
        ax.set_ylim(lo - 0.4, hi + 0.4)


def _draw_fig2(fig, tables, spec):
    # defect spectra against the rung ladder, one panel per sign of E_F
    axs = _axes(fig, spec, n=2)
    for ax, tag, label in ((axs[0], "p", "$E_F > 0$"),
                           (axs[1], "m", "$E_F < 0$")):
        ex = tables["exact_" + tag].sort_values(["ky", "E"])
        asy = tables["asym_" + tag].sort_values(["ky", "E"])
        st = spec.style["asymptotic"]
        ax.scatter(asy["ky"], asy["E"], s=16.0, marker="o",
                   facecolors="none", edgecolors=st["color"],
                   linewidths=0.9)
        ax.scatter(ex["ky"], ex["E"], marker=".", **spec.style["exact"])
        ax.set_title(label, fontsize=9, loc="left")


def _draw_sides(fig, tables, spec):
    ax = _axes(fig, spec)[0]
    df = tables["sides"].sort_values(["ky", "E"])
    known = ("edge_plus", "edge_minus")
    stray = set(df["side"].unique()) - set(known)
    if stray:
        raise SchemaMismatchError("unknown side value(s): %s"
                                  % ", ".join(sorted(map(str, stray))))
    for side in known:
        grp = df[df["side"] == side]
        ax.scatter(grp["ky"], grp["E"], marker=".", **spec.style[side])


def _spurious_runs(df, step):
    """Consecutive-on-the-ky-grid runs of flagged rows, for dotted lines."""
    if not len(df):
        return
    df = df.sort_values(["ky", "E"])
    k = df["ky"].to_numpy()
    brk = np.where(np.diff(k) > 1.5 * step)[0] + 1
    for chunk in np.split(np.arange(len(k)), brk):
        yield df.iloc[chunk]


def _draw_fig5(fig, tables, spec):
    # pointwise-sorted spectrum with its wall states dotted, and the
    # transported branches drawn through them
    ax = _axes(fig, spec)[0]
    srt = tables["sorted"]
    genuine = srt[srt["spurious"] == 0].sort_values(["ky", "E"])
    ax.scatter(genuine["ky"], genuine["E"], marker=".",
               **spec.style["sorted"])
    grid = np.sort(srt["ky"].unique())
    step = np.median(np.diff(grid)) if len(grid) > 1 else np.inf
    flagged = srt[srt["spurious"] != 0]
    for run in _spurious_runs(flagged, step):
        ax.plot(run["ky"], run["E"], marker=".", markersize=3.0,
                **spec.style["spurious"])
    tracked = tables["tracked"].sort_values(["branch_id", "ky"])
    for _, grp in tracked.groupby("branch_id"):
        ax.plot(grp["ky"], grp["E"], **spec.style["tracked"])


_DRAW = {
    1: _draw_fig1,
    2: _draw_fig2,
    3: _draw_sides,
    4: _draw_sides,
    5: _draw_fig5,
}
