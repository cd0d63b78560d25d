"""Figure specifications and input loading.

Each figure is described by a FigureSpec: which CSV files it reads, the
columns it requires from each, axis ranges and the style map.  Loading is
strict on purpose: a missing file or column aborts the render instead of
silently dropping a series.
"""

import os

import numpy as np
import pandas as pd

TWO_PI = 2.0 * np.pi

# one shared style vocabulary; the captions fix the colors (edge side
# spectra blue/green, the rung ladder orange, spurious branches dotted)
STYLE = {
    "bulk": {"color": "0.82", "zorder": 0},
    "edge_mode": {"color": "black", "lw": 1.1},
    "edge_plus": {"color": "tab:blue", "s": 4.0},
    "edge_minus": {"color": "tab:green", "s": 4.0},
    "exact": {"color": "tab:blue", "s": 7.0},
    "asymptotic": {"color": "tab:orange"},
    "sorted": {"color": "0.65", "s": 2.5},
    "spurious": {"color": "0.25", "linestyle": ":", "lw": 1.4},
    "tracked": {"color": "tab:blue", "lw": 1.3},
}


class MissingInputError(FileNotFoundError):
    pass


class SchemaMismatchError(ValueError):
    pass


class FigureSpec:
    """What one figure needs: id 1..5, role -> (path, required columns),
    axis ranges, style map."""

    def __init__(self, figure, inputs, xlim=None, ylim=None, style=None):
        if figure not in (1, 2, 3, 4, 5):
            raise ValueError("figure id must be 1..5, got %r" % (figure,))
        self.figure = figure
        self.inputs = dict(inputs)
        self.xlim = xlim
        self.ylim = ylim
        self.style = dict(STYLE, **(style or {}))

    def input_files(self):
        return [path for path, _ in self.inputs.values()]

    def load(self):
        """Read every input into a DataFrame, checking columns."""
        tables = {}
        for role, (path, columns) in self.inputs.items():
            tables[role] = read_table(path, columns)
        return tables


def read_table(path, columns):
    if not os.path.exists(path):
        raise MissingInputError("input file not found: %s" % path)
    df = pd.read_csv(path)
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise SchemaMismatchError(
            "%s lacks column(s) %s (has %s)"
            % (path, ", ".join(missing), ", ".join(df.columns)))
    return df


# required columns per file role
_BANDS = ["ky", "band", "e_min", "e_max"]
_BRANCH = ["branch_id", "ky", "E"]
_KE = ["ky", "E"]
_SIDES = ["ky", "E", "side"]
_SORTED = ["ky", "E", "spurious"]


def standard_spec(figure, indir):
    """The spec for one of the five stock figures over a figures-data
    export directory."""
    p = lambda name: os.path.join(indir, name)
    if figure == 1:
        return FigureSpec(1, {
            "bands": (p("fig1_bands.csv"), _BANDS),
            "edges": (p("fig1_edges.csv"), _BRANCH),
        }, xlim=(0.0, TWO_PI))
    if figure == 2:
        return FigureSpec(2, {
            "exact_p": (p("fig2_exact_p.csv"), _KE),
            "asym_p": (p("fig2_asym_p.csv"), _KE + ["m", "j"]),
            "exact_m": (p("fig2_exact_m.csv"), _KE),
            "asym_m": (p("fig2_asym_m.csv"), _KE + ["m", "j"]),
        }, xlim=(0.0, TWO_PI), ylim=(19.5, 30.5))
    if figure in (3, 4):
        return FigureSpec(figure, {
            "sides": (p("fig%d_sides.csv" % figure), _SIDES),
        }, xlim=(0.0, TWO_PI), ylim=(19.5, 30.5))
    if figure == 5:
        return FigureSpec(5, {
            "sorted": (p("fig5_sorted.csv"), _SORTED),
            "tracked": (p("fig5_tracked.csv"), _BRANCH),
        }, xlim=(0.0, TWO_PI), ylim=(19.5, 30.5))
    raise ValueError("figure id must be 1..5, got %r" % (figure,))
