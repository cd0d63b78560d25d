"""Spectral flow of tracked branches through a fiducial level.

Crossing directions are counted in the orientation of the half-lattice the
branch lives on: raw sign of dE/dky for states supported on x >= 0, negated
for states on x < 0 (the left edge is traversed in the reflected sense).
Net counts over one ky period are integers and, for a fiducial placed far
above the bulk bands, reproduce the filled-band Chern sum with opposite
signs on the two edges.
"""

import numpy as np

from . import bands as _bands
from . import discrete as _discrete
from . import model as _model
from . import monodromy as _monodromy
from . import tracking as _tracking


class FlowReport:
    def __init__(self, fiducial_E, crossings, flow, kappa=None, agrees=None,
                 warnings=None):
        self.fiducial_E = fiducial_E
        self.crossings = crossings
        self.flow = flow
        self.kappa = kappa
        self.agrees = agrees
        self.warnings = warnings or []

    def __repr__(self):
        return ("FlowReport(F=%.4f, flow=%+d, %d crossings, kappa=%s)"
                % (self.fiducial_E, self.flow, len(self.crossings),
                   self.kappa))


def spectral_flow(branches, fiducial_E, model=None):
    """Signed crossing count of fiducial_E over a list of tracked branches.

    Each branch needs k_samples and E_values covering one period; an optional
    side attribute ("edge_plus" or "edge_minus") sets the orientation weight.
    No sample may coincide with the fiducial; perturb it and rerun if one
    does.  With the model given, the result is compared against the gap's
    Chern sum (sign per side, zero for a mixture of sides).
    """
    warnings = []
    crossings = []
    flow = 0
    sides = set()
    for bi, br in enumerate(branches):
        ks = np.asarray(br.k_samples, dtype=float)
        Es = np.asarray(br.E_values, dtype=float)
        side = getattr(br, "side", None) or "edge_plus"
        sides.add(side)
        weight = -1 if side == "edge_minus" else 1
        d = Es - fiducial_E
        if np.any(d == 0.0):
            raise ValueError(
                "branch %d samples the fiducial level exactly; "
                "perturb fiducial_E" % bi)
        sgn = np.sign(d)
        for i in np.nonzero(sgn[:-1] != sgn[1:])[0]:
            dk = ks[i + 1] - ks[i]
            slope = (Es[i + 1] - Es[i]) / dk
            if abs(slope) < 1e-6:
                warnings.append(
                    "near-tangential crossing on branch %d at ky=%.6f"
                    % (bi, ks[i]))
                continue
            kc = ks[i] + (fiducial_E - Es[i]) / slope
            direction = weight * (1 if slope > 0 else -1)
            crossings.append((float(kc), int(direction), bi))
            flow += direction
    crossings.sort()
    kappa = None
    agrees = None
    if model is not None:
        kappa = hall_conductance(model)
        if sides == {"edge_plus"}:
            agrees = flow == kappa
        elif sides == {"edge_minus"}:
            agrees = flow == -kappa
        else:
            agrees = flow == 0
    return FlowReport(float(fiducial_E), crossings, int(flow), kappa,
                      agrees, warnings)


def family_winding(model, j, Ny=300):
    """Winding of the band-j transport phase over a ky period (an integer,
    equal to the band's Chern number)."""
    rec = _bands.chern_numbers(model, Nx=128, Ny=Ny)
    return int(rec.chern[j])


def hall_conductance(model, Nx=128, Ny=300):
    """Chern sum of the bands below the spectral gap at zero energy."""
    gaps = _model.validate_gaps(model)
    if gaps.gap_index_k is None:
        raise ValueError("zero energy is not inside a spectral gap")
    rec = _bands.chern_numbers(model, Nx=Nx, Ny=Ny)
    return int(sum(rec.chern[:gaps.gap_index_k - 1]))


def flow_window(model, margin=1.5):
    """Default fiducial window: base ten times the bulk energy scale, width
    set by the largest asymptotic branch period.  Returns (lo, hi, F) with
    the fiducial at the midpoint."""
    blo, bhi = _discrete.bulk_band_extents(model)
    maxbulk = float(max(np.abs(blo).max(), np.abs(bhi).max()))
    ph = _monodromy.phase_data(model, 0.0)
    maxsp = float(2.0 * np.pi / np.abs(ph.c).min())
    F = 10.0 * maxbulk + 0.5 * maxsp
    return F - margin * maxsp, F + margin * maxsp, F


def side_of(op, psi, split=0.5):
    """Which half-lattice carries the weight of a truncation eigenvector."""
    mass = op.site_mass(psi)
    neg = float(mass[np.asarray(op.sites) < 0].sum())
    return "edge_minus" if neg > split * mass.sum() else "edge_plus"


def edge_flows(model, L=500, step=2.0 * np.pi / 200, window=None,
               fiducial_E=None, keep_branches=False):
    """Track every branch of the full modulated truncation through one
    period and report the spectral flow of each edge family.

    Seeds come from the window around the default fiducial (or an explicit
    one); far-wall states are already dropped by the seeding.  Returns a dict
    with per-side FlowReports, the Chern sum kappa, and abort diagnostics.
    """
    if window is None:
        lo, hi, F = flow_window(model)
    else:
        lo, hi = window
        F = 0.5 * (lo + hi)
    if fiducial_E is not None:
        F = fiducial_E
    fam = _tracking.TruncationFamily(model, "modulated_full", L)
    op0 = fam(0.0)
    seeds = _tracking.seed_pairs(op0, (lo, hi))
    plus, minus = [], []
    aborted = []
    for E0, v in seeds:
        side = side_of(op0, v)
        br = _tracking.transport(fam, (E0, v), step,
                                 keep_vectors=keep_branches)
        br.side = side
        if br.aborted:
            aborted.append((E0, side, br.abort_reason))
            continue
        (plus if side == "edge_plus" else minus).append(br)
    rep_plus = spectral_flow(plus, F, model)
    rep_minus = spectral_flow(minus, F, model)
    out = {
        "fiducial_E": F,
        "window": (lo, hi),
        "edge_plus": rep_plus,
        "edge_minus": rep_minus,
        "kappa": rep_plus.kappa,
        "aborted": aborted,
    }
    if keep_branches:
        out["branches"] = {"edge_plus": plus, "edge_minus": minus}
    return out
