"""Low-temperature energy current carried by edge modes.

A chiral branch E(k) sampled between its band-contact endpoints carries

    J = (1/2pi) int E(k) E'(k) [n_F(E) - chi(E<0)] dk,

the T = 0 background already subtracted, so the integrand lives within a few
T of the chemical potential (fixed at 0: models are built with the Fermi
energy absorbed into V).  Change of variables makes J independent of the
dispersion shape: each signed zero crossing contributes (pi/12) T^2, which
is the c = 1 unit of chiral central charge.  Summing over a gap's branches
and extrapolating the T^2 law to T = 0 therefore measures the sum of edge
chiralities, to be compared with the Hall conductance of the filled bands.
"""

import warnings

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import expit

from .discrete import bulk_band_extents, edge_dispersion


class EndpointResolutionWarning(UserWarning):
    """A branch endpoint is not thermally resolved: the occupation factor
    has not decayed below 1e-8 where the samples stop, so the truncated
    tail contributes to J at that level."""


class CurrentSample:
    def __init__(self, T, J):
        self.T = T
        self.J = J
        self.c_estimate = J * 12.0 / (np.pi * T * T)

    def __repr__(self):
        return ("CurrentSample(T=%.6g, J=%.6e, c=%.6f)"
                % (self.T, self.J, self.c_estimate))


def _occupation_excess(E, T):
    # n_F(E) - theta(-E), written to avoid overflow in either tail
    E = np.asarray(E, dtype=float)
    return np.where(E >= 0.0, expit(-E / T), -expit(E / T))


def mode_current(branch, T):
    """Energy current of one sampled branch, integrated along the sample
    direction (a branch traversed from k_+ to k_- flips sign).

    branch : (k, E) arrays, k strictly monotone; the (ky array, E array)
        pairs stored by edge_dispersion can be passed directly.
    """
    k, E = branch
    k = np.asarray(k, dtype=float)
    E = np.asarray(E, dtype=float)
    if k.size != E.size or k.size < 2:
        raise ValueError("branch needs matched k and E arrays, >= 2 samples")
    orient = 1.0
    if k[-1] < k[0]:
        orient = -1.0
        k = k[::-1].copy()
        E = E[::-1].copy()
    dk = np.diff(k)
    if dk.min() <= 0.0:
        raise ValueError("branch k samples must be strictly monotone")

    Eprime = np.gradient(E, k)  # centered differences in the interior
    if k.size >= 4:
        fE = CubicSpline(k, E)
        fEp = CubicSpline(k, Eprime)
    else:
        fE = lambda x: np.interp(x, k, E)
        fEp = lambda x: np.interp(x, k, Eprime)

    def integrand(x):
        e = fE(x)
        return e * fEp(x) * _occupation_excess(e, T) / (2.0 * np.pi)

    for kend in (k[0], k[-1]):
        mag = abs(integrand(kend))
        if mag > 1e-8:
            warnings.warn("branch endpoint k=%.6f (E=%.4f) not thermally "
                          "resolved at T=%g: integrand %.3e" %
                          (kend, float(fE(kend)), T, mag),
                          EndpointResolutionWarning, stacklevel=2)

    # split the quadrature at the chemical-potential crossings, where the
    # subtracted step leaves a kink in the integrand
    crossings = []
    sgn = np.sign(E)
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        crossings.append(brentq(fE, k[i], k[i + 1], xtol=1e-14))
    crossings.extend(k[i] for i in np.nonzero(sgn == 0)[0])
    pts = sorted(c for c in crossings if k[0] < c < k[-1])

    J, _ = quad(integrand, k[0], k[-1], points=pts or None,
                limit=400, epsabs=1e-13, epsrel=1e-12)
    return orient * J


def central_charge(model, gap, T_sequence, L=150, Ny=200, dispersion=None):
    """Edge central charge of one bulk gap from the T -> 0 current.

    gap indexes the gap above band `gap` (0-based); the chemical potential
    0 must lie inside it, i.e. the model's Fermi shift selects the gap.
    Sums mode_current over the plain-edge branches recorded in that gap for
    each T in T_sequence (decreasing), then removes the leading T^2
    correction by Richardson extrapolation of the c estimates.

    Returns (samples, c): one CurrentSample per temperature and the
    extrapolated charge.  A gap with no edge branches gives c = 0.
    """
    Ts = [float(T) for T in T_sequence]
    if len(Ts) < 2 or any(b >= a for a, b in zip(Ts, Ts[1:])):
        raise ValueError("T_sequence must be at least two decreasing values")
    lo, hi = bulk_band_extents(model)
    if gap < 0 or gap >= model.n - 1:
        raise ValueError("gap index %d out of range for %d bands"
                         % (gap, model.n))
    glo = hi[gap]
    ghi = lo[gap + 1]
    if glo >= ghi:
        raise ValueError("gap %d is closed" % gap)
    if not glo < 0.0 < ghi:
        raise ValueError("chemical potential 0 lies outside gap %d "
                         "(%.4f, %.4f); shift the Fermi energy" %
                         (gap, glo, ghi))
    if dispersion is None:
        dispersion = edge_dispersion(model, L=L, Ny=Ny)
    branches = [dispersion.branches[r.branch_id] for r in dispersion.records
                if r.gap_index == gap
                and len(dispersion.branches[r.branch_id][0]) >= 4]

    samples = []
    for T in Ts:
        J = sum(mode_current(br, T) for br in branches)
        samples.append(CurrentSample(T, J))

    # the c estimates carry O(T^2) error; one Richardson level on the two
    # finest temperatures (coarser pairs can still feel the band edges
    # through tails that decay like exp(-gap/2T), so they are not chained)
    a, b = samples[-2], samples[-1]
    r2 = (a.T / b.T) ** 2
    c = (r2 * b.c_estimate - a.c_estimate) / (r2 - 1.0)
    return samples, c
