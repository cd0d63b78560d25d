"""Side classification of eigenfunctions by Fourier-mode mass.

A spectral point belongs to the right half-lattice operator (x >= 1) or the
left one (x <= 0); the eigenfunction decides.  Site x corresponds to the
mode e^{-i x kx}: psi(kx) = e^{-2 i kx} is the lattice vector at x = +2.
The half-lattice spectrum check in calibrate_convention pins this sign; the
package freezes its result as MODE_SIGN and the test suite re-runs the
calibration.
"""

import numpy as np

MODE_SIGN = -1   # site x <-> e^{MODE_SIGN * i * x * kx}

EDGE_PLUS = "edge_plus"
EDGE_MINUS = "edge_minus"
AMBIGUOUS = "ambiguous"


class ResolutionError(RuntimeError):
    """Mode truncation too small for this eigenfunction."""


class SideVerdict:
    def __init__(self, side, mass_nonneg, mass_neg, modes_computed):
        self.side = side
        self.mass_nonneg = mass_nonneg
        self.mass_neg = mass_neg
        self.modes_computed = modes_computed

    def __repr__(self):
        return ("SideVerdict(%s, mass_nonneg=%.6f, modes=%d)"
                % (self.side, self.mass_nonneg, self.modes_computed))


def mode_coefficients(psi, n_modes):
    """psi sampled on the uniform open kx grid, shape (Nx, n) or (Nx,).

    Returns xs in [-n_modes, n_modes] and the coefficient array (2*n_modes+1,
    n).  With MODE_SIGN = -1 the coefficient at x is (1/Nx) sum_i psi(k_i)
    e^{+i x k_i}, an inverse DFT.
    """
    psi = np.asarray(psi)
    if psi.ndim == 1:
        psi = psi[:, None]
    Nx = psi.shape[0]
    if Nx < 4 * n_modes:
        raise ValueError("need Nx >= 4*n_modes samples (%d < %d)"
                         % (Nx, 4 * n_modes))
    if MODE_SIGN == -1:
        co = np.fft.ifft(psi, axis=0)
    else:
        co = np.fft.fft(psi, axis=0) / psi.shape[0]
    xs = np.arange(-n_modes, n_modes + 1)
    return xs, co[np.mod(xs, Nx)]


def classify(psi, E, n_modes):
    """Side verdict from the mode mass split at x >= 0 vs x < 0."""
    xs, co = mode_coefficients(psi, n_modes)
    mass = (np.abs(co) ** 2).sum(axis=1)
    total = mass.sum()
    if total <= 0:
        raise ValueError("zero eigenfunction")
    outer = mass[np.abs(xs) > 0.9 * n_modes].sum()
    if outer / total > 1e-4:
        raise ResolutionError(
            "outer mode mass %.2e at E=%.3f: raise n_modes" %
            (outer / total, E))
    mass_nonneg = mass[xs >= 0].sum() / total
    mass_neg = 1.0 - mass_nonneg
    if mass_nonneg > 0.99:
        side = EDGE_PLUS
    elif mass_nonneg < 0.01:
        side = EDGE_MINUS
    else:
        side = AMBIGUOUS
    return SideVerdict(side, mass_nonneg, mass_neg, len(xs))


def decay_profile(psi_family):
    """Wrong-side coefficient maxima along a family of eigenfunctions.

    psi_family: list of (E, psi_samples); each member uses the largest mode
    set its sampling allows.  The family's side is taken by majority; the
    returned (E, max wrong-side |coeff|) pairs feed a log-log slope fit.
    """
    if len(psi_family) < 3:
        raise ValueError("need at least 3 family members")
    Es = [E for E, _ in psi_family]
    if max(Es) < 4 * min(Es):
        raise ValueError("family must span a factor of 4 in E")
    verdicts = []
    coeffs = []
    for E, psi in psi_family:
        n_modes = np.asarray(psi).shape[0] // 4
        xs, co = mode_coefficients(psi, n_modes)
        amp = np.sqrt((np.abs(co) ** 2).sum(axis=1))
        verdicts.append(classify(psi, E, n_modes))
        coeffs.append((xs, amp))
    plus = sum(1 for v in verdicts if v.side == EDGE_PLUS)
    minus = sum(1 for v in verdicts if v.side == EDGE_MINUS)
    wrong_is_neg = plus >= minus
    out = []
    for (E, _), (xs, amp) in zip(psi_family, coeffs):
        sel = xs < 0 if wrong_is_neg else xs >= 0
        out.append((E, float(amp[sel].max())))
    return out


def calibrate_convention(exact_points, discrete_energies, tol=1e-3):
    """Check that points classified edge_plus are exactly those present in
    the right half-lattice spectrum.  Returns the verified MODE_SIGN; raises
    if the frozen convention misclassifies."""
    for p, verdict in exact_points:
        in_half = bool(np.min(np.abs(discrete_energies - p.E)) < tol)
        if verdict.side == EDGE_PLUS and not in_half:
            raise RuntimeError("edge_plus root %.4f missing from half-"
                               "lattice spectrum" % p.E)
        if verdict.side == EDGE_MINUS and in_half:
            raise RuntimeError("edge_minus root %.4f present in half-"
                               "lattice spectrum" % p.E)
    return MODE_SIGN
