"""Bloch Hamiltonians H(kx, ky) = V(ky) + A(ky) e^{i kx} + A*(ky) e^{-i kx}.

V and A are stored as finite trigonometric polynomials in ky (a dict of
integer harmonics -> n x n coefficient matrices), which keeps evaluation
exactly 2pi-periodic and makes the ky-derivative analytic.  The Fermi energy
is subtracted from V at construction time; downstream code always works at
E_F = 0.
"""

import json
import math

import numpy as np


class BlochModel:
    """Range-1 Bloch Hamiltonian with ky-periodic coefficient matrices.

    Parameters
    ----------
    V_coeffs, A_coeffs : dict
        Maps integer harmonic h to an (n, n) complex array; the matrix
        function is sum_h C_h e^{i h ky}.  V must assemble to a Hermitian
        matrix for every ky (checked at construction on a sample grid).
    fermi_shift : float
        The Fermi energy already absorbed into V, kept for provenance.
    """

    def __init__(self, n, V_coeffs, A_coeffs, fermi_shift=0.0):
        self.n = int(n)
        self.V_coeffs = {int(h): np.asarray(C, dtype=complex)
                         for h, C in V_coeffs.items()}
        self.A_coeffs = {int(h): np.asarray(C, dtype=complex)
                         for h, C in A_coeffs.items()}
        self.fermi_shift = float(fermi_shift)
        for h, C in list(self.V_coeffs.items()) + list(self.A_coeffs.items()):
            if C.shape != (self.n, self.n):
                raise ValueError("coefficient for harmonic %d has shape %s, "
                                 "expected (%d, %d)" % (h, C.shape, n, n))
        # V(ky) Hermitian for all ky iff coefficients satisfy C_h = C_{-h}^dag
        for h, C in self.V_coeffs.items():
            D = self.V_coeffs.get(-h, np.zeros_like(C))
            if np.abs(C - D.conj().T).max() > 1e-12:
                raise ValueError("V coefficients do not assemble to a "
                                 "Hermitian matrix (harmonic %d)" % h)

    def _eval(self, coeffs, ky):
        M = np.zeros((self.n, self.n), dtype=complex)
        for h, C in coeffs.items():
            M += C * np.exp(1j * h * ky)
        return M

    def V(self, ky):
        return self._eval(self.V_coeffs, ky)

    def A(self, ky):
        return self._eval(self.A_coeffs, ky)

    def dV(self, ky):
        """d/dky of V, exact (term-by-term derivative of the polynomial)."""
        M = np.zeros((self.n, self.n), dtype=complex)
        for h, C in self.V_coeffs.items():
            M += (1j * h) * C * np.exp(1j * h * ky)
        return M

    def dA(self, ky):
        M = np.zeros((self.n, self.n), dtype=complex)
        for h, C in self.A_coeffs.items():
            M += (1j * h) * C * np.exp(1j * h * ky)
        return M

    def H(self, kx, ky):
        A = self.A(ky)
        return (self.V(ky) + A * np.exp(1j * kx)
                + A.conj().T * np.exp(-1j * kx))

    def H_stack(self, kxs, ky):
        """H at many kx for one ky, shape (len(kxs), n, n)."""
        kxs = np.asarray(kxs, dtype=float)
        V = self.V(ky)
        A = self.A(ky)
        ph = np.exp(1j * kxs)[:, None, None]
        return (V[None, :, :] + A[None, :, :] * ph
                + A.conj().T[None, :, :] * ph.conj())

    # -- serialization ----------------------------------------------------

    def to_config(self):
        def pack(coeffs):
            return [[h, C.real.tolist(), C.imag.tolist()]
                    for h, C in sorted(coeffs.items())]
        return {"n": self.n, "V_coeffs": pack(self.V_coeffs),
                "A_coeffs": pack(self.A_coeffs), "fermi": self.fermi_shift}

    @classmethod
    def from_config(cls, cfg):
        def unpack(rows):
            return {int(h): np.array(re) + 1j * np.array(im)
                    for h, re, im in rows}
        return cls(cfg["n"], unpack(cfg["V_coeffs"]), unpack(cfg["A_coeffs"]),
                   cfg.get("fermi", 0.0))

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls.from_config(json.load(f))


def build_harper(p, q, fermi_energy):
    """Harper-Hofstadter cell at flux p/q with the Fermi energy subtracted.

    Diagonal entries are 2 cos(2 pi p (i+2)/q - ky) - E_F for row i (this
    reproduces the q = 3 phases 4pi/3, 0, 2pi/3), nearest-neighbour hoppings
    are 1, and the wrap-around hopping sits in A as a single 1 in the
    lower-left corner.
    """
    p, q = int(p), int(q)
    if q < 2:
        raise ValueError("q must be at least 2")
    if math.gcd(p, q) != 1:
        raise ValueError("p and q must be coprime")
    phases = 2.0 * np.pi * p * (np.arange(q) + 2) / q
    hop = np.diag(np.ones(q - 1), 1) + np.diag(np.ones(q - 1), -1)
    V_coeffs = {
        0: hop.astype(complex) - fermi_energy * np.eye(q),
        -1: np.diag(np.exp(1j * phases)),
        +1: np.diag(np.exp(-1j * phases)),
    }
    A = np.zeros((q, q), dtype=complex)
    A[q - 1, 0] = 1.0
    return BlochModel(q, V_coeffs, {0: A}, fermi_shift=fermi_energy)


def build_constant(diag_energies):
    """Flat-band model: V = diag(diag_energies), A = 0, no k dependence."""
    d = np.asarray(diag_energies, dtype=float)
    if d.ndim != 1 or len(d) == 0:
        raise ValueError("diag_energies must be a nonempty 1d sequence")
    if np.any(d == 0.0):
        raise ValueError("zero on-site energy puts a band at the Fermi level")
    if len(np.unique(d)) != len(d):
        raise ValueError("repeated on-site energies give degenerate bands")
    n = len(d)
    return BlochModel(n, {0: np.diag(d).astype(complex)},
                      {0: np.zeros((n, n), dtype=complex)})


class GapReport:
    def __init__(self, band_gaps, min_abs_energy, gap_index_k, grid_resolution):
        self.band_gaps = band_gaps
        self.min_abs_energy = min_abs_energy
        self.gap_index_k = gap_index_k
        self.grid_resolution = grid_resolution

    @property
    def assumption_satisfied(self):
        return (all(g > 0 for _, g in self.band_gaps)
                and self.min_abs_energy > 0 and self.gap_index_k is not None)

    def __repr__(self):
        return ("GapReport(gaps=%s, min|E|=%.3g, k=%s, grid=%s)"
                % (self.band_gaps, self.min_abs_energy, self.gap_index_k,
                   self.grid_resolution))


def validate_gaps(model, Nx=64, Ny=64):
    """Sample the band structure on an Nx x Ny grid and check that all bands
    stay separated and that 0 sits in a gap (returns the gap index k with
    E_{k-1} < 0 < E_k, 1-based)."""
    if Nx < 8 or Ny < 8:
        raise ValueError("grid must be at least 8 x 8")
    kxs = np.linspace(0.0, 2.0 * np.pi, Nx, endpoint=False)
    kys = np.linspace(0.0, 2.0 * np.pi, Ny, endpoint=False)
    n = model.n
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    min_gap = np.full(max(n - 1, 1), np.inf)
    min_abs = np.inf
    for ky in kys:
        w = np.linalg.eigvalsh(model.H_stack(kxs, ky))
        lo = np.minimum(lo, w.min(axis=0))
        hi = np.maximum(hi, w.max(axis=0))
        if n > 1:
            min_gap = np.minimum(min_gap, (w[:, 1:] - w[:, :-1]).min(axis=0))
        min_abs = min(min_abs, np.abs(w).min())
    band_gaps = [(j + 1, float(min_gap[j])) for j in range(n - 1)]
    # k is determined by how many bands lie entirely below zero
    below = int(np.sum(hi < 0.0))
    above = int(np.sum(lo > 0.0))
    gap_index_k = below + 1 if below + above == n else None
    return GapReport(band_gaps, float(min_abs), gap_index_k, (Nx, Ny))
