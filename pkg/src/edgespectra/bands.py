"""Band decomposition along kx with a parallel-transport gauge.

The transported frame fixes the phase of each eigenvector against its
predecessor on the kx grid, so the only phase left after a full loop is the
Berry phase theta_j(ky).  Chern numbers are the windings of theta_j over a
ky period, counted with the orientation that makes the Harper 1/3 bands come
out (-1, 2, -1); an independent plaquette (Wilson-loop) computation in the
same orientation must agree exactly.
"""

import numpy as np


class GapCollapseError(RuntimeError):
    pass


class BandData:
    """Eigendecomposition of H(., ky) on a uniform kx grid.

    Attributes
    ----------
    kx_grid : (Nx,) grid of [0, 2pi), endpoint excluded.
    energies : (Nx, n) sorted ascending along the band axis.
    vectors : (Nx, n, n) transported frame; vectors[i, :, j] is band j.
    berry_phase : (n,) loop phase theta_j in (-pi, pi]; the transported
        endpoint satisfies phi_j(2pi) = e^{i theta_j} phi_j(0).
    """

    def __init__(self, ky, kx_grid, energies, vectors, berry_phase):
        self.ky = ky
        self.kx_grid = kx_grid
        self.energies = energies
        self.vectors = vectors
        self.berry_phase = berry_phase

    @property
    def n(self):
        return self.energies.shape[1]


def decompose(model, ky, Nx=256):
    if Nx < 32:
        raise ValueError("Nx must be at least 32")
    kxs = np.linspace(0.0, 2.0 * np.pi, Nx, endpoint=False)
    H = model.H_stack(kxs, ky)
    w, v = np.linalg.eigh(H)
    gaps = np.diff(w, axis=1)
    if gaps.size and gaps.min() < 1e-8:
        i = np.unravel_index(np.argmin(gaps), gaps.shape)
        raise GapCollapseError(
            "bands %d and %d separated by %.2e at kx=%.4f, ky=%.4f"
            % (i[1] + 1, i[1] + 2, gaps[i], kxs[i[0]], ky))
    # projective transport: strip the relative phase between neighbours
    P = v.copy()
    for i in range(1, Nx):
        ov = np.sum(P[i - 1].conj() * P[i], axis=0)
        P[i] *= (ov.conj() / np.abs(ov))[None, :]
    # close the loop through kx = 2pi, where H coincides with kx = 0
    ov = np.sum(P[0].conj() * P[-1], axis=0)
    theta = np.angle(ov)
    return BandData(ky, kxs, w, P, theta)


class ChernRecord:
    def __init__(self, chern, windings_raw, max_rounding_error, reliable):
        self.chern = chern
        self.windings_raw = windings_raw
        self.max_rounding_error = max_rounding_error
        self.reliable = reliable

    def __repr__(self):
        return "ChernRecord(%s, raw=%s, err=%.2e)" % (
            self.chern, np.round(self.windings_raw, 4),
            self.max_rounding_error)


def _plaquette_chern(model, N):
    """Gauge-invariant lattice Chern numbers (plaquette field strength).

    The plaquette is traversed ky-first; this orientation is the package
    convention for all windings.
    """
    ks = np.linspace(0.0, 2.0 * np.pi, N, endpoint=False)
    n = model.n
    U = np.empty((N, N, n, n), dtype=complex)
    for b, ky in enumerate(ks):
        _, v = np.linalg.eigh(model.H_stack(ks, ky))
        U[:, b] = v
    Ux = np.roll(U, -1, axis=0)
    Uy = np.roll(U, -1, axis=1)
    Uxy = np.roll(Ux, -1, axis=1)
    l1 = np.einsum('abij,abij->abj', U.conj(), Uy)
    l2 = np.einsum('abij,abij->abj', Uy.conj(), Uxy)
    l3 = np.einsum('abij,abij->abj', Uxy.conj(), Ux)
    l4 = np.einsum('abij,abij->abj', Ux.conj(), U)
    F = np.angle(l1 * l2 * l3 * l4)
    return F.sum(axis=(0, 1)) / (2.0 * np.pi)


def berry_phases(model, Ny=201, Nx=256):
    """theta_j on a ky grid with a continuous lift; returns (kys, lifted)."""
    kys = np.linspace(0.0, 2.0 * np.pi, Ny)
    th = np.empty((Ny, model.n))
    for t, ky in enumerate(kys):
        th[t] = decompose(model, ky, Nx).berry_phase
        if t > 0:
            th[t] -= 2.0 * np.pi * np.round((th[t] - th[t - 1])
                                            / (2.0 * np.pi))
    return kys, th


def chern_numbers(model, Nx=256, Ny=201):
    """Integer Chern numbers from the theta_j windings, cross-checked
    against the plaquette computation; disagreement raises."""
    kys, th = berry_phases(model, Ny, Nx)
    # winding counted in the package orientation (ky decreasing)
    raw = -(th[-1] - th[0]) / (2.0 * np.pi)
    chern = np.round(raw).astype(int)
    err = float(np.abs(raw - chern).max()) if len(raw) else 0.0
    jumps = np.abs(np.diff(th, axis=0)).max() if Ny > 1 else 0.0
    reliable = bool(err < 0.1 and jumps < np.pi)
    plaq = np.round(_plaquette_chern(model, max(24, min(Nx, 64)))).astype(int)
    if not np.array_equal(plaq, chern):
        raise RuntimeError("winding %s and plaquette %s Chern numbers "
                           "disagree" % (chern.tolist(), plaq.tolist()))
    return ChernRecord(chern, raw, err, reliable)


def bulk_ranges(model, ky, Nk=512):
    """Per-band (min, max) of E_j(., ky), for in-gap tests."""
    kxs = np.linspace(0.0, 2.0 * np.pi, Nk, endpoint=False)
    w = np.linalg.eigvalsh(model.H_stack(kxs, ky))
    return w.min(axis=0), w.max(axis=0)
