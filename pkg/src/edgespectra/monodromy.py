"""Monodromy of the Fourier-side weighted operator.

On the Fourier side the weighted Hamiltonian acts as i H(kx) d/dkx + M(kx)
with M = A* e^{-i kx}, so E is an eigenvalue iff the propagator of

    i dpsi/dkx = (E H^{-1} - H^{-1} M) psi

has eigenvalue 1 after a full period.  The propagator is integrated with a
4th-order commutator-free exponential scheme; the step count grows linearly
with |E| so the accumulated phase error stays E-uniform.
"""

import numpy as np

SQ3 = np.sqrt(3.0)
# 4th-order commutator-free coefficients (two Gauss nodes)
CF4_NODES = (0.5 - SQ3 / 6.0, 0.5 + SQ3 / 6.0)
CF4_A1 = 0.25 + SQ3 / 6.0
CF4_A2 = 0.25 - SQ3 / 6.0

_PADE7 = (17297280.0, 8648640.0, 1995840.0, 277200.0,
          25200.0, 1512.0, 56.0, 1.0)


def expm_stack(X):
    """Matrix exponential of a (..., n, n) stack, Pade [7/7] with scaling."""
    X = np.asarray(X, dtype=complex)
    nrm = np.abs(X).sum(axis=-1).max(axis=-1)
    s = np.zeros(nrm.shape, dtype=int)
    big = nrm > 0.5
    s[big] = np.ceil(np.log2(nrm[big] / 0.5)).astype(int)
    Xs = X / (2.0 ** s)[..., None, None]
    b = _PADE7
    I = np.broadcast_to(np.eye(X.shape[-1]), X.shape)
    X2 = Xs @ Xs
    X4 = X2 @ X2
    X6 = X2 @ X4
    U = Xs @ (b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * I)
    V = b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * I
    R = np.linalg.solve(V - U, V + U)
    for _ in range(int(s.max()) if s.size else 0):
        sq = s > 0
        R[sq] = R[sq] @ R[sq]
        s = s - 1
    return R


class Propagator:
    """U_E(kx) samples on the uniform step grid, U[0] = identity."""

    def __init__(self, E, ky, samples, step_count):
        self.E = E
        self.ky = ky
        self.samples = samples
        self.step_count = step_count

    @property
    def end(self):
        return self.samples[-1]

    @property
    def kx_grid(self):
        return np.linspace(0.0, 2.0 * np.pi, self.step_count + 1)


def step_count_for(E, Nx):
    return max(int(Nx), int(np.ceil(Nx * max(1.0, abs(E)) / (2.0 * np.pi))))


def _generators(model, ky, kxs):
    """H^{-1} and H^{-1}M at the CF4 nodes of every step."""
    H = model.H_stack(kxs, ky)
    Hinv = np.linalg.inv(H)
    A = model.A(ky)
    M = A.conj().T[None, :, :] * np.exp(-1j * kxs)[:, None, None]
    return Hinv, Hinv @ M


def propagate_many(model, ky, Es, Nx=64, keep_samples=False):
    """Propagators for a batch of energies sharing one step grid.

    The step count is set by the largest |E| in the batch.  Returns the end
    monodromies, shape (len(Es), n, n), or the full sample stacks.
    """
    Es = np.atleast_1d(np.asarray(Es, dtype=float))
    steps = step_count_for(np.abs(Es).max(), Nx)
    h = 2.0 * np.pi / steps
    base = np.arange(steps) * h
    n = model.n
    g1_inv, g1_m = _generators(model, ky, base + CF4_NODES[0] * h)
    g2_inv, g2_m = _generators(model, ky, base + CF4_NODES[1] * h)
    U = np.broadcast_to(np.eye(n, dtype=complex), (len(Es), n, n)).copy()
    out = np.empty((steps + 1, len(Es), n, n), dtype=complex) if keep_samples \
        else None
    if keep_samples:
        out[0] = U
    E = Es[:, None, None]
    for i in range(steps):
        G1 = -1j * (E * g1_inv[i] - g1_m[i])
        G2 = -1j * (E * g2_inv[i] - g2_m[i])
        X1 = h * (CF4_A1 * G1 + CF4_A2 * G2)
        X2 = h * (CF4_A2 * G1 + CF4_A1 * G2)
        U = expm_stack(X2) @ expm_stack(X1) @ U
        if keep_samples:
            out[i + 1] = U
    return (out, steps) if keep_samples else (U, steps)


def propagate(model, ky, E, Nx=64):
    if Nx < 64:
        raise ValueError("Nx must be at least 64")
    samples, steps = propagate_many(model, ky, [E], Nx, keep_samples=True)
    return Propagator(E, ky, samples[:, 0], steps)


def defect_of(U_end):
    """Distance of the closest monodromy eigenvalue to 1."""
    w = np.linalg.eigvals(U_end)
    return np.abs(w - 1.0).min(axis=-1)


def defects(model, ky, Es, Nx=64):
    U, _ = propagate_many(model, ky, Es, Nx)
    return defect_of(U)


class SpectralPoint:
    def __init__(self, E, ky, defect, m=None, j=None):
        self.E = E
        self.ky = ky
        self.defect = defect
        self.m = m
        self.j = j

    def __repr__(self):
        lab = "" if self.m is None else ", m=%d, j=%d" % (self.m, self.j)
        return "SpectralPoint(E=%.6f, defect=%.1e%s)" % (
            self.E, self.defect, lab)


class PhaseData:
    """Loop quadratures per band: theta_j, c_j = int E_j^{-1} dkx, and the
    current-type correction mu_j = Re int E_j^{-1} <phi|M|phi> dkx."""

    def __init__(self, theta, c, mu, ky):
        self.theta = theta
        self.c = c
        self.mu = mu
        self.ky = ky


def phase_data(model, ky, Nx=256, band_data=None):
    from . import bands as _bands
    bd = band_data if band_data is not None else _bands.decompose(
        model, ky, Nx)
    w = bd.energies
    P = bd.vectors
    A = model.A(ky)
    Mk = A.conj().T[None, :, :] * np.exp(-1j * bd.kx_grid)[:, None, None]
    c = (2.0 * np.pi) * np.mean(1.0 / w, axis=0)
    me = np.einsum('kib,kij,kjb->kb', P.conj(), Mk, P)
    mu = (2.0 * np.pi) * np.mean(np.real(me) / w, axis=0)
    return PhaseData(bd.berry_phase, c, mu, ky)


class AsymptoticSpectrum:
    def __init__(self, points, window):
        self.points = points
        self.window = window

    def energies(self):
        return np.array([p.E for p in self.points])


def asymptotic_spectrum(model, ky, window, Nx=256, phases=None):
    """Ladder approximation E(m, j) = (2 pi m + theta_j + mu_j) / c_j for
    every rung that lands inside the window."""
    ph = phases if phases is not None else phase_data(model, ky, Nx)
    lo, hi = window
    pts = []
    for j in range(model.n):
        c, th, mu = ph.c[j], ph.theta[j], ph.mu[j]
        ma = (lo * c - th - mu) / (2.0 * np.pi)
        mb = (hi * c - th - mu) / (2.0 * np.pi)
        m0, m1 = int(np.ceil(min(ma, mb))), int(np.floor(max(ma, mb)))
        for m in range(m0, m1 + 1):
            E = (2.0 * np.pi * m + th + mu) / c
            if lo <= E <= hi:
                pts.append(SpectralPoint(E, ky, 0.0, m, j))
    pts.sort(key=lambda p: p.E)
    return AsymptoticSpectrum(pts, window)


def min_branch_spacing(model, ky, Nx=256, phases=None):
    ph = phases if phases is not None else phase_data(model, ky, Nx)
    return np.pi / np.abs(ph.c).max()


def _golden_min(f, a, b, iters):
    """Vectorized golden-section minimization on bracket arrays.

    Re-evaluates both interior points each iteration; f is batched so the
    extra evaluation is cheaper than the bookkeeping it saves.
    """
    g = (np.sqrt(5.0) - 1.0) / 2.0
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc = f(c)
    fd = f(d)
    for _ in range(iters):
        left = fc < fd
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        c = b - g * (b - a)
        d = a + g * (b - a)
        fc = f(c)
        fd = f(d)
    return 0.5 * (a + b)


def exact_spectrum(model, ky, window, scan_step=None, Nx=64, tol=1e-8,
                   label=True):
    """Roots of the monodromy condition in the window.

    Scans the defect g(E) = min_j |lambda_j(U_E(2pi)) - 1|, isolates local
    minima below 0.5 and refines each by golden section.  Roots that refine
    to a defect above `tol` are reported with their achieved defect (callers
    treat them as failures).
    """
    lo, hi = window
    ph = phase_data(model, ky)
    if scan_step is None:
        scan_step = 0.5 * np.pi / np.abs(ph.c).max()
    grid = np.arange(lo - scan_step, hi + 2.0 * scan_step, scan_step)
    gv = defects(model, ky, grid, Nx)
    idx = [i for i in range(1, len(grid) - 1)
           if gv[i] < 0.5 and gv[i] <= gv[i - 1] and gv[i] <= gv[i + 1]]
    a = list(grid[[i - 1 for i in idx]])
    b = list(grid[[i + 1 for i in idx]])
    scanned = len(a)
    # two close branches can share a scan cell and hide one minimum, so
    # also bracket every ladder rung, each bracket narrow enough to
    # exclude the neighbouring rungs (the rung misses its root by O(1/E),
    # far less than typical inter-rung distances)
    rungs = asymptotic_spectrum(model, ky, (lo - scan_step, hi + scan_step),
                                phases=ph).energies()
    rungs = np.sort(rungs)
    for i, Ea in enumerate(rungs):
        dist = np.inf
        if i > 0:
            dist = min(dist, Ea - rungs[i - 1])
        if i + 1 < len(rungs):
            dist = min(dist, rungs[i + 1] - Ea)
        delta = min(0.45 * dist, 0.8 * scan_step)
        if delta < 5e-3:
            continue
        a.append(Ea - delta)
        b.append(Ea + delta)
    if not a:
        return []
    f = lambda E: defects(model, ky, E, Nx)
    roots = _golden_min(f, np.array(a), np.array(b), 60)
    res = defects(model, ky, roots, Nx)
    # a second refinement round for stragglers
    bad = res > tol
    if np.any(bad):
        roots[bad] = _golden_min(f, roots[bad] - 0.5 * scan_step,
                                 roots[bad] + 0.5 * scan_step, 100)
        res = defects(model, ky, roots, Nx)
    # scan-born failures are reported with their achieved defect; a ladder
    # bracket holding no root just converges to nothing and is discarded
    pts = [SpectralPoint(E, ky, r) for i, (E, r) in enumerate(zip(roots, res))
           if lo <= E <= hi and (r <= tol or i < scanned)]
    # merge duplicates from adjacent scan cells
    pts.sort(key=lambda p: p.E)
    dedup = []
    for p in pts:
        if dedup and abs(p.E - dedup[-1].E) < 10 * max(tol, 1e-10):
            if p.defect < dedup[-1].defect:
                dedup[-1] = p
            continue
        dedup.append(p)
    if label:
        _label_points(model, ky, dedup)
    return dedup


def _label_points(model, ky, points):
    if not points:
        return
    ph = phase_data(model, ky)
    for p in points:
        best = (np.inf, None, None)
        for j in range(model.n):
            c, th, mu = ph.c[j], ph.theta[j], ph.mu[j]
            m = int(np.round((p.E * c - th - mu) / (2.0 * np.pi)))
            E = (2.0 * np.pi * m + th + mu) / c
            d = abs(E - p.E)
            if d < best[0]:
                best = (d, m, j)
        spacing = np.pi / np.abs(ph.c).max()
        if best[0] < spacing:
            p.m, p.j = best[1], best[2]


def adiabatic_propagator(model, ky, E, Nx=256):
    """Band-diagonal approximation of the propagator (valid at large E > 0):
    each transported band picks up the dynamical phase -E int E_j^{-1} plus
    the current-type correction int E_j^{-1} <phi|M|phi>."""
    if E <= 0:
        raise ValueError("adiabatic comparison is set up for positive E")
    from . import bands as _bands
    bd = _bands.decompose(model, ky, Nx)
    w = bd.energies
    P = bd.vectors
    kxs = bd.kx_grid
    steps = len(kxs)
    h = 2.0 * np.pi / steps
    A = model.A(ky)
    Mk = A.conj().T[None, :, :] * np.exp(-1j * kxs)[:, None, None]
    me = np.real(np.einsum('kib,kij,kjb->kb', P.conj(), Mk, P))
    # cumulative quadratures from 0 to each grid point (trapezoid-free:
    # left Riemann sums are spectrally fine only for full loops, so use
    # cumulative trapezoid on the open grid)
    inv = 1.0 / w
    cur = me / w
    def cumq(f):
        out = np.zeros((steps + 1, model.n))
        out[1:] = np.cumsum(0.5 * (f + np.roll(f, -1, axis=0)), axis=0) * h
        return out
    Ic = cumq(inv)
    Im = cumq(cur)
    Pc = np.concatenate([P, P[:1] * np.exp(1j * bd.berry_phase)[None, None, :]])
    phase = np.exp(-1j * E * Ic + 1j * Im)
    samples = np.einsum('kib,kb,jb->kij', Pc, phase, P[0].conj())
    return Propagator(E, ky, samples, steps)


def eigenfunction(model, point, Nx=64):
    """Propagated eigenfunction psi(kx) = U_E(kx) psi0, unit L2 norm.

    psi0 is the monodromy eigenvector for the eigenvalue nearest 1; a
    degenerate nearest eigenvalue (gap < 1e-6) raises.
    """
    if point.defect >= 1e-8:
        raise ValueError("point defect %.2e too large" % point.defect)
    prop = propagate(model, point.ky, point.E, Nx)
    w, v = np.linalg.eig(prop.end)
    order = np.argsort(np.abs(w - 1.0))
    if len(w) > 1 and abs(w[order[1]] - w[order[0]]) < 1e-6:
        raise RuntimeError("degenerate monodromy eigenvalue at E=%.6f"
                           % point.E)
    psi0 = v[:, order[0]]
    psi = prop.samples @ psi0
    h = 2.0 * np.pi / prop.step_count
    norm = np.sqrt(h * np.sum(np.abs(psi[:-1]) ** 2))
    return prop.kx_grid, psi / norm
