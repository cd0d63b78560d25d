"""Real-space truncations of the weighted operator and the plain edge.

Site x of the weighted chain carries the diagonal block x*V(ky); the bond
between x and x+1 carries (x+1)*A(ky).  The bond weight is anchored at the
right site: these are exactly the matrix elements of i H(kx) d/dkx + A* e^{-i
kx} in the e^{-i x kx} mode basis, so mode truncation and site truncation are
the same matrix and the monodromy solver can cross-check the spectra.  With
the weight anchored at the left site instead the two routes disagree at O(1).

Kinds: modulated_full on x in [-L, L], modulated_edge on [1, L] (the bond
{0, 1} belongs to the kept range, the bond {-1, 0} has weight 0, so the cut
is exact), plain_edge = the unweighted half chain on [1, L].
"""

import numpy as np
from scipy.linalg import eigh, eig_banded, eigh_tridiagonal, \
    eigvalsh_tridiagonal

try:
    from scipy.linalg.lapack import dstebz as _dstebz
except ImportError:
    _dstebz = None

KINDS = ("modulated_full", "modulated_edge", "plain_edge")


class TruncatedOperator:
    """Block-tridiagonal truncation in lower banded storage."""

    def __init__(self, model, kind, L, ky, sites, band):
        self.model = model
        self.kind = kind
        self.L = L
        self.ky = ky
        self.sites = sites
        self.band = band          # (2n, n*len(sites)) lower banded

    @property
    def n_sites(self):
        return len(self.sites)

    @property
    def dim(self):
        return self.band.shape[1]

    def dense(self):
        N = self.dim
        H = np.zeros((N, N), dtype=complex)
        for nu in range(self.band.shape[0]):
            idx = np.arange(N - nu)
            H[idx + nu, idx] = self.band[nu, :N - nu]
        H = H + np.tril(H, -1).conj().T
        return H

    def tridiagonal(self):
        """(d, e) if the matrix is real tridiagonal, else None."""
        if self.band.shape[0] > 2 and np.abs(self.band[2:]).max() > 1e-14:
            return None
        if np.abs(self.band.imag).max() > 1e-14:
            return None
        d = self.band[0].real.copy()
        e = self.band[1, :-1].real.copy()
        return d, e

    def site_mass(self, vec):
        n = self.model.n
        return (np.abs(vec) ** 2).reshape(-1, n).sum(axis=1)

    def outer_site_index(self, boundary_fraction):
        """Indices of the outermost fraction of sites at the large-|x|
        truncation end(s)."""
        ns = self.n_sites
        k = max(1, int(np.ceil(boundary_fraction * ns)))
        order = np.argsort(np.abs(self.sites), kind="stable")
        return np.sort(order[-k:])


def build_truncation(model, kind, L, ky):
    if kind not in KINDS:
        raise ValueError("unknown kind %r" % (kind,))
    L = int(L)
    if L < 1:
        raise ValueError("L must be positive")
    if kind == "modulated_full":
        sites = np.arange(-L, L + 1)
    else:
        sites = np.arange(1, L + 1)
    V = model.V(ky)
    A = model.A(ky)
    band = assemble_band(sites, V, A, modulated=kind != "plain_edge")
    return TruncatedOperator(model, kind, L, ky, sites, band)


def assemble_band(sites, V, A, modulated=True):
    """Lower banded storage of the block-tridiagonal chain (vectorized)."""
    n = V.shape[0]
    ns = len(sites)
    N = n * ns
    wd = sites.astype(float) if modulated else np.ones(ns)
    wb = (sites[:-1] + 1).astype(float) if modulated else np.ones(ns - 1)
    band = np.zeros((2 * n, N), dtype=complex)
    for c in range(n):
        for r in range(c, n):
            if V[r, c] != 0:
                band[r - c, c::n] += wd * V[r, c]
        for r in range(n):
            Adag = np.conj(A[c, r])       # lower block (x+1, x) = wb * A^H
            if Adag != 0 and ns > 1:
                band[n + r - c, c:(ns - 1) * n:n] += wb * Adag
    if np.abs(band.imag).max() < 1e-14:
        band = band.real.astype(complex)
    return band


def dense_spectrum(op, vectors=False):
    """Full Hermitian eigendecomposition, ascending eigenvalues."""
    if op.dim > 6000:
        raise ValueError("dimension %d beyond dense-solve scale" % op.dim)
    if vectors:
        w, v = eigh(op.dense())
        return w, v
    return np.linalg.eigvalsh(op.dense())


def window_spectrum(op, window, vectors=False):
    """Eigenvalues (optionally vectors) inside an open energy window.

    Uses the tridiagonal fast path when the truncation happens to be a
    plain chain (Harper at q = 3 is), banded solvers otherwise.
    """
    lo, hi = window
    td = op.tridiagonal()
    if td is not None:
        d, e = td
        if vectors:
            return eigh_tridiagonal(d, e, select="v", select_range=(lo, hi))
        return eigvalsh_tridiagonal(d, e, select="v", select_range=(lo, hi))
    ab = op.band
    w, v = eig_banded(ab, lower=True, select="v", select_range=(lo, hi))
    if vectors:
        return w, v
    return w


def count_below(op, F):
    """Number of eigenvalues below F (Sturm count on the chain path)."""
    td = op.tridiagonal()
    if td is not None and _dstebz is not None:
        d, e = td
        m, w, ib, isp, info = _dstebz(d, e, 1, -1e30, F, 1, 1, 0.0, b"E")
        return int(m)
    return len(window_spectrum(op, (-1e30, F)))


def spurious_filter(op, eigenvector, boundary_fraction=0.05):
    """True iff the vector leans on the artificial truncation boundary.

    Mass threshold 1e-3 on the outer boundary_fraction of sites at the
    large-|x| end(s); genuine eigenvectors of the infinite-volume operator
    decay there, discretization artifacts do not.
    """
    mass = op.site_mass(eigenvector)
    total = mass.sum()
    if total <= 0:
        return False
    outer = mass[op.outer_site_index(boundary_fraction)].sum()
    return bool(outer / total > 1e-3)


def bulk_band_extents(model, Nk=96, Ny=96):
    """Global [min, max] of every Bloch band over the Brillouin zone."""
    kxs = np.linspace(0.0, 2.0 * np.pi, Nk, endpoint=False)
    lo = np.full(model.n, np.inf)
    hi = np.full(model.n, -np.inf)
    for ky in np.linspace(0.0, 2.0 * np.pi, Ny, endpoint=False):
        w = np.linalg.eigvalsh(model.H_stack(kxs, ky))
        lo = np.minimum(lo, w.min(axis=0))
        hi = np.maximum(hi, w.max(axis=0))
    return lo, hi


class EdgeModeRecord:
    def __init__(self, branch_id, k_minus, k_plus, chirality, gap_index):
        self.branch_id = branch_id
        self.k_minus = k_minus
        self.k_plus = k_plus
        self.chirality = chirality
        self.gap_index = gap_index

    def __repr__(self):
        return ("EdgeModeRecord(id=%d, gap=%d, k-=%.3f, k+=%.3f, chi=%+d)"
                % (self.branch_id, self.gap_index, self.k_minus,
                   self.k_plus, self.chirality))


class EdgeDispersion:
    def __init__(self, gaps, branches, records, warnings):
        self.gaps = gaps            # list of (gap_lo, gap_hi)
        self.branches = branches    # branch_id -> (ky array, E array)
        self.records = records
        self.warnings = warnings

    def chirality_sum(self, gap_index):
        return sum(r.chirality for r in self.records
                   if r.gap_index == gap_index)


def edge_dispersion(model, L=150, Ny=200):
    """In-gap dispersion of the unweighted half chain.

    Solves plain_edge over a ky grid, keeps in-gap eigenpairs that do not
    lean on the far truncation wall (the wall hosts mirror edge modes of
    opposite chirality that would cancel the count), chains the points into
    branches, and reads off the chirality of each spanning branch.
    """
    lo, hi = bulk_band_extents(model)
    gaps = []
    for j in range(model.n - 1):
        if lo[j + 1] > hi[j]:
            gaps.append((hi[j], lo[j + 1]))
        else:
            gaps.append(None)
    kys = np.linspace(0.0, 2.0 * np.pi, Ny, endpoint=False)
    pergap_pts = {g: [] for g in range(len(gaps)) if gaps[g] is not None}
    for t, ky in enumerate(kys):
        op = build_truncation(model, "plain_edge", L, ky)
        for g in pergap_pts:
            glo, ghi = gaps[g]
            pad = 1e-9
            w, v = window_spectrum(op, (glo + pad, ghi - pad), vectors=True)
            for i in range(len(w)):
                if not spurious_filter(op, v[:, i]):
                    pergap_pts[g].append((t, w[i]))
    branches = {}
    records = []
    warnings = []
    bid = 0
    for g, pts in pergap_pts.items():
        glo, ghi = gaps[g]
        width = ghi - glo
        jump_tol = max(0.35 * width, 8.0 * width / Ny)
        chains = _chain_points(pts, Ny, jump_tol, warnings)
        span_tol = 0.2 * width
        for ts, Es in chains:
            kk = kys[np.mod(ts, Ny)] + 2.0 * np.pi * (np.array(ts) // Ny)
            Es = np.array(Es)
            branches[bid] = (kk, Es)
            spans = Es.min() <= glo + span_tol and Es.max() >= ghi - span_tol
            k_minus = kk[np.argmin(Es)]
            k_plus = kk[np.argmax(Es)]
            if spans:
                chi = 1 if k_minus < k_plus else -1
            else:
                chi = 0
            records.append(EdgeModeRecord(bid, k_minus, k_plus, chi, g))
            bid += 1
    return EdgeDispersion(gaps, branches, records, warnings)


def _chain_points(pts, Ny, jump_tol, warnings):
    """Greedy nearest-continuation chaining of (grid index, E) points,
    cyclic across the ky period."""
    per_t = {}
    for t, E in pts:
        per_t.setdefault(t, []).append(E)
    open_ch = []
    done = []
    for t in range(Ny):
        here = sorted(per_t.get(t, []))
        taken = [False] * len(here)
        still = []
        for ts, Es in open_ch:
            if ts[-1] == t - 1:
                cand = [i for i in range(len(here)) if not taken[i]
                        and abs(here[i] - Es[-1]) < jump_tol]
                if cand:
                    i = min(cand, key=lambda i: abs(here[i] - Es[-1]))
                    taken[i] = True
                    ts.append(t)
                    Es.append(here[i])
                    still.append((ts, Es))
                    continue
            done.append((ts, Es))
        open_ch = still
        for i in range(len(here)):
            if not taken[i]:
                open_ch.append(([t], [here[i]]))
    done.extend(open_ch)
    # merge across the period seam: a chain ending at Ny-1 may continue as
    # a chain starting at 0, with ky advanced by a period
    tails = [i for i, c in enumerate(done) if c[0][-1] == Ny - 1]
    heads = [i for i, c in enumerate(done) if c[0][0] == 0]
    absorbed = set()
    for it in tails:
        ts, Es = done[it]
        cand = [ih for ih in heads if ih != it and ih not in absorbed
                and abs(done[ih][1][0] - Es[-1]) < jump_tol]
        if cand:
            ih = min(cand, key=lambda ih: abs(done[ih][1][0] - Es[-1]))
            ts.extend([t + Ny for t in done[ih][0]])
            Es.extend(done[ih][1])
            absorbed.add(ih)
    merged = []
    for i, (ts, Es) in enumerate(done):
        if i in absorbed:
            continue
        if len(ts) >= 3:
            merged.append((ts, Es))
        else:
            warnings.append("unchained in-gap fragment of %d points near "
                            "E=%.3f" % (len(ts), Es[0]))
    return merged
