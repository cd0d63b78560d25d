"""Shared fixtures plus two independent helpers used by the acceptance suite.

ladder_rungs/ladder_info rebuild the asymptotic rung ladder directly from the
loop quadratures so tests can reject ky values where families collide.
sturm_events counts eigenvalue crossings of a fiducial level on the
half-lattice tridiagonal by LDL bisection; it never touches the tracking
code, which makes it a genuinely separate route to the flow integers.
"""

import numpy as np
import pytest

from edgespectra.model import build_harper
from edgespectra.monodromy import phase_data


@pytest.fixture(scope="session")
def harper():
    return build_harper(1, 3, 1.5)


@pytest.fixture(scope="session")
def harper_lo():
    return build_harper(1, 3, -1.5)


def ladder_rungs(model, ky, window, margin=0.6, phases=None):
    """All family rungs (E, j, sign c_j) landing in window padded by margin."""
    ph = phases if phases is not None else phase_data(model, ky)
    lo, hi = window[0] - margin, window[1] + margin
    rungs = []
    for j in range(model.n):
        c, th, mu = ph.c[j], ph.theta[j], ph.mu[j]
        ma = (lo * c - th - mu) / (2.0 * np.pi)
        mb = (hi * c - th - mu) / (2.0 * np.pi)
        m0, m1 = int(np.ceil(min(ma, mb))), int(np.floor(max(ma, mb)))
        for m in range(m0, m1 + 1):
            E = (2.0 * np.pi * m + th + mu) / c
            if lo <= E <= hi:
                rungs.append((float(E), j, 1 if c > 0 else -1))
    rungs.sort()
    return rungs


def ladder_info(model, ky, window, margin=0.6, phases=None):
    """(min inter-family gap, min same-side inter-family gap, all present).

    Same-family rungs sit 2 pi / |c_j| apart and never collide; only pairs
    from different families matter.  Same-side pairs (equal sign of c_j)
    hybridize under the exact solve, opposite sides merely cross.
    """
    rungs = ladder_rungs(model, ky, window, margin, phases)
    gany = gsame = np.inf
    for a in range(len(rungs)):
        for b in range(a + 1, len(rungs)):
            if rungs[a][1] == rungs[b][1]:
                continue
            g = abs(rungs[a][0] - rungs[b][0])
            gany = min(gany, g)
            if rungs[a][2] == rungs[b][2]:
                gsame = min(gsame, g)
    present = all(any(r[1] == j for r in rungs) for j in range(model.n))
    return gany, gsame, present


# --- half-lattice Sturm counter, specialized to the 1/3 hopping model ------

_PHASE3 = 2.0 * np.pi * (np.arange(3) + 2) / 3.0


def _sturm_arrays(ef, side, L):
    xs = np.arange(0, L + 1) if side == "right" else np.arange(-L, 0)
    ee = np.empty(3 * len(xs))
    ee[0::3] = xs
    ee[1::3] = xs
    ee[2::3] = xs + 1
    e = ee[:-1]
    xrep = np.repeat(xs, 3)
    tile = np.tile(np.arange(3), len(xs))

    def dmat(kys):
        vd = 2.0 * np.cos(_PHASE3[:, None] - kys[None, :]) - ef
        return xrep[:, None] * vd[tile, :]

    return dmat, e


def _sturm_counts(dmat, e, kys, F):
    """Eigenvalues below F per ky, by the LDL pivot-sign recurrence."""
    kys = np.atleast_1d(np.asarray(kys, dtype=float))
    d = dmat(kys)
    e2 = e ** 2
    q = d[0] - F
    cnt = (q < 0).astype(np.int64)
    for i in range(1, d.shape[0]):
        q = np.where(np.abs(q) < 1e-12, -1e-12, q)
        q = d[i] - F - e2[i - 1] / q
        cnt += q < 0
    return cnt


def _sturm_events(dmat, e, F, Ny):
    """ky locations where the below-F count jumps, with signed jump size."""
    kys = np.linspace(0.0, 2.0 * np.pi, Ny + 1)
    N = _sturm_counts(dmat, e, kys, F)
    a, b = kys[:-1], kys[1:]
    Na, Nb = N[:-1], N[1:]
    for _ in range(36):
        multi = np.abs(Nb - Na) > 1
        if not multi.any():
            break
        mid = 0.5 * (a[multi] + b[multi])
        Nm = _sturm_counts(dmat, e, mid, F)
        a = np.concatenate([a[~multi], a[multi], mid])
        b = np.concatenate([b[~multi], mid, b[multi]])
        Na = np.concatenate([Na[~multi], Na[multi], Nm])
        Nb = np.concatenate([Nb[~multi], Nm, Nb[multi]])
    act = Na != Nb
    a, b, Na, Nb = a[act], b[act], Na[act], Nb[act]
    for _ in range(18):
        mid = 0.5 * (a + b)
        Nm = _sturm_counts(dmat, e, mid, F)
        hit_lo = Nm == Na
        a = np.where(hit_lo, mid, a)
        b = np.where(hit_lo, b, mid)
    return list(zip(0.5 * (a + b), (Na - Nb).astype(int)))


def sturm_side_flow(ef, side, F, L=320, Ny=1200):
    """Net fiducial crossing count on one half-lattice, wall events removed.

    Events that persist between truncation lengths L and 0.8 L (same ky to
    2e-5, same sign) are physical; wall resonances move with L and drop out.
    """
    evL = _sturm_events(*_sturm_arrays(ef, side, L), F, Ny)
    evS = _sturm_events(*_sturm_arrays(ef, side, int(0.8 * L)), F, Ny)
    used = set()
    net = 0
    for ky, s in evL:
        for i, (k2, s2) in enumerate(evS):
            if i not in used and abs(k2 - ky) < 2e-5 and s2 == s:
                used.add(i)
                net += s
                break
    return net
