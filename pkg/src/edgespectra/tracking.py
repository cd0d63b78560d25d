"""Continuation of eigenpairs of the truncated operator family across ky.

The pair (E, psi) obeys psi' = -(H - E)^+ H' psi and E' = psi* H' psi.  The
pseudoinverse acts as a banded solve with the current eigendirection
deflated: project H' psi off psi, solve the shifted system, project the
solution off psi again.  The right-hand side then has no component on the
near-kernel, so the solve stays accurate even though the matrix is close to
singular.

That only holds when (E, psi) sits on the eigen-manifold to machine
accuracy: a shift that agrees with a true eigenvalue while the vector is
misaligned gets the misalignment amplified by 1/defect.  RK4's raw Taylor
stages hit exactly that regime whenever E(ky) runs locally straight, so
every stage state is first projected back onto the manifold by inverse
iteration.  After projection the two half-step stages coincide and the
classic weights reduce to Simpson's rule over on-manifold evaluations,
which keeps the step fourth order; the committed anchor is itself polished,
so branch identity is the only thing the integrator has to get right.  A
genuine collision (second eigenvalue approaching with real coupling) shows
up as solution growth or failed polish and triggers step halving.
"""

import numpy as np
from scipy.linalg import solve_banded

from . import discrete as _discrete


class TruncationFamily:
    """ky -> TruncatedOperator with banded derivative, memoized per ky."""

    def __init__(self, model, kind, L):
        self.model = model
        self.kind = kind
        self.L = L
        self._cache = {}

    def __call__(self, ky):
        return self.entry(ky)[0]

    def entry(self, ky):
        key = round(float(ky), 12)
        hit = self._cache.get(key)
        if hit is None:
            op = _discrete.build_truncation(self.model, self.kind, self.L, ky)
            dband = _discrete.assemble_band(
                op.sites, self.model.dV(ky), self.model.dA(ky),
                modulated=self.kind != "plain_edge")
            ab = _hermitian_band_to_general(op.band)
            hit = (op, dband, ab)
            if len(self._cache) > 4096:
                self._cache.clear()
            self._cache[key] = hit
        return hit


def _hermitian_band_to_general(band):
    """Lower Hermitian banded -> general (2B+1, N) storage for solve_banded."""
    B = band.shape[0] - 1
    N = band.shape[1]
    ab = np.zeros((2 * B + 1, N), dtype=band.dtype)
    ab[B] = band[0]
    for nu in range(1, B + 1):
        ab[B + nu, :N - nu] = band[nu, :N - nu]
        ab[B - nu, nu:] = np.conj(band[nu, :N - nu])
    return ab


def _band_matvec(band, x):
    y = band[0] * x
    N = band.shape[1]
    for nu in range(1, band.shape[0]):
        y[nu:] += band[nu, :N - nu] * x[:N - nu]
        y[:N - nu] += np.conj(band[nu, :N - nu]) * x[nu:]
    return y


class ResidualBlowup(RuntimeError):
    pass


class StepUnderflow(RuntimeError):
    pass


class TrackedBranch:
    def __init__(self, k_samples, E_values, vectors, residuals, closed,
                 aborted=False, abort_reason=None, side=None, branch_id=None):
        self.k_samples = np.asarray(k_samples)
        self.E_values = np.asarray(E_values)
        self.vectors = vectors
        self.residuals = np.asarray(residuals)
        self.closed = closed
        self.aborted = aborted
        self.abort_reason = abort_reason
        self.side = side
        self.branch_id = branch_id

    def __repr__(self):
        tag = " ABORTED(%s)" % self.abort_reason if self.aborted else ""
        return ("TrackedBranch(%d samples, E0=%.4f, E1=%.4f%s)"
                % (len(self.k_samples), self.E_values[0], self.E_values[-1],
                   tag))


def seed_pairs(op, window):
    """De-spurioused eigenpairs of the truncation inside the window at the
    truncation's own ky (callers seed at ky = 0)."""
    w, v = _discrete.window_spectrum(op, window, vectors=True)
    out = []
    for i in range(len(w)):
        if not _discrete.spurious_filter(op, v[:, i]):
            out.append((float(w[i]), v[:, i].astype(complex)))
    return out


def transport(op_family, seed, step, k_end=2.0 * np.pi, cond_limit=1e8,
              residual_limit=1e-5, keep_vectors=True):
    """Track one eigenpair from ky = 0 to k_end.

    Returns a TrackedBranch; on residual blowup or step underflow the branch
    is returned aborted at the last good sample with the reason recorded.
    """
    if step > 2.0 * np.pi / 200 + 1e-15:
        raise ValueError("step must be at most 2*pi/200")
    fam = op_family if isinstance(op_family, TruncationFamily) else \
        _AdHocFamily(op_family)
    E, psi = seed
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    op0, _, _ = fam.entry(0.0)
    r0 = np.linalg.norm(_band_matvec(op0.band, psi) - E * psi)
    if r0 >= 1e-8:
        raise ValueError("seed residual %.2e too large" % r0)
    E, psi, r = _polish(fam, 0.0, E, psi)

    ks = [0.0]
    Es = [float(E)]
    vecs = [psi.copy()]
    res = [float(r)]
    aborted = False
    reason = None

    grid = np.arange(0.0, k_end + 0.5 * step, step)
    grid[-1] = k_end
    ky = 0.0
    gi = 1
    while gi < len(grid) and not aborted:
        target = grid[gi]
        try:
            e1, p1 = _derivative(fam, ky, E, psi, cond_limit)
        except _NearDegenerate:
            aborted = True
            reason = "degenerate pair at ky=%.6f (E=%.6f)" % (ky, E)
            break
        h = target - ky
        halvings = 0
        while True:
            ok = False
            try:
                E2, psi2, r = _advance(fam, ky, E, psi, e1, p1, h,
                                       cond_limit)
                ok = r <= residual_limit
            except _NearDegenerate:
                pass
            if ok:
                break
            halvings += 1
            h *= 0.5
            if halvings > 20 or h < 2.0 * np.pi / 1e6:
                aborted = True
                reason = "step underflow at ky=%.6f (E=%.6f)" % (ky, E)
                break
        if aborted:
            break
        ky = ky + h
        E, psi = E2, psi2
        if abs(ky - target) < 1e-13:
            ks.append(ky)
            Es.append(E)
            if keep_vectors:
                vecs.append(psi.copy())
            res.append(r)
            gi += 1
    closed = (not aborted) and abs(Es[-1] - Es[0]) < 1e-6
    return TrackedBranch(ks, Es, vecs if keep_vectors else None, res,
                         closed, aborted, reason)


class _AdHocFamily:
    def __init__(self, fn):
        self.fn = fn
        self._cache = {}

    def entry(self, ky):
        key = round(float(ky), 12)
        hit = self._cache.get(key)
        if hit is None:
            op = self.fn(ky)
            dband = _discrete.assemble_band(
                op.sites, op.model.dV(ky), op.model.dA(ky),
                modulated=op.kind != "plain_edge")
            hit = (op, dband, _hermitian_band_to_general(op.band))
            if len(self._cache) > 4096:
                self._cache.clear()
            self._cache[key] = hit
        return hit


class _NearDegenerate(Exception):
    pass


def _polish(fam, ky, E, psi, sweeps=3):
    """Inverse-iteration sweeps plus Rayleigh quotients: project a predicted
    pair onto the nearest exact eigenpair at this ky.

    The deflated solve in _derivative amplifies any misalignment between psi
    and the true eigenvector by roughly norm(H') / defect, so every state fed
    to it must sit on the eigen-manifold to machine accuracy."""
    op, _, ab = fam.entry(ky)
    B = op.band.shape[0] - 1
    y = psi
    r = np.inf
    E2 = E
    for _ in range(sweeps):
        abE = ab.copy()
        abE[B] -= E2
        try:
            y2 = solve_banded((B, B), abE, y)
        except np.linalg.LinAlgError:
            abE[B] -= 1e-10 * (1.0 + abs(E2))
            y2 = solve_banded((B, B), abE, y)
        c = np.vdot(y, y2)
        if abs(c) > 0:
            y2 = y2 * (np.conj(c) / abs(c))
        y = y2 / np.linalg.norm(y2)
        Hy = _band_matvec(op.band, y)
        E2 = float(np.real(np.vdot(y, Hy)))
        r = float(np.linalg.norm(Hy - E2 * y))
        if r < 1e-11 * (1.0 + abs(E2)):
            break
    return E2, y, r


def _derivative(fam, ky, E, psi, cond_limit):
    op, dband, ab = fam.entry(ky)
    Hp_psi = _band_matvec(dband, psi)
    Ep = float(np.real(np.vdot(psi, Hp_psi)))
    rhs = Hp_psi - psi * np.vdot(psi, Hp_psi)
    nr = np.linalg.norm(rhs)
    if nr < 1e-14 * (1.0 + abs(E)):
        return Ep, np.zeros_like(psi)
    B = op.band.shape[0] - 1
    abE = ab.copy()
    abE[B] -= E
    try:
        z = solve_banded((B, B), abE, rhs)
    except np.linalg.LinAlgError:
        # exactly singular shift; rhs is deflated so a tiny jitter is safe
        abE[B] -= 1e-10 * (1.0 + abs(E))
        z = solve_banded((B, B), abE, rhs)
    z -= psi * np.vdot(psi, z)
    if np.linalg.norm(z) / nr > cond_limit:
        raise _NearDegenerate
    return Ep, -z


def _advance(fam, ky, E, psi, e1, p1, h, cond_limit):
    """One stage-polished step from (E, psi) at ky to ky + h."""
    Em, pm, rm = _polish(fam, ky + 0.5 * h, E + 0.5 * h * e1,
                         psi + 0.5 * h * p1)
    if rm > 1e-8 * (1.0 + abs(Em)) or abs(np.vdot(psi, pm)) < 0.5:
        raise _NearDegenerate
    e2, p2 = _derivative(fam, ky + 0.5 * h, Em, pm, cond_limit)
    Ee, pe, re = _polish(fam, ky + h, E + h * e2, psi + h * p2)
    if re > 1e-8 * (1.0 + abs(Ee)) or abs(np.vdot(psi, pe)) < 0.5:
        raise _NearDegenerate
    e4, p4 = _derivative(fam, ky + h, Ee, pe, cond_limit)
    y = psi + h / 6.0 * (p1 + 4.0 * p2 + p4)
    E2, psi2, r = _polish(fam, ky + h, E + h / 6.0 * (e1 + 4.0 * e2 + e4),
                          y / np.linalg.norm(y))
    if abs(np.vdot(psi, psi2)) < 0.5:
        raise _NearDegenerate
    return E2, psi2, r
