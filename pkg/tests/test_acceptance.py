"""End-to-end acceptance checks, one test per criterion (A1-A9).

Each test prints a single summary line; pytest -v adds the pass/fail
verdict per criterion.  Frozen ky octets and thresholds are documented
inline; the ladder predicate from conftest re-certifies every frozen ky at
run time so a silent regression in the quadratures cannot stale them.
"""

import time
import warnings

import numpy as np

from conftest import ladder_info, sturm_side_flow
from edgespectra import bands as B
from edgespectra import current as C
from edgespectra import discrete as D
from edgespectra import edgeclass as EC
from edgespectra import flow as F
from edgespectra import monodromy as Mo
from edgespectra import tracking as T
from edgespectra.model import build_constant, build_harper

WINDOW = (20.0, 30.0)
PAD_WINDOW = (19.5, 30.5)

# ky octets, frozen after measuring every candidate on a 160-point grid.
# A3 wants clean decay ratios: same-side ladder collisions shift roots and
# break the 1/E law, so its octet additionally requires same-side gaps
# > 0.25 and every family present near both measurement windows.  A4 wants
# root-finder completeness: it only needs any-pair gaps > 0.03 over the
# comparison window (ky = 6.2046 passes the A3 predicate yet defeats the
# bracket machinery through its C ~ 5 family, hence the separate octets).
A3_KYS = (0.0, 0.3927, 2.0420, 2.1206, 3.4165, 4.0448, 4.5553, 6.2046)
A4_KYS = (0.1963, 0.3927, 1.4923, 1.8064, 2.0420, 2.4740, 3.5343, 3.9663)


def _dist(xs, ys):
    """max over xs of the distance to the nearest y (0 for empty xs)."""
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    if xs.size == 0:
        return 0.0
    if ys.size == 0:
        return np.inf
    return float(np.max(np.min(np.abs(xs[:, None] - ys[None, :]), axis=1)))


def _inner(es, window):
    es = np.asarray(es)
    return es[(es > window[0]) & (es < window[1])]


def test_A1_chern_numbers_both_routes(harper):
    t0 = time.time()
    rec = B.chern_numbers(harper)
    assert list(rec.chern) == [-1, 2, -1]
    assert rec.reliable
    plaq = B._plaquette_chern(harper, 24)
    assert np.allclose(plaq, [-1, 2, -1], atol=1e-6)
    kappa = F.hall_conductance(harper)
    assert kappa == 1
    elapsed = time.time() - t0
    assert elapsed < 10.0
    print("A1 chern=(-1,2,-1) both routes, kappa=1, %.1fs" % elapsed)


def test_A2_spectral_flow_integers():
    t0 = time.time()
    want = {1.5: (1, -1), -1.5: (-1, 1)}
    for ef, (wp, wm) in want.items():
        m = build_harper(1, 3, ef)
        res = F.edge_flows(m, L=500)
        plus, minus = res["edge_plus"], res["edge_minus"]
        assert isinstance(plus.flow, (int, np.integer))
        assert isinstance(minus.flow, (int, np.integer))
        assert plus.flow == wp
        assert minus.flow == wm
        assert res["kappa"] == wp
        assert plus.agrees and minus.agrees
        assert res["aborted"] == []
        # independent route: LDL/Sturm crossing counts on the raw
        # tridiagonals; raw nets equal kappa on both halves
        fid = F.flow_window(m)[2]
        assert sturm_side_flow(ef, "right", fid) == wp
        assert sturm_side_flow(ef, "left", fid) == -wm
    elapsed = time.time() - t0
    assert elapsed < 600.0
    print("A2 flows (+1,-1)/(-1,+1), Sturm agrees, %.0fs" % elapsed)


def test_A3_deviation_halves_at_double_energy(harper):
    t0 = time.time()
    ratios = []
    d50s = []
    for ky in A3_KYS:
        for base in (25.0, 50.0):
            # margin 0: certify the rungs the measurement actually uses;
            # pairs outside the window are policed by the ratio band itself
            win = (base - 2.2, base + 2.2)
            gany, gsame, present = ladder_info(harper, ky, win, margin=0.0)
            assert gany > 0.03, (ky, base, gany)
            assert gsame > 0.25, (ky, base, gsame)
            assert present, (ky, base)
        ds = []
        for base in (25.0, 50.0):
            win = (base - 2.2, base + 2.2)
            pts = [p for p in Mo.exact_spectrum(harper, ky, win)
                   if p.defect < 1e-8]
            asym = Mo.asymptotic_spectrum(harper, ky,
                                          (base - 3.0, base + 3.0))
            ds.append(_dist([p.E for p in pts], asym.energies()))
        ratios.append(ds[0] / ds[1])
        d50s.append(ds[1])
    ratios = np.array(ratios)
    assert np.all(ratios >= 1.5) and np.all(ratios <= 2.7), ratios
    elapsed = time.time() - t0
    assert elapsed < 300.0
    print("A3 ratios %.2f..%.2f on 8 ky, %.0fs"
          % (ratios.min(), ratios.max(), elapsed))


def test_A4_three_spectra_agree(harper):
    t0 = time.time()
    tol_ed = 1e-3
    spectra = {}
    for ky in A4_KYS:
        # small pad: rung collisions below 19.4 cannot move any root that
        # the (19.5, 30.5) solves see, so they are not grounds to reject
        gany, _, _ = ladder_info(harper, ky, PAD_WINDOW, margin=0.1)
        assert gany > 0.03, (ky, gany)
        ex = np.array([p.E for p in
                       Mo.exact_spectrum(harper, ky, PAD_WINDOW)
                       if p.defect < 1e-8])
        op = D.build_truncation(harper, "modulated_full", 500, ky)
        w, v = D.window_spectrum(op, PAD_WINDOW, vectors=True)
        keep = [i for i in range(len(w))
                if not D.spurious_filter(op, v[:, i])]
        de = w[keep]
        asy = Mo.asymptotic_spectrum(harper, ky, PAD_WINDOW).energies()
        spectra[ky] = (ex, de, asy)
    # the asymptotic tolerance comes from the measured deviation scale at
    # E ~ 25, scaled to the window floor E = 20
    d25 = max(_dist(_inner(ex, (22.8, 27.2)), asy)
              for ex, de, asy in spectra.values())
    tol_as = 1e-3 + (25.0 / 20.0) * d25
    for ky, (ex, de, asy) in spectra.items():
        exi, dei, asi = (_inner(s, WINDOW) for s in (ex, de, asy))
        assert len(exi) == len(dei) == len(asi), (ky, len(exi), len(dei),
                                                 len(asi))
        assert _dist(exi, de) < tol_ed, ky
        assert _dist(dei, ex) < tol_ed, ky
        assert _dist(exi, asy) < tol_as, ky
        assert _dist(asi, ex) < tol_as, ky
        assert _dist(dei, asy) < tol_as, ky
        assert _dist(asi, de) < tol_as, ky
    elapsed = time.time() - t0
    assert elapsed < 600.0
    print("A4 exact/dense/ladder agree on 8 ky (tol_as=%.3f), %.0fs"
          % (tol_as, elapsed))


def test_A5_adiabatic_error_decays_like_one_over_E(harper):
    t0 = time.time()
    Es = np.array([10.0, 20.0, 40.0, 80.0, 160.0])
    ds = []
    for E in Es:
        U = Mo.propagate(harper, 1.0, E, Nx=256).end
        Ut = Mo.adiabatic_propagator(harper, 1.0, E, Nx=2048).samples[-1]
        ds.append(np.linalg.norm(U - Ut, 2))
    slope = np.polyfit(np.log(Es), np.log(ds), 1)[0]
    assert -1.2 <= slope <= -0.8, (slope, ds)
    print("A5 slope %.2f over E in [10,160], %.0fs"
          % (slope, time.time() - t0))


def test_A6_side_verdicts_match_half_lattice(harper):
    t0 = time.time()
    pts = Mo.exact_spectrum(harper, 1.0, WINDOW)
    op = D.build_truncation(harper, "modulated_edge", 150, 1.0)
    half = D.window_spectrum(op, PAD_WINDOW)
    pairs = []
    disagreements = 0
    for p in pts:
        kxs, psi = Mo.eigenfunction(harper, p, Nx=256)
        v = EC.classify(psi[:-1], p.E, 120)
        pairs.append((p, v))
        in_half = np.min(np.abs(half - p.E)) < 1e-3
        if (v.side == EC.EDGE_PLUS) != in_half:
            disagreements += 1
    assert disagreements == 0
    assert EC.calibrate_convention(pairs, half) == -1
    # wrong-side mass falls at least like 1/E along the right family
    fam = []
    for E0 in (10.0, 20.0, 40.0, 80.0, 160.0):
        cand = [p for p in Mo.exact_spectrum(harper, 1.0,
                                             (E0 - 0.8, E0 + 0.8))
                if p.j == 2]
        p = cand[len(cand) // 2]
        kxs, psi = Mo.eigenfunction(harper, p, Nx=256)
        fam.append((p.E, psi[:-1]))
    prof = EC.decay_profile(fam)
    slope = np.polyfit(np.log([E for E, _ in prof]),
                       np.log([w for _, w in prof]), 1)[0]
    assert slope <= -1.0, prof
    print("A6 %d/%d verdicts, calibration -1, decay slope %.2f, %.0fs"
          % (len(pts), len(pts), slope, time.time() - t0))


def test_A7_central_charge_both_gaps(harper, harper_lo):
    t0 = time.time()
    k = np.linspace(-60.0, 60.0, 4001)
    J = C.mode_current((k, k.copy()), 1.0)
    assert abs(J - np.pi / 12.0) < 1e-10
    temps = (0.1, 0.05, 0.025)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", C.EndpointResolutionWarning)
        samples_u, c_up = C.central_charge(harper, 1, temps)
        samples_l, c_lo = C.central_charge(harper_lo, 0, temps)
    assert abs(c_up - 1.0) < 0.05, c_up
    assert abs(c_lo - (-1.0)) < 0.05, c_lo
    # currents follow the T^2 law
    Js = np.abs([s.J for s in samples_u])
    Ts = np.array([s.T for s in samples_u])
    p = np.polyfit(np.log(Ts), np.log(Js), 1)[0]
    assert abs(p - 2.0) < 0.1
    elapsed = time.time() - t0
    assert elapsed < 120.0
    print("A7 c_up=%.4f c_lo=%.4f T^2 slope %.3f, %.0fs"
          % (c_up, c_lo, p, elapsed))


def test_A8_constant_models_are_exact_and_inert():
    t0 = time.time()
    m1 = build_constant([2.0])
    pts = Mo.exact_spectrum(m1, 0.7, (0.5, 10.5))
    assert np.allclose([p.E for p in pts], [2, 4, 6, 8, 10], atol=1e-8)
    assert max(p.defect for p in pts) < 1e-10
    m2 = build_constant([-1.0, 3.0])
    pts = Mo.exact_spectrum(m2, 0.7, (0.5, 6.5))
    # degenerate roots (3 and 6 belong to both families) merge in the
    # exact route; the ladder keeps their multiplicity
    assert np.allclose([p.E for p in pts], [1, 2, 3, 4, 5, 6], atol=1e-8)
    asym = Mo.asymptotic_spectrum(m2, 0.7, (0.5, 6.5))
    assert np.allclose(asym.energies(), [1, 2, 3, 3, 4, 5, 6, 6], atol=1e-12)
    # flat bands: no chern, no flow, no current
    assert list(B.chern_numbers(m2).chern) == [0, 0]
    res = F.edge_flows(m2, L=60)
    assert res["edge_plus"].flow == 0 and res["edge_minus"].flow == 0
    samples, c = C.central_charge(m2, 0, (0.1, 0.05))
    assert c == 0.0
    print("A8 constant spectra exact, flat model inert, %.0fs"
          % (time.time() - t0))


def test_A9_tracking_stays_smooth_through_wall_crossings(harper):
    t0 = time.time()
    fam = T.TruncationFamily(harper, "modulated_edge", 150)
    seeds = T.seed_pairs(fam(0.0), WINDOW)
    step = 2.0 * np.pi / 240.0        # 16 checkpoints land on the grid
    br = T.transport(fam, seeds[4], step, keep_vectors=False)
    assert not br.aborted
    assert max(br.residuals) < 1e-5
    ks = np.asarray(br.k_samples)
    Es = np.asarray(br.E_values)
    # 16 checkpoint re-diagonalizations
    worst = 0.0
    for i in range(16):
        kc = i * 2.0 * np.pi / 16.0
        j = int(np.argmin(np.abs(ks - kc)))
        assert abs(ks[j] - kc) < 1e-9
        w = D.window_spectrum(fam(kc), (Es[j] - 3.0, Es[j] + 3.0))
        worst = max(worst, float(np.min(np.abs(w - Es[j]))))
    assert worst < 1e-6, worst
    # spectral flow moves the loop end one rung up
    assert abs(Es[-1] - seeds[5][0]) < 1e-6
    # smooth everywhere: a jump onto a wall line would spike the second
    # difference to >~ 700 at this step size (measured branch curvature
    # peaks near 60)
    d2 = np.abs(np.diff(Es, 2)) / step ** 2
    assert d2.max() < 200.0, d2.max()
    # a wall state does sweep through the branch: find it, confirm it
    # changes side between adjacent samples, confirm no kink there
    hits = []
    for i, k in enumerate(ks):
        op = fam(float(k))
        w, vecs = D.window_spectrum(op, (Es[i] - 1.5, Es[i] + 1.5),
                                    vectors=True)
        for pcol in range(len(w)):
            if abs(w[pcol] - Es[i]) < 1e-9:
                continue
            if (abs(w[pcol] - Es[i]) < 0.5
                    and D.spurious_filter(op, vecs[:, pcol])):
                hits.append(i)
    assert hits, "no wall state approached the branch"
    crossed = 0
    for i in hits:
        offs = {}
        for i2 in (max(i - 1, 0), min(i + 1, len(ks) - 1)):
            op = fam(float(ks[i2]))
            w, vecs = D.window_spectrum(op, (Es[i2] - 15.0, Es[i2] + 15.0),
                                        vectors=True)
            sp = [w[pcol] - Es[i2] for pcol in range(len(w))
                  if abs(w[pcol] - Es[i2]) > 1e-9
                  and D.spurious_filter(op, vecs[:, pcol])]
            offs[i2] = sp
        before = offs[max(i - 1, 0)]
        after = offs[min(i + 1, len(ks) - 1)]
        if before and after and np.sign(min(before, key=abs)) != \
                np.sign(min(after, key=abs)):
            crossed += 1
            assert d2[max(i - 2, 0):i + 1].max() < 200.0
    assert crossed >= 1
    print("A9 checkpoints %.1e, %d wall crossings, smooth, %.0fs"
          % (worst, crossed, time.time() - t0))
