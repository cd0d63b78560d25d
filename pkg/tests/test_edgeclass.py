"""Side classification of eigenfunctions by their lattice-mode mass."""

import numpy as np
import pytest

from edgespectra import discrete as D
from edgespectra import edgeclass as EC
from edgespectra import monodromy as Mo

KY = 1.0
WINDOW = (20.0, 22.3)


def test_mode_basis_convention():
    # psi(kx) = e^{-2 i kx} is the lattice vector at x = +2
    Nx = 64
    kx = np.linspace(0.0, 2.0 * np.pi, Nx, endpoint=False)
    psi = np.exp(-2j * kx)
    xs, co = EC.mode_coefficients(psi, 8)
    amp = np.abs(co).ravel()
    assert xs[np.argmax(amp)] == 2
    assert amp.max() > 0.999
    assert np.sort(amp)[-2] < 1e-10


@pytest.fixture(scope="module")
def labeled_roots(harper):
    pts = Mo.exact_spectrum(harper, KY, WINDOW)
    assert [p.j for p in pts] == [2, 0, 2, 1, 2, 1, 2]
    return pts


def test_fast_family_sits_on_the_right(harper, labeled_roots):
    # j = 2 roots are right-edge modes, j = 0 and 1 left-edge, at this ky
    want = {2: EC.EDGE_PLUS, 0: EC.EDGE_MINUS, 1: EC.EDGE_MINUS}
    for p in labeled_roots[:4]:
        kxs, psi = Mo.eigenfunction(harper, p, Nx=256)
        v = EC.classify(psi[:-1], p.E, 120)
        assert v.side == want[p.j]
        assert v.mass_nonneg > 0.99 or v.mass_nonneg < 0.01


def test_insufficient_modes_raise(harper):
    # the slow right family reaches x ~ E / min|E| = 50 sites at E ~ 25;
    # 60 modes put the outer guard right on top of its support
    pts = Mo.exact_spectrum(harper, KY, (24.8, 25.2))
    p = next(p for p in pts if p.j == 2)
    kxs, psi = Mo.eigenfunction(harper, p, Nx=256)
    with pytest.raises(EC.ResolutionError):
        EC.classify(psi[:-1], p.E, 60)
    EC.classify(psi[:-1], p.E, 120)      # and 120 is enough


def test_calibration_against_half_lattice(harper, labeled_roots):
    op = D.build_truncation(harper, "modulated_edge", 150, KY)
    half = D.window_spectrum(op, (WINDOW[0] - 0.5, WINDOW[1] + 0.5))
    pairs = []
    for p in labeled_roots[:4]:
        kxs, psi = Mo.eigenfunction(harper, p, Nx=256)
        pairs.append((p, EC.classify(psi[:-1], p.E, 120)))
    assert EC.calibrate_convention(pairs, half) == EC.MODE_SIGN == -1
    # swapping one verdict must break the calibration
    bad = [(pairs[0][0], pairs[1][1])] + pairs[1:]
    with pytest.raises(RuntimeError):
        EC.calibrate_convention(bad, half)


def test_decay_profile_slope(harper):
    # 80/10 clears the factor-4 span the profile requires
    fam = []
    for E0 in (10.0, 20.0, 80.0):
        pts = [p for p in Mo.exact_spectrum(harper, KY, (E0 - 0.8, E0 + 0.8))
               if p.j == 2]
        p = pts[len(pts) // 2]
        kxs, psi = Mo.eigenfunction(harper, p, Nx=256)
        fam.append((p.E, psi[:-1]))
    prof = EC.decay_profile(fam)
    Es = np.log([E for E, _ in prof])
    ws = np.log([w for _, w in prof])
    slope = np.polyfit(Es, ws, 1)[0]
    assert slope <= -1.0


def test_decay_profile_input_contracts():
    with pytest.raises(ValueError):
        EC.decay_profile([(1.0, np.ones(64)), (2.0, np.ones(64))])
    with pytest.raises(ValueError):
        EC.decay_profile([(1.0, np.ones(64)), (2.0, np.ones(64)),
                          (3.0, np.ones(64))])
