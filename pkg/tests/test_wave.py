import csv
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from radonshell.cutoff import PHI, CutoffPhi
from radonshell.errors import InvalidInputError, UnsupportedDimensionError
from radonshell.geometry import random_rotation, sphere_area
from radonshell.radon import adjoint_radon, gaussian_bump, sampled_grid, sphere_quadrature, zonal_polynomial
from radonshell.wave import (
    RadiationProfile, double_cutoff_defect, energy_norm, exterior_energy, modified_cutoff,
    orthogonality_defect, phi_mean, radiation_convergence, strichartz_exterior, synthesize_wave,
    wave_residual, wave_snapshot,
)

C5 = (2 * math.pi) ** -2


# -- synthesis ----------------------------------------------------------------------

def test_zero_profile_gives_zero_wave(rng):
    G = gaussian_bump(5, width=0.3, amplitude=0.0)
    ev = synthesize_wave(G, rng.normal(size=(5, 5)), 0.4)
    assert not ev.u.any() and not ev.u_t.any() and not ev.grad.any()


def test_even_dimension_rejected():
    with pytest.raises(UnsupportedDimensionError):
        RadiationProfile(gaussian_bump(4))
    with pytest.raises(UnsupportedDimensionError):
        synthesize_wave(gaussian_bump(2), [0.0, 0.0], 0.0)


def test_d3_origin_value():
    G = gaussian_bump(3, center=0.1, width=0.3)
    for t in np.linspace(-1.0, 1.0, 9):
        u = synthesize_wave(G, np.zeros(3), t).u[0]
        assert u == pytest.approx(2 * float(G.g(np.array([t]))[0]), rel=1e-12, abs=1e-15)


def test_d3_isotropic_wave_is_radial(rng):
    G = gaussian_bump(3, width=0.4)
    x = rng.normal(size=3)
    Q = random_rotation(3, rng)
    a = synthesize_wave(G, x, 0.3).u[0]
    b = synthesize_wave(G, Q @ x, 0.3).u[0]
    assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("d", [3, 5])
def test_fast_path_matches_sphere_rule(d, rng):
    # polynomial in s over every reachable x . omega + t: the product rule is exact
    G = zonal_polynomial(d, [1.0, 0.4, -0.2], support=(-6.0, 6.0), s_coeffs=rng.normal(size=5),
                         axis=rng.normal(size=d))
    X = rng.normal(size=(6, d))
    X *= (rng.uniform(0, 3.0, 6) / np.linalg.norm(X, axis=1))[:, None]
    fast = synthesize_wave(G, X, 0.8)
    slow = synthesize_wave(G, X, 0.8, q=sphere_quadrature(d, 8))
    assert slow.level == 8 and fast.level == 0
    for a, b in ((fast.u, slow.u), (fast.u_t, slow.u_t), (fast.grad, slow.grad), (fast.u_r, slow.u_r)):
        assert np.allclose(a, b, rtol=1e-10, atol=1e-11)


@pytest.mark.parametrize("d", [3, 5])
def test_time_and_radial_derivatives(d, rng):
    G = gaussian_bump(d, center=0.2, width=0.4, dir_coeffs=(1.0, 0.5), axis=rng.normal(size=d))
    x = rng.normal(size=d)
    t, h = 0.3, 1e-4
    ev = synthesize_wave(G, x, t)
    du_dt = (synthesize_wave(G, x, t + h).u - synthesize_wave(G, x, t - h).u) / (2 * h)
    xh = x / np.linalg.norm(x)
    du_dr = (synthesize_wave(G, x + h * xh, t).u - synthesize_wave(G, x - h * xh, t).u) / (2 * h)
    assert ev.u_t[0] == pytest.approx(du_dt[0], rel=1e-6, abs=1e-9)
    assert ev.u_r[0] == pytest.approx(du_dr[0], rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("d", [3, 5])
def test_wave_equation_residual(d):
    rng = np.random.default_rng(40 + d)
    G = gaussian_bump(d, center=0.1, width=0.5, dir_coeffs=(1.0, 0.3, 0.2), axis=rng.normal(size=d))
    X = rng.uniform(-1, 1, size=(15, d)) * 2 / math.sqrt(d)
    T = rng.uniform(-2, 2, 15)
    assert wave_residual(G, X, T).max() < 1e-4


def test_radiation_profile_api():
    G = RadiationProfile(gaussian_bump(5, center=0.2, width=0.3))
    assert G.mu == 2 and G.d == 5 and G.bound == pytest.approx(0.2 + 8 * 0.3)
    with pytest.raises(InvalidInputError):
        G.derivative(3)
    s = np.array([-0.4, 0.1])
    om = np.array([0, 0, 0, 0, 1.0])
    assert np.array_equal(G.outgoing(s, om), G.base(-s, -om))
    assert RadiationProfile(gaussian_bump(3)).outgoing(0.5, np.array([0, 0, 1.0])) == \
        -gaussian_bump(3)(-0.5, np.array([0, 0, -1.0]))


# -- energy -----------------------------------------------------------------------------

ENERGY_PROFILES = [
    gaussian_bump(5, center=0.2, width=0.5),
    zonal_polynomial(5, [1.0, 0.5, 0.25]),
    gaussian_bump(5, width=0.3, order=1),
]


@pytest.mark.parametrize("G", ENERGY_PROFILES, ids=["gauss", "zonal", "odd"])
def test_isometry_and_conservation(G):
    b = RadiationProfile(G).bound
    ratios = [energy_norm(G, t).ratio for t in (0.0, b, 2 * b)]
    assert all(abs(r - 1) < 0.02 for r in ratios)
    assert max(ratios) - min(ratios) < 0.01


def test_energy_scaling():
    G = gaussian_bump(5, width=0.4)
    a = energy_norm(G, 0.0)
    b = energy_norm(G.scaled(3.0), 0.0)
    assert b.energy == pytest.approx(9 * a.energy, rel=1e-12)
    assert b.g_l2 == pytest.approx(9 * a.g_l2, rel=1e-12)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-12)
    energy, g_l2, ratio = a
    assert ratio == a.ratio


def test_d3_energy():
    assert energy_norm(gaussian_bump(3, width=0.3, order=1), 0.0).ratio == pytest.approx(1.0, abs=0.02)


def exterior_closed_form(G, t, R):
    # isotropic d = 5 profile outside its light cone: u_t ~ rho^-3, u_r ~ rho^-4
    g = lambda s: float(G.g(np.array([s]))[0])
    a, b = G.support
    m0 = integrate.quad(g, a, b, limit=200)[0]
    m1 = integrate.quad(lambda s: s * g(s), a, b, limit=200)[0]
    T = abs(t) + R
    k = sphere_area(5) * C5 ** 2 * sphere_area(4) ** 2
    return k * (4 * m0 ** 2 / T + 12 * (m1 - t * m0) ** 2 / T ** 3)


@pytest.mark.parametrize("t", [0.0, 2.0, 4.0])
def test_exterior_energy_closed_form(t):
    G = gaussian_bump(5, center=0.1, width=0.1)
    assert exterior_energy(G, t, 1.0) == pytest.approx(exterior_closed_form(G, t, 1.0), rel=1e-3)


def test_exterior_bounded_by_total():
    G = gaussian_bump(5, width=0.125, order=1)
    assert exterior_energy(G, 0.0, 1.0) <= energy_norm(G, 0.0).energy


def test_exterior_energy_needs_support():
    with pytest.raises(InvalidInputError):
        exterior_energy(gaussian_bump(5, width=0.5), 0.0, 1.0)


def test_narrower_support_radiates_less_outside():
    rng = np.random.default_rng(7)
    R = 1.0
    for _ in range(5):
        power = int(rng.integers(3, 6))
        dc = [1.0, float(rng.uniform(-0.5, 0.5))]
        ax = rng.normal(size=5)
        wide = zonal_polynomial(5, dc, support=(-R, R), power=power, axis=ax)
        narrow = zonal_polynomial(5, dc, support=(-R / 2, R / 2), power=power, axis=ax)
        wide, narrow = wide.scaled(1 / wide.l2_norm()), narrow.scaled(1 / narrow.l2_norm())
        for t in (0.0, 2.0):
            assert exterior_energy(narrow, t, R) < exterior_energy(wide, t, R)


# -- radiation fields ----------------------------------------------------------------------------

@pytest.mark.parametrize("d", [3, 5])
def test_radiation_errors_decrease(d):
    G = gaussian_bump(d, width=0.25, dir_coeffs=(1.0, 0.4), axis=np.eye(d)[0])
    b = RadiationProfile(G).bound
    tab = radiation_convergence(G, [5 * b, 10 * b, 20 * b, 40 * b])
    assert tab.decreasing
    assert all(y < x for x, y in zip(tab.errors_r, tab.errors_r[1:]))
    assert not any(tab.clipped)


def test_radiation_zero_profile():
    tab = radiation_convergence(gaussian_bump(5, width=0.25, amplitude=0.0), [2.0, 4.0, 8.0])
    assert list(tab.errors_t) == [0.0] * 3 and list(tab.errors_r) == [0.0] * 3


# -- cut-off function and the modified cut-off operator ---------------------------------------------

def raw_phi(s):
    psi = lambda t: math.exp(-1 / t) if t > 0 else 0.0
    a, b = psi(2 - abs(s)), psi(abs(s) - 1)
    return a / (a + b)


def test_phi_shape():
    s = np.linspace(-3, 3, 601)
    v = PHI(s)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(v[np.abs(s) <= 1] == 1.0) and np.all(v[np.abs(s) >= 2] == 0.0)
    assert np.array_equal(v, PHI(-s))
    assert np.allclose(v, [raw_phi(x) for x in s], atol=1e-15)


def test_phi_norms():
    # phi(1 + x) + phi(2 - x) = 1 on the ramps, so the L1 norm is exactly 3
    assert PHI.l1 == pytest.approx(3.0, rel=1e-12)
    l2 = 2 + 2 * integrate.quad(lambda s: raw_phi(s) ** 2, 1, 2, epsabs=1e-14)[0]
    assert PHI.l2 == pytest.approx(math.sqrt(l2), rel=1e-10)


@pytest.mark.parametrize("order", [1, 2])
def test_phi_derivatives(order):
    s = np.linspace(-2.2, 2.2, 89)
    h = 1e-5
    if order == 1:
        fd = (PHI(s + h) - PHI(s - h)) / (2 * h)
    else:
        fd = (PHI(s + h) - 2 * PHI(s) + PHI(s - h)) / h ** 2
    assert np.allclose(PHI(s, order), fd, atol=1e-4 if order == 2 else 1e-8)


def test_cutoff_annihilates_constants():
    one = zonal_polynomial(5, [1.0], support=(-3.0, 3.0), s_coeffs=[1.0])
    PG = modified_cutoff(one)
    s = np.linspace(-3, 3, 61)
    assert np.abs(PG.g(s)).max() < 1e-13


@pytest.mark.parametrize("G", [
    gaussian_bump(5, center=0.3, width=0.4),
    zonal_polynomial(5, [1.0, 0.5], support=(-2.5, 1.0)),
    gaussian_bump(3, center=-1.0, width=0.2, order=1),
], ids=["gauss", "poly", "odd"])
def test_orthogonality(G):
    assert abs(orthogonality_defect(G)) < 1e-12 * max(1.0, abs(phi_mean(G)))


def test_orthogonality_sampled(rng):
    q = sphere_quadrature(3, 3)
    s = np.linspace(-3, 3, 121)
    G = sampled_grid(3, s, q.nodes, np.exp(-s[:, None] ** 2) * rng.uniform(0.5, 2, len(q)), q.weights)
    assert np.abs(orthogonality_defect(G)).max() < 1e-10
    PG = modified_cutoff(G)
    assert PG.support == (-2.0, 2.0)


def test_decomposition_inside_plateau():
    G = zonal_polynomial(5, [1.0, 0.3], support=(-1.0, 1.0), power=3)
    PG = modified_cutoff(G)
    m = phi_mean(G)
    s = np.linspace(-2.5, 2.5, 201)
    assert np.allclose(PG.g(s), G.g(s) - m * PHI(s), atol=1e-14)


def test_double_cutoff_closed_form():
    G = zonal_polynomial(5, [1.0], support=(-1.0, 1.0), power=3)
    assert double_cutoff_defect(G) < 1e-13
    # the second application only reproduces the first when the mean vanishes
    PG = modified_cutoff(G)
    s = np.linspace(-2, 2, 101)
    assert np.abs(modified_cutoff(PG).g(s) - PG.g(s)).max() > 1e-3


def test_idempotent_for_mean_free():
    G = gaussian_bump(5, width=0.1, order=1)
    assert abs(phi_mean(G)) < 1e-14
    PG = modified_cutoff(G)
    s = np.linspace(-2, 2, 101)
    assert np.allclose(modified_cutoff(PG).g(s), PG.g(s), atol=1e-13)


def test_cutoff_validation():
    with pytest.raises(InvalidInputError):
        modified_cutoff(gaussian_bump(5), phi=lambda s: s)
    with pytest.raises(InvalidInputError):
        double_cutoff_defect(gaussian_bump(5, width=1.0))


def test_translation_identity(rng):
    # the wave at time t is the adjoint transform of the shifted derivative profile
    G = zonal_polynomial(5, [1.0, 0.3], support=(-1.0, 1.0), power=6, axis=[0, 1, 0, 0, 1.0])
    PG = modified_cutoff(G)
    X = rng.normal(size=(3, 5)) * 0.5
    t = 0.7
    u = synthesize_wave(PG, X, t).u
    errs = []
    for L in (12, 20):
        v = C5 * adjoint_radon(PG.derivative(1), X, sphere_quadrature(5, L), shift=t)
        errs.append(np.abs(u - v).max() / np.abs(u).max())
    assert errs[1] < errs[0] and errs[1] < 1e-4


# -- Strichartz and snapshots ------------------------------------------------------------------

def test_strichartz_zero_profile():
    with pytest.warns(RuntimeWarning):
        res = strichartz_exterior(gaussian_bump(5, width=0.125, amplitude=0.0), [2.0, 4.0, 8.0],
                                  n_time_panels=2, n_per_panel=4, n_radial=4, n_polar=4)
    assert res.norms == (0.0, 0.0, 0.0)
    assert res.warnings


def test_strichartz_validation():
    with pytest.raises(InvalidInputError):
        strichartz_exterior(gaussian_bump(3, width=0.1), [2.0, 4.0])
    with pytest.raises(InvalidInputError):
        strichartz_exterior(gaussian_bump(5, width=0.1), [4.0, 2.0])


def test_snapshot_csv(tmp_path):
    snap = wave_snapshot(gaussian_bump(5, width=0.3), 1.0, 4.0, n_radial=2, n_polar=3)
    path = tmp_path / "snap.csv"
    snap.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "rho", "angular_node_index", "u", "u_t"]
    assert len(rows) > 1 and all(float(r[0]) == 1.0 for r in rows[1:])
