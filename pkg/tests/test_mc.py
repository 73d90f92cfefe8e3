import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radonshell.errors import InvalidInputError
from radonshell.geometry import (
    SphereShell, is_reciprocal, partition_indices, random_rotation, regular_inscribed_simplex,
    simplex_volume,
)
from radonshell.geometry import RECIPROCAL_RTOL
from radonshell.mc import (
    CapSampler, MCEstimate, fit_scaling, get_backend, layer_edges, lower_bound_experiment,
    max_cap_angle, reciprocal_integral, reciprocal_integral_layered, sample_shell,
)
from radonshell.mc._backend import COMPILED, PYTHON

needs_compiled = pytest.mark.skipif(COMPILED is None, reason="compiled kernels not built")


def overlap(a, b, k=3.0):
    return abs(a.value - b.value) <= k * math.hypot(a.std_error, b.std_error)


# -- sampler ------------------------------------------------------------------------

def test_ball_radius_moment():
    X = sample_shell(SphereShell(1.0, 1.0, 3), np.random.default_rng(0), 1_000_000)
    rho = np.linalg.norm(X, axis=1)
    sigma = math.sqrt(3 / 5 - 9 / 16) / 1000
    assert abs(rho.mean() - 0.75) < 3 * sigma
    assert np.all(np.abs(X.mean(axis=0)) < 3 * math.sqrt(3 / 5 / 3) / 1000)


@given(st.floats(0.1, 10), st.floats(0.01, 1.0), st.integers(2, 6))
def test_samples_inside_shell(r, frac, d):
    shell = SphereShell(r, frac * r, d)
    rho = np.linalg.norm(sample_shell(shell, np.random.default_rng(1), 2000), axis=1)
    assert np.all(rho <= r * (1 + 1e-12)) and np.all(rho >= (r - shell.w) * (1 - 1e-12))


# -- backends -----------------------------------------------------------------------------

@needs_compiled
@pytest.mark.parametrize("d", [2, 3, 4])
def test_backends_agree(d, rng):
    shell = SphereShell(1.0, 0.3, d)
    A = regular_inscribed_simplex(1.0, d).vertices[None]
    X = sample_shell(shell, rng, (5000, d + 1))
    ga, gb = partition_indices(d)
    dp, ap = PYTHON.reciprocal_block(A, X, ga, gb, 1.0, RECIPROCAL_RTOL)
    dc, ac = COMPILED.reciprocal_block(A, X, ga, gb, 1.0, RECIPROCAL_RTOL)
    assert np.array_equal(ap, ac)
    assert np.allclose(dp, dc, rtol=1e-12, atol=0)


@pytest.mark.parametrize("backend", ["python", pytest.param("cython", marks=needs_compiled)])
def test_kernel_matches_enumeration(backend, rng):
    # per-sample accept flag and volume against the geometry module
    d = 3
    shell = SphereShell(1.0, 0.4, d)
    A = regular_inscribed_simplex(1.0, d).vertices
    X = sample_shell(shell, rng, (3000, d + 1))
    ga, gb = partition_indices(d)
    det, acc = get_backend(backend).reciprocal_block(A[None], X, ga, gb, 1.0, RECIPROCAL_RTOL)
    for i in range(X.shape[0]):
        assert bool(acc[i]) == is_reciprocal(A, X[i])
        assert det[i] == pytest.approx(math.factorial(d) * simplex_volume(X[i]), rel=1e-10, abs=1e-15)
    assert 0 < acc.mean() < 1


def test_backend_lookup():
    assert get_backend("python") is PYTHON
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_pure_env_forces_fallback(monkeypatch):
    monkeypatch.setenv("RADONSHELL_PURE", "1")
    assert get_backend() is PYTHON


# -- estimator -----------------------------------------------------------------------------

@pytest.mark.parametrize("d", [3, 4])
def test_exact_homogeneity(d):
    A = regular_inscribed_simplex(1.0, d)
    base = reciprocal_integral(A, SphereShell(1.0, 0.3, d), 20_000, seed=7)
    for lam in (0.5, 3.0):
        est = reciprocal_integral(A.scaled(lam), SphereShell(lam, 0.3 * lam, d), 20_000, seed=7)
        assert est.n_accepted == base.n_accepted
        assert est.value == pytest.approx(lam ** (d * d) * base.value, rel=1e-12)


def test_workers_do_not_change_result():
    A = regular_inscribed_simplex(1.0, 3)
    shell = SphereShell(1.0, 0.2, 3)
    one = reciprocal_integral(A, shell, 50_000, seed=3, block_size=4096)
    many = reciprocal_integral(A, shell, 50_000, seed=3, block_size=4096, workers=4)
    assert one == many
    again = reciprocal_integral(A, shell, 50_000, seed=3, block_size=4096)
    assert one == again
    lay1 = reciprocal_integral_layered(A, shell, 8000, 4, seed=3, block_size=1000)
    lay4 = reciprocal_integral_layered(A, shell, 8000, 4, seed=3, block_size=1000, workers=4)
    assert lay1 == lay4


@needs_compiled
def test_backend_choice_does_not_change_result():
    A = regular_inscribed_simplex(1.0, 3)
    shell = SphereShell(1.0, 0.2, 3)
    a = reciprocal_integral(A, shell, 20_000, seed=5, backend="python")
    b = reciprocal_integral(A, shell, 20_000, seed=5, backend="cython")
    assert a.n_accepted == b.n_accepted
    assert a.value == pytest.approx(b.value, rel=1e-12)


def test_estimate_fields():
    est = reciprocal_integral(regular_inscribed_simplex(1.0, 3), SphereShell(1.0, 0.2, 3), 30_000)
    assert est.std_error >= 0 and est.n_accepted <= est.n_samples == 30_000
    assert 0.0 <= est.truncated_mass_fraction <= 1.0
    assert set(est.to_dict()) >= {"value", "std_error", "n_samples", "n_accepted", "seed"}


def test_truncation_reported():
    A = regular_inscribed_simplex(1.0, 3)
    shell = SphereShell(1.0, 0.2, 3)
    loose = reciprocal_integral(A, shell, 20_000, seed=1)
    strict = reciprocal_integral(A, shell, 20_000, seed=1, eps_vol=0.1)
    assert strict.truncated_mass_fraction > loose.truncated_mass_fraction
    assert strict.value < loose.value


def test_scale_mismatch_rejects_everything():
    # a huge reference simplex against a tiny shell: mixed regroupings always win
    A = regular_inscribed_simplex(1000.0, 3)
    shell = SphereShell(0.01, 0.005, 3)
    est = reciprocal_integral(A, shell, 20_000, seed=2)
    assert est.acceptance < 0.01
    X = sample_shell(shell, np.random.default_rng(2), (50, 4))
    assert not any(is_reciprocal(A, x) for x in X)


def test_input_errors():
    shell = SphereShell(1.0, 0.2, 3)
    flat = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.0]])
    with pytest.raises(InvalidInputError):
        reciprocal_integral(flat, shell, 100)
    with pytest.raises(InvalidInputError):
        reciprocal_integral(regular_inscribed_simplex(1.0, 3), shell, 0)
    with pytest.raises(InvalidInputError):
        reciprocal_integral(regular_inscribed_simplex(1.0, 3), shell, 10, seed=-1)
    with pytest.raises(InvalidInputError):
        reciprocal_integral(regular_inscribed_simplex(1.0, 4), shell, 10)


def test_rotation_invariance():
    shell = SphereShell(1.0, 0.3, 3)
    A = regular_inscribed_simplex(1.0, 3).vertices
    ref = reciprocal_integral(A, shell, 200_000, seed=11)
    rng = np.random.default_rng(4)
    for k in range(5):
        Q = random_rotation(3, rng)
        assert overlap(reciprocal_integral(A @ Q.T, shell, 200_000, seed=100 + k), ref)


@pytest.mark.parametrize("d,n", [(3, 100_000), (4, 60_000)])
def test_total_exponent(d, n):
    # w/r fixed, independent seeds: the r-exponent is d^2
    pts = []
    for k, r in enumerate([1.0, 2.0, 4.0]):
        A = regular_inscribed_simplex(r, d)
        pts.append((r, reciprocal_integral(A, SphereShell(r, 0.3 * r, d), n, seed=k)))
    assert fit_scaling(pts).exponent == pytest.approx(d * d, abs=0.7)


# -- stratification ----------------------------------------------------------------------------

def test_layer_edges():
    e = layer_edges(1.0, 4)
    assert e == [(1.0, 2.0), (0.5, 1.0), (0.25, 0.5), (0.0, 0.25)]
    with pytest.raises(InvalidInputError):
        layer_edges(1.0, 0)


def test_layers_sum_to_plain_estimate():
    A = regular_inscribed_simplex(1.0, 3)
    shell = SphereShell(1.0, 0.2, 3)
    plain = reciprocal_integral(A, shell, 400_000, seed=1)
    lay = reciprocal_integral_layered(A, shell, 200_000, 6, seed=1)
    assert lay.value == pytest.approx(sum(l.value for l in lay.layers))
    assert overlap(plain, lay)
    # below the middle of the shell each halving of h removes at least half the mass
    low = [l for l in lay.layers if l.h_hi <= 0.5 and l.n_accepted > 0]
    dens = [l.value / l.h_hi for l in low]
    assert all(b <= a for a, b in zip(dens, dens[1:]))


def test_empty_layer_is_zero():
    # a thin shell around a regular simplex: no apex sits near its base facet
    lay = reciprocal_integral_layered(regular_inscribed_simplex(1.0, 3), SphereShell(1.0, 0.2, 3),
                                      2000, 12, seed=0)
    empty = [l for l in lay.layers if l.n_accepted == 0]
    assert empty and all(l.value == 0.0 and l.std_error == 0.0 for l in empty)


# -- fits ---------------------------------------------------------------------------------------

def test_fit_examples():
    fit = fit_scaling([(p, 7.0 * p ** 3) for p in (1, 2, 4, 8)])
    assert fit.exponent == pytest.approx(3.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(7.0), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit_scaling([(p, 2.5) for p in (1, 2, 4)]).exponent == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(InvalidInputError):
        fit_scaling([(1, 1.0), (2, -1.0), (3, 1.0)])
    with pytest.raises(InvalidInputError):
        fit_scaling([(1, 1.0), (2, 1.0)])


@settings(max_examples=40)
@given(st.floats(-6, 6), st.floats(0.01, 100))
def test_fit_recovers_power(k, c):
    fit = fit_scaling([(p, (c * p ** k, 0.01 * c * p ** k)) for p in (0.5, 1.0, 3.0, 7.0)])
    assert fit.exponent == pytest.approx(k, abs=1e-9)
    assert 0.0 <= fit.r_squared <= 1.0
    assert fit.exponent_std_error > 0


# -- lower bound --------------------------------------------------------------------------------

def test_cap_geometry():
    assert max_cap_angle(3) == pytest.approx(0.5 * math.acos(-1 / 3))
    with pytest.raises(InvalidInputError):
        CapSampler(SphereShell(1.0, 0.2, 3), 1.0)
    sampler = CapSampler(SphereShell(1.0, 0.2, 3), 0.3)
    X = sampler.sample(np.random.default_rng(0), 2000)
    ang = np.arccos(np.clip(np.einsum("nkj,kj->nk", X / np.linalg.norm(X, axis=-1, keepdims=True),
                                      sampler.B), -1, 1))
    assert np.all(ang < 0.3 + 1e-12)
    rho = np.linalg.norm(X, axis=-1)
    assert np.all(rho <= 1 + 1e-12) and np.all(rho >= 0.8 - 1e-12)


def test_cap_volume_by_sampling():
    shell = SphereShell(1.0, 0.2, 3)
    sampler = CapSampler(shell, 0.4)
    X = sample_shell(shell, np.random.default_rng(3), 400_000)
    u = X / np.linalg.norm(X, axis=1, keepdims=True)
    inside = np.arccos(np.clip(u @ sampler.B[0], -1, 1)) < 0.4
    frac = inside.mean()
    se = math.sqrt(frac * (1 - frac) / X.shape[0])
    assert abs(frac * shell.volume - sampler.cap_volume) < 4 * se * shell.volume


@pytest.mark.parametrize("d", [3, 4])
def test_switching_acceptance(d):
    est = lower_bound_experiment(SphereShell(1.0, 0.1, d), 0.3, 50_000, seed=1)
    assert est.acceptance >= 0.8 / 2 ** (d + 1)


def test_lower_bound_grows_with_caps():
    shell = SphereShell(1.0, 0.1, 3)
    small = lower_bound_experiment(shell, 0.25, 100_000, seed=1)
    big = lower_bound_experiment(shell, 0.5, 100_000, seed=2)
    assert big.value - small.value > 3 * math.hypot(big.std_error, small.std_error)


def test_lower_bound_rejects_overlap():
    with pytest.raises(InvalidInputError):
        lower_bound_experiment(SphereShell(1.0, 0.1, 3), 1.2, 10)
