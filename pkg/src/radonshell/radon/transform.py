"""Forward and adjoint Radon transforms.

``R*G(x) = int_{S^{d-1}} G(x . omega, omega) d omega`` and
``Rf(s, omega) = int_{x . omega = s} f dS``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, beta as beta_fn

from ..errors import InvalidInputError
from ..geometry import sphere_area
from .profile import Profile, axial_mass
from .quadrature import SphereQuadrature, gauss_jacobi, gauss_legendre, panel_rule, sphere_quadrature

_CHUNK = 2048


def _points(x, d):
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[-1] != d:
        raise InvalidInputError(f"points must have dimension {d}, got {X.shape[-1]}")
    return X, single


def adjoint_radon(G: Profile, x, q: SphereQuadrature, shift: float = 0.0):
    """Quadrature sum ``sum_i w_i G(x . omega_i + shift, omega_i)``.

    ``x`` may be one point ``(d,)`` or a stack ``(n, d)``.
    """
    if q.d != G.d:
        raise InvalidInputError(f"quadrature dimension {q.d} differs from profile dimension {G.d}")
    X, single = _points(x, G.d)
    out = np.empty(X.shape[0])
    for lo in range(0, X.shape[0], _CHUNK):
        S = X[lo:lo + _CHUNK] @ q.nodes.T + shift
        out[lo:lo + _CHUNK] = G(S, q.nodes[None, :, :]) @ q.weights
    return float(out[0]) if single else out


# -- zonal fast path ---------------------------------------------------------
#
# For G = g(s) h(omega . e) write omega = u xhat + sqrt(1-u^2) eta with eta on
# the S^{d-2} orthogonal to xhat and u = sin(theta). Then
#   R*G(x) = int g(|x| sin(theta) + shift) cos^{d-2}(theta) H(sin theta) dtheta
# with H(u) = int_{S^{d-2}} h(u cos psi + sqrt(1-u^2) sin psi (eta . f)) d eta
# and psi the angle between xhat and e. The inner integral reduces to one
# variable c = eta . f with weight |S^{d-3}| (1-c^2)^{(d-4)/2}.


def _inner_band(A, B, lo, hi, d, first_moment=False):
    """Inner integrals for ``h = 1(lo < c < hi)`` in closed form."""
    beta = (d - 4) / 2.0
    k = beta + 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = np.where(B > 0, (lo - A) / B, np.where(A > lo, -np.inf, np.inf))
        c2 = np.where(B > 0, (hi - A) / B, np.where(A < hi, np.inf, -np.inf))
    c1 = np.clip(c1, -1.0, 1.0)
    c2 = np.clip(c2, -1.0, 1.0)
    c2 = np.maximum(c1, c2)
    area = sphere_area(d - 2)
    if not first_moment:
        mass = 2.0 ** (2 * beta + 1) * beta_fn(k, k)
        return area * mass * (betainc(k, k, (1 + c2) / 2) - betainc(k, k, (1 + c1) / 2))
    # int c (1-c^2)^beta dc = -(1-c^2)^{beta+1} / (2(beta+1))
    f = lambda c: -np.maximum(1 - c * c, 0.0) ** k / (2 * k)
    return area * (f(c2) - f(c1))


def _inner_poly(A, B, poly, d, first_moment=False):
    n = poly.degree() // 2 + 2
    t, w = gauss_jacobi(n, (d - 4) / 2.0)
    z = A[..., None] + B[..., None] * t
    vals = poly(z)
    if first_moment:
        vals = vals * t
    return sphere_area(d - 2) * (vals @ w)


def _inner(G: Profile, A, B, d, first_moment=False):
    if d == 2:
        hp, hm = G.h(A + B), G.h(A - B)
        return hp - hm if first_moment else hp + hm
    if G.band is not None:
        return _inner_band(A, B, *G.band, d, first_moment)
    return _inner_poly(A, B, G.dir_poly, d, first_moment)


def _theta_breaks(G: Profile, rho, cpsi, psi, shift):
    """Sorted panel breaks in theta for each point, shape (n, K)."""
    a, b = G.support
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.arcsin(np.clip((a - shift) / rho, -1.0, 1.0))
        hi = np.arcsin(np.clip((b - shift) / rho, -1.0, 1.0))
    cols = [lo, hi]
    for s in G.s_breaks()[1:-1]:
        cols.append(np.arcsin(np.clip((s - shift) / rho, -1.0, 1.0)))
    if G.band is not None:
        for level in G.band:
            al = math.asin(max(-1.0, min(1.0, level)))
            cols += [al - psi, al + psi, math.pi - al - psi, -math.pi - al + psi]
    br = np.stack([np.clip(c, lo, hi) for c in cols], axis=-1)
    br.sort(axis=-1)
    return br


def zonal_adjoint_radon(G: Profile, x, shift: float = 0.0, n_gl: int = 24,
                        moment: bool = False):
    """``R*G`` for a separable profile by one-dimensional quadrature.

    The inner (d-2)-sphere integral is exact (closed form for a band, Gauss-
    Jacobi for a polynomial ``h``); the remaining angle integral uses
    Gauss-Legendre panels split at the support ends and at every kink of the
    band indicator.

    With ``moment=True`` also return ``int G(x . omega + shift, omega) omega d omega``.
    """
    if not G.separable:
        raise InvalidInputError("zonal fast path needs a separable profile")
    d = G.d
    X, single = _points(x, d)
    e = G.axis
    t, w = gauss_legendre(n_gl)
    if G.band is not None:
        # the band's inner integral has square-root kinks at panel ends;
        # x = (3t - t^3)/2 flattens them
        t, w = 0.5 * t * (3.0 - t * t), 1.5 * w * (1.0 - t * t)
    val = np.zeros(X.shape[0])
    mom = np.zeros_like(X) if moment else None
    rho_all = np.linalg.norm(X, axis=1)
    tiny = rho_all <= 1e-300
    if np.any(tiny):
        # at the origin every direction sees s = shift
        g0 = float(G.g(np.array([shift]))[0])
        if G.band is not None:
            hmass = axial_mass(d, *G.band)
            hmom = _band_first_moment(d, *G.band)
        else:
            tj, wj = gauss_jacobi(G.dir_poly.degree() // 2 + 2, (d - 3) / 2.0)
            hmass = sphere_area(d - 1) * float(wj @ G.h(tj))
            hmom = sphere_area(d - 1) * float(wj @ (tj * G.h(tj)))
        val[tiny] = g0 * hmass
        if moment:
            mom[tiny] = g0 * hmom * e
    idx = np.nonzero(~tiny)[0]
    for lo in range(0, idx.size, _CHUNK):
        ii = idx[lo:lo + _CHUNK]
        P = X[ii]
        rho = rho_all[ii]
        xhat = P / rho[:, None]
        cpsi = np.clip(xhat @ e, -1.0, 1.0)
        spsi = np.sqrt(1.0 - cpsi * cpsi)
        psi = np.arccos(cpsi)
        br = _theta_breaks(G, rho, cpsi, psi, shift)
        lo_b, hi_b = br[:, :-1, None], br[:, 1:, None]
        th = 0.5 * (hi_b - lo_b) * t + 0.5 * (hi_b + lo_b)
        wt = 0.5 * (hi_b - lo_b) * w
        u = np.sin(th)
        cu = np.cos(th)
        A = u * cpsi[:, None, None]
        B = cu * spsi[:, None, None]
        gvals = G.g(rho[:, None, None] * u + shift)
        base = wt * gvals * cu ** (d - 2)
        H0 = _inner(G, A, B, d)
        val[ii] = (base * H0).sum(axis=(1, 2))
        if moment:
            par = (base * H0 * u).sum(axis=(1, 2))
            H1 = _inner(G, A, B, d, first_moment=True)
            perp = (base * cu * H1).sum(axis=(1, 2))
            with np.errstate(invalid="ignore", divide="ignore"):
                eperp = (e[None, :] - cpsi[:, None] * xhat) / spsi[:, None]
            eperp[spsi <= 1e-14] = 0.0
            mom[ii] = par[:, None] * xhat + perp[:, None] * eperp
    if single:
        return (float(val[0]), mom[0]) if moment else float(val[0])
    return (val, mom) if moment else val


def _band_first_moment(d, lo, hi):
    # int_{lo<c<hi} c (1-c^2)^{(d-3)/2} dc times |S^{d-2}|
    k = (d - 1) / 2.0
    f = lambda c: -max(1 - c * c, 0.0) ** k / (2 * k)
    return sphere_area(d - 1) * (f(min(hi, 1.0)) - f(max(lo, -1.0)))


# -- forward transform --------------------------------------------------------

def orthonormal_complement(omega) -> np.ndarray:
    """Rows spanning the hyperplane orthogonal to the unit vector ``omega``."""
    om = np.asarray(omega, dtype=np.float64)
    _, _, vt = np.linalg.svd(om[None, :])
    return vt[1:]


@dataclass(frozen=True)
class GaussianField:
    """``amplitude * exp(-|x - center|^2 / sigma^2)`` with its exact Radon transform."""

    center: tuple
    sigma: float
    amplitude: float = 1.0

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def support_radius(self) -> float:
        return float(np.linalg.norm(self.center)) + 8.0 * self.sigma

    def __call__(self, x) -> np.ndarray:
        X = np.asarray(x, dtype=np.float64)
        r2 = ((X - np.asarray(self.center)) ** 2).sum(axis=-1)
        return self.amplitude * np.exp(-r2 / self.sigma ** 2)

    def radon_exact(self, s, omega) -> np.ndarray:
        c = np.asarray(omega, dtype=np.float64) @ np.asarray(self.center, dtype=np.float64)
        k = self.d - 1
        return (self.amplitude * (math.sqrt(math.pi) * self.sigma) ** k
                * np.exp(-((np.asarray(s) - c) / self.sigma) ** 2))


def _bound(f, radius):
    if radius is not None:
        return float(radius)
    r = getattr(f, "support_radius", None)
    if r is None:
        raise InvalidInputError("field has unbounded support; pass a bounding radius")
    return float(r)


def radon_forward(f, s: float, omega, method: str = "grid", n: int = 32,
                  radius: float | None = None, panels: int = 8, seed: int = 0,
                  radial_breaks=None) -> float:
    """Integral of ``f`` over the hyperplane ``{x . omega = s}``.

    ``grid`` uses polar coordinates in the plane (d = 3) or a line rule
    (d = 2); ``mc`` draws ``n`` uniform points from the square of half-side
    ``radius`` in the plane (any d).
    """
    om = np.asarray(omega, dtype=np.float64)
    d = om.shape[0]
    if abs(float(np.linalg.norm(om)) - 1.0) > 1e-10:
        raise InvalidInputError("omega must be a unit vector")
    B = _bound(f, radius)
    E = orthonormal_complement(om)
    base = float(s) * om
    if method == "mc":
        rng = np.random.default_rng(seed)
        U = rng.uniform(-B, B, size=(n, d - 1))
        return (2 * B) ** (d - 1) * float(np.mean(f(base + U @ E)))
    if method != "grid":
        raise InvalidInputError(f"unknown method {method!r}")
    return float(_plane_grid(f, np.array([float(s)]), om, B, n, panels, radial_breaks)[0])


def _plane_grid(f, S, om, B, n, panels, radial_breaks=None) -> np.ndarray:
    """Grid integrals over the parallel hyperplanes ``x . om = S[i]``."""
    d = om.shape[0]
    if d not in (2, 3):
        raise InvalidInputError("grid method supports d in {2, 3}")
    breaks = np.linspace(0.0, B, panels + 1) if radial_breaks is None else np.asarray(radial_breaks)
    if d == 2:
        lb = np.concatenate([-breaks[::-1], breaks[1:]])
        tnodes, wts = panel_rule(lb, n)
        local = tnodes[:, None]
    else:
        r, rw = panel_rule(breaks, n)
        m = 2 * n
        phi = 2 * math.pi * np.arange(m) / m
        local = np.stack([np.outer(r, np.cos(phi)).ravel(), np.outer(r, np.sin(phi)).ravel()], -1)
        wts = np.outer(rw * r, np.full(m, 2 * math.pi / m)).ravel()
    inplane = local @ orthonormal_complement(om)
    S = np.asarray(S, dtype=np.float64)
    pts = S[:, None, None] * om[None, None, :] + inplane[None, :, :]
    return f(pts) @ wts


@dataclass(frozen=True)
class AdjointnessResult:
    lhs: float
    rhs: float

    @property
    def rel_error(self) -> float:
        return abs(self.lhs - self.rhs) / abs(self.rhs)


def adjointness_check(f: GaussianField, G: Profile, level: int = 8, n_s: int = 8,
                      n_plane: int = 12, n_r: int = 16, n_ang: int = 12) -> AdjointnessResult:
    """Compare ``<Rf, G>`` and ``<f, R*G>`` computed by separate rules.

    The left side integrates grid Radon transforms of ``f`` against ``G``
    over a level-``level`` sphere rule and s-panels; the right side
    integrates ``f`` times the zonal fast-path ``R*G`` in spherical
    coordinates around the centre of ``f``.
    """
    d = G.d
    if f.d != d:
        raise InvalidInputError("field and profile dimensions differ")
    q = sphere_quadrature(d, level)
    s_nodes, s_w = panel_rule(np.linspace(*G.support, 17), n_s)
    B = f.support_radius
    lhs = 0.0
    for j in range(len(q)):
        om = q.nodes[j]
        gv = G(s_nodes, om[None, :])
        keep = gv != 0
        if not np.any(keep):
            continue
        rf = _plane_grid(f, s_nodes[keep], om, B, n_plane, 4)
        lhs += q.weights[j] * float((s_w[keep] * gv[keep]) @ rf)
    r, rw = panel_rule(np.linspace(0.0, 8.0 * f.sigma, 9), n_r)
    qa = sphere_quadrature(d, n_ang)
    pts = np.asarray(f.center)[None, None, :] + r[:, None, None] * qa.nodes[None, :, :]
    pts = pts.reshape(-1, d)
    wts = (rw * r ** (d - 1))[:, None] * qa.weights[None, :]
    vals = f(pts) * zonal_adjoint_radon(G, pts)
    rhs = float(wts.ravel() @ vals)
    return AdjointnessResult(lhs=lhs, rhs=rhs)


__all__ = ["adjoint_radon", "zonal_adjoint_radon", "radon_forward", "GaussianField",
           "adjointness_check", "AdjointnessResult", "orthonormal_complement"]
