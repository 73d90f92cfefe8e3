"""Free waves in odd dimensions from their radiation profiles.

For ``d = 2 mu + 1`` the free wave with radiation profile ``G`` (as
``t -> -inf``) is

    u(x, t) = (2 pi)^{-mu} int_{S^{d-1}} G^{(mu-1)}(x . omega + t, omega) d omega,

so ``u_t`` and ``grad u`` come from ``G^{(mu)}`` inside the same integral.
Separable profiles use the zonal fast path; other profiles use a sphere rule.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError, UnsupportedDimensionError
from ..geometry import sphere_area
from ..radon.norms import FieldGrid, radial_angular_grid
from ..radon.profile import Profile
from ..radon.quadrature import SphereQuadrature, geometric_breaks, panel_rule, sphere_quadrature
from ..radon.transform import zonal_adjoint_radon

N_GL = 24


class RadiationProfile:
    """Radiation profile ``G_-`` of a free wave in odd dimension ``d``.

    Parameters
    ----------
    base : Profile
        The function on ``R x S^{d-1}``. Analytic kinds differentiate
        exactly; ``sampled_grid`` uses second-order centred differences on
        its own s-grid.
    """

    def __init__(self, base: Profile):
        if not isinstance(base, Profile):
            raise InvalidInputError("base must be a Profile")
        if base.d % 2 == 0:
            raise UnsupportedDimensionError(
                f"wave synthesis needs odd d (half-derivatives are not implemented), got d={base.d}")
        self.base = base
        self._cache = {0: base}

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def mu(self) -> int:
        return (self.base.d - 1) // 2

    @property
    def support(self):
        return self.base.support

    @property
    def bound(self) -> float:
        return max(abs(self.base.support[0]), abs(self.base.support[1]))

    def derivative(self, k: int) -> Profile:
        if not 0 <= k <= self.mu:
            raise InvalidInputError(f"derivative order must be in [0, {self.mu}]")
        if k not in self._cache:
            self._cache[k] = self.base.derivative(k)
        return self._cache[k]

    def scaled(self, c: float) -> "RadiationProfile":
        return RadiationProfile(self.base.scaled(c))

    def outgoing(self, s, omega) -> np.ndarray:
        """``G_+(s, theta) = (-1)^mu G_-(-s, -theta)``."""
        return (-1.0) ** self.mu * self.base(-np.asarray(s, dtype=np.float64),
                                             -np.asarray(omega, dtype=np.float64))

    def l2_norm_sq(self) -> float:
        return self.base.l2_norm_sq()

    def __repr__(self):
        return f"RadiationProfile({self.base!r})"


def as_radiation(G) -> RadiationProfile:
    return G if isinstance(G, RadiationProfile) else RadiationProfile(G)


@dataclass(frozen=True)
class WaveEvaluation:
    """Values of ``u``, ``u_t``, ``u_r`` and ``grad u`` at the requested points.

    ``level`` is the sphere-rule level, or ``0`` for the zonal fast path.
    """

    u: np.ndarray
    u_t: np.ndarray
    u_r: np.ndarray
    grad: np.ndarray
    level: int


def _points(x, d):
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if X.shape[-1] != d:
        raise InvalidInputError(f"points must have dimension {d}")
    return X


def _integrals(P: Profile, X, t, q, moment):
    """``int P(x . omega + t, omega) d omega`` and optionally its omega-moment."""
    if q is None and P.separable:
        return zonal_adjoint_radon(P, X, shift=t, n_gl=N_GL, moment=moment)
    if q is None:
        q = sphere_quadrature(P.d, 16)
    if q.d != P.d:
        raise InvalidInputError("quadrature dimension differs from the profile")
    val = np.empty(X.shape[0])
    mom = np.empty_like(X) if moment else None
    for lo in range(0, X.shape[0], 1024):
        Gv = P(X[lo:lo + 1024] @ q.nodes.T + t, q.nodes[None]) * q.weights
        val[lo:lo + 1024] = Gv.sum(axis=1)
        if moment:
            mom[lo:lo + 1024] = Gv @ q.nodes
    return (val, mom) if moment else val


def synthesize_wave(G, x, t: float, q: SphereQuadrature | None = None,
                    need_u: bool = True) -> WaveEvaluation:
    """Evaluate the free wave with radiation profile ``G`` at points ``x`` and time ``t``.

    ``q=None`` selects the zonal fast path for separable profiles and a
    level-16 sphere rule otherwise.
    """
    G = as_radiation(G)
    X = _points(x, G.d)
    c = (2.0 * math.pi) ** (-G.mu)
    u = c * _integrals(G.derivative(G.mu - 1), X, t, q, False) if need_u else None
    ut, grad = _integrals(G.derivative(G.mu), X, t, q, True)
    ut, grad = c * ut, c * grad
    rho = np.linalg.norm(X, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ur = np.where(rho > 0, np.einsum("ij,ij->i", X, grad) / np.where(rho > 0, rho, 1.0), 0.0)
    level = 0 if (q is None and G.base.separable) else (q.level if q is not None else 16)
    return WaveEvaluation(u, ut, ur, grad, level)


def wave_residual(G, x, t, h: float = 1e-2, q=None) -> np.ndarray:
    """Relative residual ``|u_tt - Lap u| / |u_tt|`` by fourth-order differences.

    The defect is taken at steps ``h`` and ``h/2`` and Richardson-combined,
    which removes the leading ``h^4`` term without pushing the step down into
    the quadrature noise. ``x`` is ``(n, d)`` and ``t`` has length ``n``.
    """
    G = as_radiation(G)
    X = _points(x, G.d)
    T = np.broadcast_to(np.asarray(t, dtype=np.float64), (X.shape[0],))
    d = G.d
    P = G.derivative(G.mu - 1)
    c = (2.0 * math.pi) ** (-G.mu)
    base = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    k = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    eye = np.eye(d)
    out = np.empty(X.shape[0])
    for i, (xi, ti) in enumerate(zip(X, T)):
        defects, utt = [], 0.0
        for hh in (h, 0.5 * h):
            offs = k * hh
            ut = np.array([_integrals(P, xi[None], ti + o, q, False)[0] for o in offs])
            Ys = (xi[None, None, :] + offs[None, :, None] * eye[:, None, :]).reshape(-1, d)
            ux = _integrals(P, Ys, ti, q, False).reshape(d, 5)
            utt = c * (base @ ut) / (hh * hh)
            defects.append(utt - c * (ux @ base).sum() / (hh * hh))
        r = (16.0 * defects[1] - defects[0]) / 15.0
        out[i] = abs(r) / abs(utt) if utt != 0 else abs(r)
    return out


# -- grids -------------------------------------------------------------------

def _isotropic(P: Profile) -> bool:
    return P.separable and P.band is None and P.dir_poly.degree() == 0


def wave_grid(G, t: float, lo: float, hi: float, *, n_radial: int = 12, n_polar: int = 12,
              level: int = 12, extra_breaks=()) -> FieldGrid:
    """Radial-angular grid for ``lo < |x| < hi`` adapted to the wave at time ``t``.

    Radial panels break geometrically and at ``|s - t|`` for every s-break of
    the profile (the light-cone features). Isotropic profiles need a single
    direction, zonal ones a polar rule about the axis, the rest a sphere rule.
    """
    G = as_radiation(G)
    P = G.base
    d = G.d
    width = P.support[1] - P.support[0]
    feats = np.abs(P.s_breaks() - t)
    small = max(width / 64.0, 1e-3)
    br = [geometric_breaks(small, max(hi, 2 * small), 2.0), feats, np.asarray(extra_breaks, float)]
    br = np.unique(np.concatenate([[lo, hi]] + br))
    br = br[(br >= lo) & (br <= hi)]
    if _isotropic(P):
        r, rw = panel_rule(br, n_radial)
        e = P.axis
        return FieldGrid(r, np.zeros(r.size, dtype=np.int64), rw * r ** (d - 1) * sphere_area(d),
                         r[:, None] * e[None, :])
    axis = P.axis if P.separable else None
    return radial_angular_grid(d, lo, hi, axis=axis, radial_breaks=br, n_radial=n_radial,
                               n_polar=n_polar, level=level,
                               polar_scales=(width / 8, width / 4, width / 2, width, 2 * width))


def _energy_density(G, pts, t, q=None):
    ev = synthesize_wave(G, pts, t, q, need_u=False)
    return ev.u_t ** 2 + (ev.grad ** 2).sum(axis=1)


def _energy_between(G, t, lo, hi, q, grid_kw):
    g = wave_grid(G, t, lo, hi, **grid_kw)
    return float(g.weights @ _energy_density(G, g.points, t, q))


@dataclass(frozen=True)
class EnergyResult:
    energy: float
    g_l2: float
    ratio: float
    rho_max: float
    tail_change: float
    tail_warning: bool

    def __iter__(self):
        return iter((self.energy, self.g_l2, self.ratio))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _integrate_out(G, t, lo, q, grid_kw, tail_tol, max_doublings):
    hi = max(4.0 * (abs(t) + G.bound), 2.0 * lo, 1.0)
    acc = _energy_between(G, t, lo, hi, q, grid_kw)
    change = 0.0
    for _ in range(max_doublings):
        extra = _energy_between(G, t, hi, 2 * hi, q, grid_kw)
        total = acc + extra
        change = extra / total if total > 0 else 0.0
        acc, hi = total, 2 * hi
        if change < tail_tol:
            break
    return acc, hi, change


def energy_norm(G, t: float = 0.0, q=None, *, tail_tol: float = 1e-3, max_doublings: int = 24,
                flag_at: float = 0.02, **grid_kw) -> EnergyResult:
    """``||(u, u_t)(t)||^2`` in ``H^1 x L^2`` against ``2 ||G||^2``.

    The radial range doubles until the last shell adds less than
    ``tail_tol`` of the total; a final change above ``flag_at`` sets the
    warning flag.
    """
    G = as_radiation(G)
    gl2 = G.l2_norm_sq()
    E, hi, change = _integrate_out(G, t, 0.0, q, grid_kw, tail_tol, max_doublings)
    warn = change > flag_at
    if warn:
        warnings.warn(f"energy tail change {change:.3g} exceeds {flag_at}", RuntimeWarning)
    ratio = E / (2.0 * gl2) if gl2 > 0 else (1.0 if E == 0 else math.inf)
    return EnergyResult(E, gl2, ratio, hi, change, warn)


def exterior_energy(G, t: float, R: float, q=None, *, tail_tol: float = 1e-4,
                    max_doublings: int = 24, **grid_kw) -> float:
    """Energy of ``(grad u, u_t)`` over ``|x| > |t| + R``."""
    G = as_radiation(G)
    if R < G.bound:
        raise InvalidInputError(f"profile support exceeds [-{R}, {R}]")
    E, _, change = _integrate_out(G, t, abs(t) + R, q, grid_kw, tail_tol, max_doublings)
    if change > 0.02:
        warnings.warn(f"exterior energy tail change {change:.3g}", RuntimeWarning)
    return E


@dataclass(frozen=True)
class RadiationTable:
    """Mismatch ``L^2(dr dtheta)`` norms of the outgoing radiation identities.

    ``errors_t`` measures ``r^{(d-1)/2} u_t - G_+(r - t)``, ``errors_r``
    measures ``r^{(d-1)/2} u_r + G_+(r - t)``; ``clipped`` marks windows cut
    at ``r = 0``.
    """

    t_list: tuple
    errors_t: tuple
    errors_r: tuple
    windows: tuple
    clipped: tuple

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.errors_t, self.errors_t[1:])) and \
            all(b < a for a, b in zip(self.errors_r, self.errors_r[1:]))

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in self.__dict__.items()}


def radiation_convergence(G, t_list, q=None, *, pad: float | None = None,
                          n_radial: int = 16, n_polar: int = 16, level: int = 12) -> RadiationTable:
    """Radiation-field mismatches on the window around the outgoing light cone."""
    G = as_radiation(G)
    t_list = [float(t) for t in t_list]
    if any(t <= 0 for t in t_list) or any(b <= a for a, b in zip(t_list, t_list[1:])):
        raise InvalidInputError("t_list must be increasing positive times")
    a, b = G.support
    pad = 0.5 * (b - a) if pad is None else float(pad)
    d, k = G.d, (G.d - 1) / 2.0
    et, er, wins, clip = [], [], [], []
    for t in t_list:
        lo, hi = t - b - pad, t - a + pad
        clipped = lo <= 0
        lo = max(lo, 0.0)
        g = wave_grid(G, t, lo, hi, n_radial=n_radial, n_polar=n_polar, level=level,
                      extra_breaks=t - G.base.s_breaks())
        ev = synthesize_wave(G, g.points, t, q, need_u=False)
        rho = g.rho
        theta = g.points / np.where(rho > 0, rho, 1.0)[:, None]
        gp = G.outgoing(rho - t, theta)
        w = g.weights / np.where(rho > 0, rho, 1.0) ** (d - 1)
        sc = rho ** k
        et.append(math.sqrt(max(float(w @ (sc * ev.u_t - gp) ** 2), 0.0)))
        er.append(math.sqrt(max(float(w @ (sc * ev.u_r + gp) ** 2), 0.0)))
        wins.append((lo, hi))
        clip.append(clipped)
    return RadiationTable(tuple(t_list), tuple(et), tuple(er), tuple(wins), tuple(clip))


@dataclass
class WaveSnapshot:
    t: float
    grid: FieldGrid
    u: np.ndarray
    u_t: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "rho", "angular_node_index", "u", "u_t"])
            for r, i, a, b in zip(self.grid.rho, self.grid.ang_index, self.u, self.u_t):
                w.writerow([repr(self.t), repr(float(r)), int(i), repr(float(a)), repr(float(b))])


def wave_snapshot(G, t: float, hi: float, q=None, **grid_kw) -> WaveSnapshot:
    g = wave_grid(G, t, 0.0, hi, **grid_kw)
    ev = synthesize_wave(G, g.points, t, q)
    return WaveSnapshot(float(t), g, ev.u, ev.u_t)


__all__ = ["RadiationProfile", "WaveEvaluation", "synthesize_wave", "wave_residual", "wave_grid",
           "energy_norm", "EnergyResult", "exterior_energy", "radiation_convergence",
           "RadiationTable", "WaveSnapshot", "wave_snapshot", "as_radiation"]
