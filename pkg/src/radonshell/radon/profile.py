"""Profiles ``G(s, omega)`` on R x S^{d-1}.

Analytic kinds are separable, ``G(s, omega) = g(s) * h(omega . axis)``,
with ``h`` either a polynomial in ``c = omega . axis`` or the indicator of
a band ``lo < c < hi``. ``sampled_grid`` stores values on an s-grid times a
set of direction nodes (linear in s, nearest node in direction).
"""
from __future__ import annotations

import json
import math

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite_e import hermeval
from scipy.special import betainc

from ..cutoff import PHI
from ..errors import InvalidInputError
from ..geometry import sphere_area
from .quadrature import gauss_jacobi, gauss_legendre, panel_rule

KINDS = ("cap", "gaussian_bump", "zonal_polynomial", "sampled_grid", "cutoff")
GAUSS_CUT = 8.0


def _unit_axis(axis, d):
    if axis is None:
        a = np.zeros(d)
        a[-1] = 1.0
        return a
    a = np.asarray(axis, dtype=np.float64)
    if a.shape != (d,):
        raise InvalidInputError(f"axis must have length {d}")
    n = np.linalg.norm(a)
    if n == 0:
        raise InvalidInputError("axis must be nonzero")
    # leave unit input untouched so JSON round trips are exact
    return a.copy() if abs(n - 1.0) <= 4e-16 else a / n


def axial_mass(d: int, lo: float, hi: float) -> float:
    """Measure of ``{omega in S^{d-1}: lo < omega_d < hi}``."""
    lo, hi = max(lo, -1.0), min(hi, 1.0)
    if hi <= lo:
        return 0.0
    if d == 2:
        return 2.0 * (math.asin(hi) - math.asin(lo))
    a = (d - 1) / 2.0
    # c = 2x - 1 maps Beta(a, a) on [0, 1] to the axial density
    return sphere_area(d) * float(betainc(a, a, (1 + hi) / 2) - betainc(a, a, (1 + lo) / 2))


class Profile:
    """A function ``G(s, omega)`` with declared s-support ``[a, b]``.

    Build instances with :func:`cap_witness`, :func:`gaussian_bump`,
    :func:`zonal_polynomial` or :func:`sampled_grid`.
    """

    def __init__(self, kind, d, support, params, axis=None, scale=1.0):
        if kind not in KINDS:
            raise InvalidInputError(f"unknown profile kind {kind!r}")
        if int(d) != d or d < 2:
            raise InvalidInputError(f"dimension must be an integer >= 2, got {d}")
        a, b = float(support[0]), float(support[1])
        if not a < b:
            raise InvalidInputError(f"support must be an interval a < b, got {support}")
        self.kind = kind
        self.d = int(d)
        self.support = (a, b)
        self.params = dict(params)
        self.axis = _unit_axis(axis, self.d)
        self.scale = float(scale)
        self._setup()

    # -- construction helpers -------------------------------------------
    def _setup(self):
        p = self.params
        if self.kind == "cap":
            R = float(p["R"])
            if R <= 0:
                raise InvalidInputError("cap parameter R must be positive")
            self._band = (0.0, 1.0 / (4.0 * R))
            self._dir = None
        elif self.kind == "sampled_grid":
            self._s = np.asarray(p["s_nodes"], dtype=np.float64)
            self._dirs = np.asarray(p["directions"], dtype=np.float64)
            self._vals = np.asarray(p["values"], dtype=np.float64)
            self._dw = np.asarray(p["dir_weights"], dtype=np.float64)
            if self._vals.shape != (self._s.size, self._dirs.shape[0]):
                raise InvalidInputError("values must have shape (len(s_nodes), len(directions))")
            if self._dirs.shape[1] != self.d or np.any(np.diff(self._s) <= 0):
                raise InvalidInputError("bad sampled grid")
            self._band = None
            self._dir = None
            return
        elif self.kind == "cutoff":
            base = p["base"]
            self._base = base if isinstance(base, Profile) else Profile.from_dict(base)
            if not self._base.separable or self._base.d != self.d:
                raise InvalidInputError("cut-off base must be a separable profile of the same dimension")
            self._order = int(p.get("order", 0))
            if not 0 <= self._order <= PHI.max_order:
                raise InvalidInputError("cut-off profiles support derivatives up to order 2")
            self._mean = float(p["mean"])
            self._band = self._base.band
            self._dir = self._base.dir_poly
            return
        else:
            self._band = None
            self._dir = Polynomial(np.asarray(p.get("dir_coeffs", [1.0]), dtype=np.float64))
        if self.kind == "zonal_polynomial":
            self._env = Polynomial(np.asarray(p["s_coeffs"], dtype=np.float64))

    # -- pointwise evaluation --------------------------------------------
    @property
    def separable(self) -> bool:
        return self.kind != "sampled_grid"

    @property
    def band(self):
        """``(lo, hi)`` when ``h`` is a band indicator, else ``None``."""
        return self._band

    @property
    def dir_poly(self):
        return self._dir

    def inside(self, s):
        s = np.asarray(s, dtype=np.float64)
        a, b = self.support
        return (s >= a) & (s <= b)

    def g(self, s) -> np.ndarray:
        """s-factor of a separable profile (zero off the support)."""
        s = np.asarray(s, dtype=np.float64)
        inside = self.inside(s)
        p = self.params
        if self.kind == "cap":
            v = np.where(inside, math.sqrt(float(p["R"])), 0.0)
        elif self.kind == "gaussian_bump":
            w = float(p["width"])
            k = int(p.get("order", 0))
            x = (s - float(p["center"])) / w
            coef = np.zeros(k + 1)
            coef[k] = (-1.0) ** k / w ** k
            v = np.where(inside, float(p.get("amplitude", 1.0)) * hermeval(x, coef)
                         * np.exp(-0.5 * x * x), 0.0)
        elif self.kind == "zonal_polynomial":
            v = np.where(inside, self._env(s), 0.0)
        elif self.kind == "cutoff":
            k = self._order
            v = np.zeros_like(s)
            for j in range(k + 1):
                gj = self._base.derivative(k - j).g(s)
                if j == k:
                    gj = gj - self._mean
                v = v + math.comb(k, j) * PHI(s, j) * gj
            v = np.where(inside, v, 0.0)
        else:
            raise InvalidInputError("sampled_grid profiles are not separable")
        return self.scale * v

    def h(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=np.float64)
        if self._band is not None:
            lo, hi = self._band
            return ((c > lo) & (c < hi)).astype(np.float64)
        if self._dir is None:
            raise InvalidInputError("sampled_grid profiles are not separable")
        return self._dir(c)

    def __call__(self, s, omega) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        om = np.asarray(omega, dtype=np.float64)
        if om.shape[-1] != self.d:
            raise InvalidInputError(f"directions must have dimension {self.d}")
        if self.separable:
            return self.g(s) * self.h(om @ self.axis)
        idx = np.argmax(om @ self._dirs.T, axis=-1)
        out = np.zeros(np.broadcast(s, idx).shape)
        sb, ib = np.broadcast_arrays(s, idx)
        for j in np.unique(ib):
            m = ib == j
            out[m] = np.interp(sb[m], self._s, self._vals[:, j], left=0.0, right=0.0)
        return self.scale * out

    # -- transformations --------------------------------------------------
    def _replace(self, **kw):
        args = dict(kind=self.kind, d=self.d, support=self.support, params=self.params,
                    axis=self.axis, scale=self.scale)
        args.update(kw)
        return Profile(**args)

    def scaled(self, c: float) -> "Profile":
        return self._replace(scale=self.scale * float(c))

    def rotated(self, Q) -> "Profile":
        """Profile ``(s, omega) -> G(s, Q omega)``."""
        Q = np.asarray(Q, dtype=np.float64)
        if self.separable:
            return self._replace(axis=Q.T @ self.axis)
        p = dict(self.params)
        p["directions"] = self._dirs @ Q
        return self._replace(params=p)

    def derivative(self, k: int = 1) -> "Profile":
        """``d^k G / ds^k`` inside the support (boundary jumps ignored)."""
        if k == 0:
            return self
        if self.kind == "gaussian_bump":
            p = dict(self.params)
            p["order"] = int(p.get("order", 0)) + k
            return self._replace(params=p)
        if self.kind == "zonal_polynomial":
            p = dict(self.params)
            p["s_coeffs"] = list(self._env.deriv(k).coef)
            return self._replace(params=p)
        if self.kind == "cutoff":
            p = dict(self.params)
            p["order"] = self._order + k
            return self._replace(params=p)
        if self.kind == "sampled_grid":
            p = dict(self.params)
            v = self._vals
            for _ in range(k):
                v = np.gradient(v, self._s, axis=0, edge_order=2)
            p["values"] = v
            return self._replace(params=p)
        raise InvalidInputError(f"derivative not available for kind {self.kind!r}")

    # -- norms ---------------------------------------------------------------
    def s_breaks(self):
        a, b = self.support
        if self.kind == "gaussian_bump":
            return np.linspace(a, b, 17)
        if self.kind == "cutoff":
            inner = self._base.s_breaks()
            fixed = np.array([-2.0, -1.75, -1.5, -1.25, -1.0, 1.0, 1.25, 1.5, 1.75, 2.0])
            return np.unique(np.clip(np.concatenate([fixed, inner]), a, b))
        return np.array([a, b])

    def _g_sq_integral(self) -> float:
        x, w = panel_rule(self.s_breaks(), 40)
        return float(w @ self.g(x) ** 2)

    def _h_sq_integral(self) -> float:
        d = self.d
        if self._band is not None:
            return axial_mass(d, *self._band)
        if d == 2:
            t, w = gauss_legendre(64)
            phi = math.pi * (t + 1)
            return float(math.pi * (w @ self._dir(np.cos(phi)) ** 2))
        n = self._dir.degree() + 2
        t, w = gauss_jacobi(n, (d - 3) / 2.0)
        return sphere_area(d - 1) * float(w @ self._dir(t) ** 2)

    def l2_norm_sq(self) -> float:
        """``int int G^2 ds d omega``."""
        if self.separable:
            return self._g_sq_integral() * self._h_sq_integral()
        total = 0.0
        for j in range(self._dirs.shape[0]):
            v = self._vals[:, j]
            ds = np.diff(self._s)
            # exact for piecewise-linear interpolants
            seg = ds * (v[:-1] ** 2 + v[:-1] * v[1:] + v[1:] ** 2) / 3.0
            total += self._dw[j] * seg.sum()
        return self.scale ** 2 * total

    def l2_norm(self) -> float:
        return math.sqrt(self.l2_norm_sq())

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        p = {k: (np.asarray(v).tolist() if isinstance(v, (np.ndarray, list, tuple)) else v)
             for k, v in self.params.items()}
        if isinstance(p.get("base"), Profile):
            p["base"] = p["base"].to_dict()
        return {"kind": self.kind, "d": self.d, "support": list(self.support),
                "params": p, "axis": self.axis.tolist(), "scale": self.scale}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "Profile":
        try:
            return cls(obj["kind"], obj["d"], obj["support"], obj["params"],
                       axis=obj.get("axis"), scale=obj.get("scale", 1.0))
        except KeyError as exc:
            raise InvalidInputError(f"profile descriptor is missing {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Profile":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        return isinstance(other, Profile) and self.to_json() == other.to_json()

    def __repr__(self):
        return f"Profile({self.kind!r}, d={self.d}, support={self.support})"


def cap_witness(R: float, d: int) -> Profile:
    """``R^{1/2}`` on ``s in [-1, 1]``, ``0 < omega_d < 1/(4R)``, zero elsewhere."""
    return Profile("cap", d, (-1.0, 1.0), {"R": float(R)})


def gaussian_bump(d: int, center: float = 0.0, width: float = 1.0, order: int = 0,
                  amplitude: float = 1.0, dir_coeffs=(1.0,), axis=None) -> Profile:
    """``amplitude * d^order/ds^order exp(-(s-center)^2/(2 width^2))`` times ``h``.

    Truncated to ``|s - center| <= 8 width``.
    """
    if width <= 0:
        raise InvalidInputError("width must be positive")
    sup = (center - GAUSS_CUT * width, center + GAUSS_CUT * width)
    return Profile("gaussian_bump", d, sup,
                   {"center": float(center), "width": float(width), "order": int(order),
                    "amplitude": float(amplitude), "dir_coeffs": list(map(float, dir_coeffs))},
                   axis=axis)


def bump_coeffs(center: float, half_width: float, power: int) -> list:
    """Monomial coefficients of ``(1 - ((s - center)/half_width)^2)^power``."""
    u = Polynomial([-center / half_width, 1.0 / half_width])
    return list(((1 - u * u) ** power).coef)


def zonal_polynomial(d: int, dir_coeffs, support=(-1.0, 1.0), s_coeffs=None,
                     power: int = 4, axis=None) -> Profile:
    """Polynomial ``h`` in ``omega . axis`` times a polynomial s-envelope.

    Without ``s_coeffs`` the envelope is the bump ``(1 - u^2)^power`` over
    the support, which is ``C^{power-1}`` across the endpoints.
    """
    a, b = map(float, support)
    if s_coeffs is None:
        s_coeffs = bump_coeffs(0.5 * (a + b), 0.5 * (b - a), power)
    return Profile("zonal_polynomial", d, (a, b),
                   {"s_coeffs": list(map(float, s_coeffs)),
                    "dir_coeffs": list(map(float, dir_coeffs))}, axis=axis)


def sampled_grid(d: int, s_nodes, directions, values, dir_weights) -> Profile:
    s = np.asarray(s_nodes, dtype=np.float64)
    return Profile("sampled_grid", d, (float(s[0]), float(s[-1])),
                   {"s_nodes": s, "directions": np.asarray(directions, dtype=np.float64),
                    "values": np.asarray(values, dtype=np.float64),
                    "dir_weights": np.asarray(dir_weights, dtype=np.float64)})


def cap_band_integral(R: float, d: int) -> float:
    """Exact measure of the cap witness band, ``|{0 < omega_d < 1/(4R)}|``."""
    return axial_mass(d, 0.0, 1.0 / (4.0 * R))


__all__ = ["Profile", "cap_witness", "gaussian_bump", "zonal_polynomial", "sampled_grid",
           "bump_coeffs", "axial_mass", "cap_band_integral"]
