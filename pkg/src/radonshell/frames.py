"""Spherical-angle orthonormal frames and the simplex change of variables.

Angles ``omega = (w_1, ..., w_{d-1})`` parameterise the unit normal

    (prod_{j<=d-1} sin w_j, cos w_{d-1} prod_{j<=d-2} sin w_j, ..., cos w_1)

and :func:`frame_from_angles` completes it to an orthogonal matrix whose
first column is that normal. A configuration of d+1 points is re-expressed
as (angles of the base-facet normal, base vertex, in-facet coordinates of
the other facet vertices, frame coordinates of the apex).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError
from .geometry import _as_points, hyperplane_normal, simplex_measure

ORTHO_TOL = 1e-10
_RANGE_SLACK = 1e-12


@dataclass(frozen=True)
class NewCoords:
    """Configuration coordinates after the change of variables.

    ``y_mid[k-1]`` holds the (d-1) in-facet coordinates of vertex k and
    ``yd`` the d frame coordinates of the apex, normal component first.
    """

    omega: np.ndarray
    y0: np.ndarray
    y_mid: np.ndarray
    yd: np.ndarray

    @property
    def d(self) -> int:
        return self.y0.shape[0]

    def flat(self) -> np.ndarray:
        return np.concatenate([self.omega, self.y0, self.y_mid.ravel(), self.yd])

    @classmethod
    def from_flat(cls, z: np.ndarray, d: int) -> "NewCoords":
        z = np.asarray(z, dtype=np.float64)
        i = d - 1
        omega = z[:i]
        y0 = z[i:i + d]
        i += d
        y_mid = z[i:i + (d - 1) ** 2].reshape(d - 1, d - 1)
        i += (d - 1) ** 2
        return cls(omega, y0, y_mid, z[i:i + d])


def _check_angles(omega: np.ndarray, d: int) -> None:
    if d < 3:
        raise InvalidInputError("frames are defined for d >= 3")
    if omega.shape != (d - 1,):
        raise InvalidInputError(f"need {d - 1} angles for d={d}, got shape {omega.shape}")
    polar = omega[:-1]
    if np.any(polar < -_RANGE_SLACK) or np.any(polar > math.pi + _RANGE_SLACK):
        raise InvalidInputError("polar angles must lie in [0, pi]")
    if not (-_RANGE_SLACK <= omega[-1] < 2 * math.pi):
        raise InvalidInputError("azimuthal angle must lie in [0, 2*pi)")


def normal_from_angles(omega) -> np.ndarray:
    """Unit normal(s) for angle tuples; accepts shape (..., d-1)."""
    om = np.asarray(omega, dtype=np.float64)
    m = om.shape[-1]
    d = m + 1
    s = np.sin(om)
    c = np.cos(om)
    out = np.empty(om.shape[:-1] + (d,))
    # coordinate m (1-based) = cos w_{d+1-m} prod_{j<=d-m} sin w_j, m >= 2
    prefix = np.ones(om.shape[:-1])
    prefixes = [prefix]
    for j in range(m):
        prefix = prefix * s[..., j]
        prefixes.append(prefix)
    out[..., 0] = prefixes[m]
    for mm in range(2, d + 1):
        out[..., mm - 1] = c[..., d - mm] * prefixes[d - mm]
    return out


def _frame(omega: np.ndarray) -> np.ndarray:
    d = omega.shape[0] + 1
    # w[j] is w_j with 1-based j
    w = np.concatenate([[0.0], omega])
    s = np.sin(w)
    c = np.cos(w)
    S = np.zeros((d, d))
    S[:, 0] = normal_from_angles(omega)
    for k in range(1, d):
        a = d - k
        tail = np.prod(s[d + 1 - k:d])
        S[0, k] = c[a] * tail
        for m in range(2, k + 1):
            S[m - 1, k] = c[a] * c[d + 1 - m] * np.prod(s[d + 1 - k:d - m + 1])
        S[k, k] = -s[a]
    return S


def frame_from_angles(omega, d: int | None = None) -> np.ndarray:
    """Orthogonal d x d matrix with columns Theta_0 ... Theta_{d-1}."""
    om = np.asarray(omega, dtype=np.float64)
    if d is None:
        d = om.shape[0] + 1
    _check_angles(om, d)
    return _frame(om)


def angles_from_normal(n, d: int | None = None) -> np.ndarray:
    """Inverse of :func:`normal_from_angles`; poles set later angles to 0."""
    v = np.asarray(n, dtype=np.float64)
    if d is None:
        d = v.shape[0]
    if v.shape != (d,) or d < 3:
        raise InvalidInputError(f"need a unit vector in R^d with d >= 3, got shape {v.shape}")
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-10:
        raise InvalidInputError("normal must have unit length")
    omega = np.zeros(d - 1)
    for k in range(1, d - 1):
        rest = float(np.linalg.norm(v[:d - k]))
        if rest == 0.0:
            break
        omega[k - 1] = math.atan2(rest, v[d - k])
    else:
        phi = math.atan2(v[0], v[1])
        if phi < 0:
            phi += 2 * math.pi
        if phi >= 2 * math.pi:
            phi = 0.0
        omega[d - 2] = phi
    return omega


def spherical_density(omega) -> float:
    """Surface-element density ``prod_{j=1}^{d-2} sin^{d-1-j} w_j``."""
    om = np.asarray(omega, dtype=np.float64)
    d = om.shape[0] + 1
    return float(np.prod([math.sin(om[j - 1]) ** (d - 1 - j) for j in range(1, d - 1)]))


def forward_change(points) -> NewCoords:
    pts = _as_points(points)
    d = pts.shape[1]
    if pts.shape[0] != d + 1 or d < 3:
        raise InvalidInputError(f"need d+1 points in R^d with d >= 3, got shape {pts.shape}")
    a0 = pts[0]
    normal = hyperplane_normal(pts[1:d] - a0)
    if float((pts[d] - a0) @ normal) < 0:
        normal = -normal
    omega = angles_from_normal(normal / np.linalg.norm(normal), d)
    S = _frame(omega)
    local = (pts - a0) @ S
    return NewCoords(omega=omega, y0=a0.copy(), y_mid=local[1:d, 1:].copy(), yd=local[d].copy())


def _assemble(omega: np.ndarray, y0, y_mid, yd) -> np.ndarray:
    S = _frame(omega)
    d = S.shape[0]
    out = np.empty((d + 1, d))
    out[0] = y0
    out[1:d] = y0 + y_mid @ S[:, 1:].T
    out[d] = y0 + S @ yd
    return out


def inverse_change(nc: NewCoords) -> np.ndarray:
    return _assemble(np.asarray(nc.omega, dtype=np.float64), nc.y0, nc.y_mid, nc.yd)


def _inverse_flat(z: np.ndarray, d: int) -> np.ndarray:
    nc = NewCoords.from_flat(z, d)
    return _assemble(nc.omega, nc.y0, nc.y_mid, nc.yd).ravel()


def jacobian_determinants(points, step: float = 1e-5) -> tuple[float, float]:
    """Finite-difference |det J| of the inverse map and its closed form.

    The closed form is the (d-1)-parallelotope measure of the base facet,
    ``(d-1)! |A_0 ... A_{d-1}|``, times the spherical density at the angles.
    Angle columns use step ``step``; coordinate columns use ``step`` times the
    configuration diameter. Fourth-order central differences throughout.
    """
    pts = _as_points(points)
    d = pts.shape[1]
    nc = forward_change(pts)
    z = nc.flat()
    scale = float(np.max(np.linalg.norm(pts - pts.mean(axis=0), axis=1))) or 1.0
    n = z.shape[0]
    J = np.empty((d * (d + 1), n))
    for i in range(n):
        h = step if i < d - 1 else step * scale
        e = np.zeros(n)
        e[i] = h
        J[:, i] = (-_inverse_flat(z + 2 * e, d) + 8 * _inverse_flat(z + e, d)
                   - 8 * _inverse_flat(z - e, d) + _inverse_flat(z - 2 * e, d)) / (12 * h)
    numeric = abs(float(np.linalg.det(J)))
    base = math.factorial(d - 1) * simplex_measure(pts[:d])
    analytic = base * spherical_density(nc.omega)
    return numeric, analytic


def jacobian_check(points, step: float = 1e-5) -> float:
    """Relative error between the numerical and closed-form Jacobian."""
    numeric, analytic = jacobian_determinants(points, step)
    if analytic <= 0.0:
        raise DegenerateGeometryError("configuration sits on a pole or a degenerate facet")
    return abs(numeric - analytic) / analytic
