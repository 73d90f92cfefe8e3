"""Quadrature rules on the sphere, intervals and panels."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from ..errors import InvalidInputError
from ..frames import normal_from_angles
from ..geometry import sphere_area

SUPPORTED_DIMS = range(2, 7)


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes and positive weights on the unit sphere S^{d-1} in R^d."""

    nodes: np.ndarray
    weights: np.ndarray
    level: int

    @property
    def d(self) -> int:
        return self.nodes.shape[1]

    def __len__(self):
        return self.weights.shape[0]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=np.float64)))

    def rotated(self, Q) -> "SphereQuadrature":
        return SphereQuadrature(self.nodes @ np.asarray(Q).T, self.weights, self.level)


@functools.lru_cache(maxsize=64)
def gauss_jacobi(n: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric Gauss-Jacobi rule for weight ``(1-t^2)^alpha`` on [-1, 1]."""
    if alpha == 0.0:
        t, w = roots_legendre(n)
    else:
        t, w = roots_jacobi(n, alpha, alpha)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


@functools.lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = roots_legendre(n)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def sphere_quadrature(d: int, level: int) -> SphereQuadrature:
    """Product rule on S^{d-1}.

    Each polar angle ``w_j`` (density ``sin^{d-1-j} w_j``) is integrated with
    a ``level``-point Gauss rule in ``cos w_j`` for the matching Jacobi
    weight; the azimuth uses ``2*level`` equispaced nodes. Exact for
    polynomials of degree ``< 2*level`` restricted to the sphere.
    """
    if d not in SUPPORTED_DIMS:
        raise InvalidInputError(f"sphere quadrature supports d in 2..6, got {d}")
    if level < 1:
        raise InvalidInputError("level must be >= 1")
    m = 2 * level
    phi = 2.0 * math.pi * (np.arange(m) + 0.5) / m
    angle_axes = []
    weight_axes = []
    for j in range(1, d - 1):
        t, w = gauss_jacobi(level, (d - 2 - j) / 2.0)
        angle_axes.append(np.arccos(t))
        weight_axes.append(np.asarray(w))
    angle_axes.append(phi)
    weight_axes.append(np.full(m, 2.0 * math.pi / m))
    grids = np.meshgrid(*angle_axes, indexing="ij")
    omega = np.stack([g.ravel() for g in grids], axis=-1)
    wgrid = np.meshgrid(*weight_axes, indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrid], axis=-1), axis=-1)
    nodes = normal_from_angles(omega)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return SphereQuadrature(nodes, weights, level)


def band_quadrature(d: int, lo: float, hi: float, n_polar: int, level: int,
                    axis=None) -> SphereQuadrature:
    """Rule for the band ``lo < omega . axis < hi`` of S^{d-1}.

    The axial variable ``c = omega . axis`` is split into Gauss-Legendre
    panels on ``[lo, hi]`` carrying the weight ``(1-c^2)^{(d-3)/2}``, and the
    orthogonal S^{d-2} factor uses :func:`sphere_quadrature`.
    """
    if d < 3:
        raise InvalidInputError("band quadrature needs d >= 3")
    lo, hi = max(lo, -1.0), min(hi, 1.0)
    if not lo < hi:
        raise InvalidInputError("empty band")
    t, w = gauss_legendre(n_polar)
    c = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
    wc = 0.5 * (hi - lo) * w * (1.0 - c * c) ** ((d - 3) / 2.0)
    if d == 3:
        m = 2 * level
        ang = 2.0 * math.pi * (np.arange(m) + 0.5) / m
        sub = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        sw = np.full(m, 2.0 * math.pi / m)
    else:
        q = sphere_quadrature(d - 1, level)
        sub, sw = q.nodes, q.weights
    s = np.sqrt(np.maximum(1.0 - c * c, 0.0))
    nodes = np.concatenate([
        np.hstack([s[i] * sub, np.full((sub.shape[0], 1), c[i])]) for i in range(c.size)])
    weights = np.concatenate([wc[i] * sw for i in range(c.size)])
    if axis is not None:
        nodes = nodes @ rotation_to_axis(axis).T
    return SphereQuadrature(nodes, weights, level)


def rotation_to_axis(axis) -> np.ndarray:
    """Orthogonal matrix mapping e_d to the unit vector ``axis``."""
    a = np.asarray(axis, dtype=np.float64)
    a = a / np.linalg.norm(a)
    d = a.shape[0]
    # Householder reflection e_d -> a, then fix the determinant
    e = np.zeros(d)
    e[-1] = 1.0
    v = e - a
    nv = float(v @ v)
    if nv < 1e-30:
        return np.eye(d)
    H = np.eye(d) - 2.0 * np.outer(v, v) / nv
    if np.linalg.det(H) < 0:
        H[:, 0] = -H[:, 0]
    return H


def panel_rule(breaks, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive breaks."""
    b = np.asarray(breaks, dtype=np.float64)
    t, w = gauss_legendre(n)
    lo, hi = b[:-1, None], b[1:, None]
    x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
    wx = 0.5 * (hi - lo) * w
    return x.ravel(), wx.ravel()


def geometric_breaks(lo: float, hi: float, ratio: float = 2.0) -> np.ndarray:
    """Breaks ``lo, lo*ratio, ...`` ending exactly at ``hi``."""
    if not (0 < lo < hi):
        raise InvalidInputError("need 0 < lo < hi")
    n = max(1, int(math.ceil(math.log(hi / lo) / math.log(ratio) - 1e-12)))
    return lo * (hi / lo) ** (np.arange(n + 1) / n)


__all__ = ["SphereQuadrature", "sphere_quadrature", "band_quadrature", "gauss_jacobi",
           "gauss_legendre", "panel_rule", "geometric_breaks", "rotation_to_axis",
           "sphere_area"]
