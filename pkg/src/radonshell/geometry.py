"""Finite-dimensional geometry of simplexes, reciprocal splits and shells.

All functions are pure; inputs are converted to float64 arrays and never
mutated.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError

DEGENERACY_ATOL = 1e-12
RECIPROCAL_RTOL = 1e-12


def _as_points(points, d: int | None = None, count: int | None = None) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2-d array of points, got shape {arr.shape}")
    if d is not None and arr.shape[1] != d:
        raise InvalidInputError(f"points must have dimension {d}, got {arr.shape[1]}")
    if count is not None and arr.shape[0] != count:
        raise InvalidInputError(f"expected {count} points, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class Simplex:
    """A d-simplex given by its d+1 vertices in R^d."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1 or v.shape[1] < 1:
            raise InvalidInputError(
                f"a simplex in R^d needs d+1 vertices of length d, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def volume(self) -> float:
        return simplex_volume(self)

    def scaled(self, factor: float) -> "Simplex":
        return Simplex(self.vertices * factor)


@dataclass(frozen=True)
class SphereShell:
    """Origin-centred shell ``r - w <= |x| <= r`` in R^d."""

    r: float
    w: float
    d: int

    def __post_init__(self):
        if not (self.r > 0 and self.w > 0 and self.w <= self.r):
            raise InvalidInputError(f"need 0 < w <= r, got r={self.r}, w={self.w}")
        if int(self.d) != self.d or self.d < 2:
            raise InvalidInputError(f"shell dimension must be an integer >= 2, got {self.d}")

    @property
    def inner_radius(self) -> float:
        return self.r - self.w

    @property
    def volume(self) -> float:
        q = (1.0 - self.w / self.r) ** self.d
        return unit_ball_volume(self.d) * self.r ** self.d * (1.0 - q)

    def contains(self, x) -> np.ndarray:
        rho = np.linalg.norm(np.asarray(x, dtype=np.float64), axis=-1)
        return (rho >= self.r - self.w) & (rho <= self.r)

    def scaled(self, factor: float) -> "SphereShell":
        return SphereShell(self.r * factor, self.w * factor, self.d)


@dataclass(frozen=True)
class PartitionResult:
    group_a: tuple
    group_b: tuple
    product: float


@dataclass(frozen=True)
class ShellSlice:
    kind: str  # "shell", "sphere", "point" or "empty"
    r_star: float
    w_star: float


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def simplex_volume(s) -> float:
    """Volume ``|det(v1-v0, ..., vd-v0)| / d!`` of a d-simplex in R^d."""
    v = s.vertices if isinstance(s, Simplex) else _as_points(s)
    d = v.shape[1]
    if v.shape[0] != d + 1:
        raise InvalidInputError(f"a simplex in R^{d} needs {d + 1} vertices, got {v.shape[0]}")
    return abs(float(np.linalg.det(v[1:] - v[0]))) / math.factorial(d)


def simplex_measure(points) -> float:
    """k-dimensional measure of the k-simplex spanned by k+1 points in R^d.

    Uses the Gram determinant, so ``k < d`` is allowed (e.g. a facet).
    """
    p = _as_points(points)
    k = p.shape[0] - 1
    if k == 0:
        return 0.0
    e = p[1:] - p[0]
    gram = e @ e.T
    return math.sqrt(max(float(np.linalg.det(gram)), 0.0)) / math.factorial(k)


def parallelepiped_volume(vectors) -> float:
    """``|det|`` of the matrix whose columns are the given d vectors in R^d."""
    v = _as_points(vectors)
    if v.shape[0] != v.shape[1]:
        raise InvalidInputError(f"need exactly d vectors of dimension d, got shape {v.shape}")
    return abs(float(np.linalg.det(v)))


def point_hyperplane_distance(x, plane_points) -> float:
    """Distance from ``x`` to the affine hull of d points in R^d."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    p = _as_points(plane_points, d=d, count=d)
    e = p[1:] - p[0]
    normal = hyperplane_normal(e)
    return abs(float((x - p[0]) @ normal))


def hyperplane_normal(edges: np.ndarray) -> np.ndarray:
    """Unit normal of the span of d-1 edge vectors in R^d.

    Raises :class:`DegenerateGeometryError` when the edges are dependent.
    """
    d = edges.shape[1]
    if d == 1:
        return np.ones(1)
    u, s, vt = np.linalg.svd(edges, full_matrices=True)
    scale = max(1.0, float(s[0])) if s.size else 1.0
    if s.size < d - 1 or s[-1] <= DEGENERACY_ATOL * scale:
        raise DegenerateGeometryError("hyperplane points are affinely dependent")
    return vt[-1]


@functools.lru_cache(maxsize=None)
def partition_indices(d: int) -> tuple[np.ndarray, np.ndarray]:
    """All unordered splits of 2d+2 indices into two (d+1)-sets.

    ``group_a`` always contains index 0; rows are in lexicographic order of
    ``group_a`` except that the identity split ``(0..d | d+1..2d+1)`` is moved
    to row 0.
    """
    m = 2 * d + 2
    ga, gb = [], []
    for rest in itertools.combinations(range(1, m), d):
        a = (0,) + rest
        ga.append(a)
        gb.append(tuple(i for i in range(m) if i not in a))
    ident = ga.index(tuple(range(d + 1)))
    order = [ident] + [i for i in range(len(ga)) if i != ident]
    a = np.array([ga[i] for i in order], dtype=np.int32)
    b = np.array([gb[i] for i in order], dtype=np.int32)
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def _split_products(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = pts.shape[1]
    ga, gb = partition_indices(d)
    edges_a = pts[ga[:, 1:]] - pts[ga[:, :1]]
    edges_b = pts[gb[:, 1:]] - pts[gb[:, :1]]
    fact = math.factorial(d)
    prods = (np.abs(np.linalg.det(edges_a)) / fact) * (np.abs(np.linalg.det(edges_b)) / fact)
    return prods, ga, gb


def reciprocal_partition(points) -> PartitionResult:
    """Split 2d+2 points into the two (d+1)-sets maximising the volume product.

    Exhaustive over all ``C(2d+2, d+1) / 2`` splits. Ties (relative 1e-12)
    go to the lexicographically smallest ``group_a``, which is always the
    side holding index 0.
    """
    pts = _as_points(points)
    d = pts.shape[1]
    if pts.shape[0] != 2 * d + 2:
        raise InvalidInputError(f"need {2 * d + 2} points in R^{d}, got {pts.shape[0]}")
    prods, ga, gb = _split_products(pts)
    best = float(prods.max())
    # row 0 is the identity split, restore lexicographic order for tie-breaking
    lex = sorted(range(len(ga)), key=lambda i: tuple(ga[i]))
    for i in lex:
        if prods[i] >= best * (1.0 - RECIPROCAL_RTOL):
            return PartitionResult(tuple(int(k) for k in ga[i]),
                                   tuple(int(k) for k in gb[i]), float(prods[i]))
    raise AssertionError("unreachable")


def is_reciprocal(a, b, gamma: float = 1.0) -> bool:
    """True iff ``|a|*|b| >= gamma * max`` over all regroupings of the vertices."""
    va = a.vertices if isinstance(a, Simplex) else _as_points(a)
    vb = b.vertices if isinstance(b, Simplex) else _as_points(b)
    if va.shape != vb.shape or va.shape[0] != va.shape[1] + 1:
        raise InvalidInputError("both simplexes must live in the same R^d")
    if not (0.0 < gamma <= 1.0):
        raise InvalidInputError(f"gamma must lie in (0, 1], got {gamma}")
    prods, _, _ = _split_products(np.vstack([va, vb]))
    return bool(prods[0] >= gamma * float(prods.max()) * (1.0 - RECIPROCAL_RTOL))


def shell_hyperplane_slice(shell: SphereShell, c: float) -> ShellSlice:
    """Intersection of ``shell`` with the hyperplane ``x_d = c``."""
    r, w = shell.r, shell.w
    a = abs(float(c))
    if a > r:
        return ShellSlice("empty", 0.0, 0.0)
    if a == r:
        return ShellSlice("point", 0.0, 0.0)
    outer = math.sqrt(r * r - a * a)
    if a >= r - w:
        return ShellSlice("sphere", outer, outer)
    inner = math.sqrt((r - w) ** 2 - a * a)
    return ShellSlice("shell", outer, outer - inner)


def location_ratio(a, b) -> float:
    """Worst-case ratio in the location inequality for a pair of simplexes.

    For every apex ``j`` of ``a`` this compares
    ``min_k dist(b_k, face_j)`` with ``(d+1) dist(a_j, face_j)``, where
    ``face_j`` is the hyperplane through the other vertices of ``a``, and
    returns the largest quotient. Reciprocal pairs give values <= 1.
    """
    va = a.vertices if isinstance(a, Simplex) else _as_points(a)
    vb = b.vertices if isinstance(b, Simplex) else _as_points(b)
    d = va.shape[1]
    worst = 0.0
    for j in range(d + 1):
        face = np.delete(va, j, axis=0)
        h = point_hyperplane_distance(va[j], face)
        if h == 0.0:
            raise DegenerateGeometryError("simplex a is degenerate")
        near = min(point_hyperplane_distance(x, face) for x in vb)
        worst = max(worst, near / ((d + 1) * h))
    return worst


@functools.lru_cache(maxsize=None)
def _unit_regular(d: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    sub = _unit_regular(d - 1)
    top = np.zeros((1, d))
    top[0, -1] = 1.0
    rest = np.hstack([math.sqrt(1.0 - 1.0 / d ** 2) * sub, np.full((d, 1), -1.0 / d)])
    return np.vstack([top, rest])


def regular_inscribed_simplex(r: float, d: int) -> Simplex:
    """Regular simplex inscribed in the sphere of radius r, first vertex at r*e_d."""
    if d < 2 or r <= 0:
        raise InvalidInputError(f"need d >= 2 and r > 0, got d={d}, r={r}")
    return Simplex(r * _unit_regular(d))


def as_simplex(s) -> Simplex:
    return s if isinstance(s, Simplex) else Simplex(np.asarray(s, dtype=np.float64))


def combined_points(a: Simplex, b: Simplex) -> np.ndarray:
    return np.vstack([a.vertices, b.vertices])


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed rotation (det +1)."""
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


__all__: Sequence[str] = [
    "Simplex", "SphereShell", "PartitionResult", "ShellSlice",
    "simplex_volume", "simplex_measure", "parallelepiped_volume",
    "point_hyperplane_distance", "reciprocal_partition", "is_reciprocal", "location_ratio",
    "shell_hyperplane_slice", "regular_inscribed_simplex", "partition_indices",
    "unit_ball_volume", "sphere_area", "hyperplane_normal", "random_rotation",
]
