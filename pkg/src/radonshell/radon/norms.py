"""Radial-angular quadrature of L^p norms over exterior regions."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ..geometry import sphere_area
from .quadrature import geometric_breaks, panel_rule, sphere_quadrature

DEFAULT_POLAR_SCALES = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)


@dataclass
class FieldGrid:
    """Sampled scalar field with volume weights on a radial-angular grid.

    ``ang_index`` numbers the angular node within its radial shell.
    """

    rho: np.ndarray
    ang_index: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    values: np.ndarray | None = None

    def __len__(self):
        return self.rho.shape[0]

    def evaluate(self, field) -> "FieldGrid":
        self.values = np.asarray(field(self.points), dtype=np.float64)
        return self

    def lp_power(self, p: float, lo: float = -math.inf, hi: float = math.inf) -> float:
        if self.values is None:
            raise InvalidInputError("grid has no sampled values")
        m = (self.rho > lo) & (self.rho <= hi)
        return float(self.weights[m] @ np.abs(self.values[m]) ** p)

    def lp_norm(self, p: float, lo: float = -math.inf, hi: float = math.inf) -> float:
        return self.lp_power(p, lo, hi) ** (1.0 / p)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rho", "angular_node_index", "value"])
            vals = self.values if self.values is not None else np.full(len(self), np.nan)
            for r, k, v in zip(self.rho, self.ang_index, vals):
                w.writerow([repr(float(r)), int(k), repr(float(v))])


def _radial_rule(lo, hi, n, ratio, breaks=None):
    if breaks is None:
        if lo > 0:
            breaks = geometric_breaks(lo, hi, ratio)
        else:
            breaks = np.array([lo, hi])
    else:
        breaks = np.asarray(breaks, dtype=np.float64)
        breaks = np.unique(np.clip(np.concatenate([[lo], breaks, [hi]]), lo, hi))
    return panel_rule(breaks, n)


def _perp(axis):
    d = axis.shape[0]
    v = np.zeros(d)
    v[int(np.argmin(np.abs(axis)))] = 1.0
    v -= (v @ axis) * axis
    return v / np.linalg.norm(v)


def radial_angular_grid(d: int, lo: float, hi: float, *, axis=None, level: int = 8,
                        n_radial: int = 16, ratio: float = 2.0, radial_breaks=None,
                        n_polar: int = 12, polar_scales=DEFAULT_POLAR_SCALES) -> FieldGrid:
    """Quadrature grid for ``lo < |x| < hi`` in R^d.

    Without ``axis`` the angular rule is :func:`sphere_quadrature`. With an
    ``axis`` the field is assumed symmetric about it and only the polar angle
    is resolved; per radial node the polar panels break where the distance
    to the axis equals one of ``polar_scales``.
    """
    if not (0 <= lo < hi):
        raise InvalidInputError(f"need 0 <= lo < hi, got ({lo}, {hi})")
    r, rw = _radial_rule(lo, hi, n_radial, ratio, radial_breaks)
    if axis is None:
        q = sphere_quadrature(d, level)
        m = len(q)
        rho = np.repeat(r, m)
        pts = (r[:, None, None] * q.nodes[None]).reshape(-1, d)
        wts = (rw * r ** (d - 1))[:, None] * q.weights[None, :]
        return FieldGrid(rho, np.tile(np.arange(m), r.size), wts.ravel(), pts)
    e = np.asarray(axis, dtype=np.float64)
    e = e / np.linalg.norm(e)
    f = _perp(e)
    ring = sphere_area(d - 1) if d > 2 else 2.0
    rho_l, idx_l, w_l, pts_l = [], [], [], []
    for ri, wi in zip(r, rw):
        arcs = [math.asin(min(1.0, k / ri)) for k in polar_scales]
        br = np.unique(np.clip(np.array([0.0, math.pi / 2, math.pi] + arcs
                                        + [math.pi - a for a in arcs]), 0.0, math.pi))
        phi, pw = panel_rule(br, n_polar)
        dens = np.sin(phi) ** (d - 2) if d > 2 else np.ones_like(phi)
        rho_l.append(np.full(phi.size, ri))
        idx_l.append(np.arange(phi.size))
        w_l.append(wi * ri ** (d - 1) * ring * pw * dens)
        pts_l.append(ri * (np.cos(phi)[:, None] * e + np.sin(phi)[:, None] * f))
    return FieldGrid(np.concatenate(rho_l), np.concatenate(idx_l), np.concatenate(w_l),
                     np.concatenate(pts_l))


@dataclass(frozen=True)
class LpNormResult:
    value: float
    p: float
    R: float
    rho_max: float
    tail_change: float
    tail_warning: bool
    n_points: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def exterior_lp_norm(field, p: float, R: float, rho_max: float, *, d: int | None = None,
                     axis=None, adaptive: bool = False, tail_tol: float = 0.01,
                     max_doublings: int = 8, **grid_kw) -> LpNormResult:
    """``(int_{R < |x| < rho_max} |field|^p dx)^{1/p}`` with a tail diagnostic.

    ``field`` is a :class:`FieldGrid` with values or a callable on ``(n, d)``
    point arrays. For callables the integral over ``(rho_max, 2 rho_max)``
    is added to measure the relative change of the norm when ``rho_max``
    doubles; with ``adaptive=True`` ``rho_max`` keeps doubling until that
    change is below ``tail_tol``. A change above the tolerance triggers a
    warning and sets ``tail_warning``; it is never an error.
    """
    if p < 1:
        raise InvalidInputError("p must be >= 1")
    if not rho_max > R:
        raise InvalidInputError("rho_max must exceed R")
    if isinstance(field, FieldGrid):
        inner = field.lp_power(p, R, rho_max)
        outer = field.lp_power(p, R, 2 * rho_max)
        val = inner ** (1 / p)
        change = (outer ** (1 / p) - val) / outer ** (1 / p) if outer > 0 else 0.0
        return LpNormResult(val, p, R, rho_max, change, change > tail_tol, len(field))
    if d is None:
        raise InvalidInputError("pass d when the field is a callable")
    n_pts = 0

    def shell(lo, hi):
        nonlocal n_pts
        g = radial_angular_grid(d, max(lo, 0.0), hi, axis=axis, **grid_kw).evaluate(field)
        n_pts += len(g)
        return g.lp_power(p)

    acc = shell(R, rho_max)
    rho = rho_max
    for _ in range(max_doublings + 1):
        extra = shell(rho, 2 * rho)
        total = acc + extra
        change = 0.0 if total == 0 else (total ** (1 / p) - acc ** (1 / p)) / total ** (1 / p)
        if not adaptive or change < tail_tol:
            break
        acc, rho = total, 2 * rho
    warn = change >= tail_tol
    if warn:
        warnings.warn(f"exterior norm tail change {change:.3g} exceeds {tail_tol}", RuntimeWarning)
    return LpNormResult(acc ** (1 / p), p, R, rho, change, warn, n_pts)


__all__ = ["FieldGrid", "radial_angular_grid", "exterior_lp_norm", "LpNormResult"]
