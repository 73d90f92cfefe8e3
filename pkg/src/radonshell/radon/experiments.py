"""Decay experiments for the adjoint Radon transform."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import InvalidInputError
from ..mc.engine import ScalingFit, fit_scaling
from .norms import LpNormResult, exterior_lp_norm, radial_angular_grid
from .profile import Profile, cap_band_integral, cap_witness
from .quadrature import sphere_quadrature
from .transform import adjoint_radon, zonal_adjoint_radon


def part_a_ratio_limit(d: int) -> float:
    """Upper limit on ``b/a`` for the localized estimate: ``(d^2-2d-1)/(2(d-1))``."""
    return (d * d - 2 * d - 1) / (2.0 * (d - 1))


def check_part_a(G: Profile) -> None:
    a, b = G.support
    lim = part_a_ratio_limit(G.d)
    if G.d < 4:
        raise InvalidInputError("the localized estimate needs d >= 4")
    if not (0 < a < b and b / a < lim):
        raise InvalidInputError(
            f"support [{a}, {b}] violates 0 < a and b/a < {lim:.6g} for d={G.d}")


def theoretical_slope(d: int) -> float:
    return -(d - 1) / (2.0 * d)


def field_of(G: Profile, q=None) -> Callable:
    """``x -> R*G(x)``: zonal fast path when possible, else quadrature ``q``."""
    if G.separable:
        return lambda X: zonal_adjoint_radon(G, X)
    if q is None:
        q = sphere_quadrature(G.d, 16)
    return lambda X: adjoint_radon(G, X, q)


def cap_cylinder_value(R: float, d: int) -> float:
    """Value of ``R*G`` on the axis cylinder for the cap witness.

    Equals ``R^{1/2}`` times the band measure, ``~ |S^{d-2}| / (4 sqrt(R))``.
    """
    return math.sqrt(R) * cap_band_integral(R, d)


@dataclass(frozen=True)
class DecayReport:
    fit: ScalingFit
    Rs: tuple
    norms: tuple
    tail_changes: tuple
    theoretical_slope: float
    part: str

    @property
    def tail_ok(self) -> bool:
        return all(t < 0.01 for t in self.tail_changes)

    def to_dict(self) -> dict:
        return {"fit": self.fit.to_dict(), "Rs": list(self.Rs), "norms": list(self.norms),
                "tail_changes": list(self.tail_changes),
                "theoretical_slope": self.theoretical_slope, "part": self.part}


_GRID = dict(ratio=2 ** 0.5, n_radial=12, n_polar=12)


def decay_experiment(family, Rs: Sequence[float], *, p: float | None = None, part: str = "b",
                     rho_factor: float = 16.0, q=None, grid: dict | None = None) -> DecayReport:
    """Exterior ``L^p`` norms of ``R*G`` over ``|x| > R`` and their log-log slope.

    ``family`` is either a fixed :class:`Profile` or a callable ``R -> Profile``
    (for instance the cap witness). ``p`` defaults to ``2d``. With
    ``part="a"`` each profile must satisfy the localized support condition;
    with ``part="b"`` the radii must not be smaller than the support bound.
    """
    Rs = [float(r) for r in Rs]
    if any(b <= a for a, b in zip(Rs, Rs[1:])):
        raise InvalidInputError("Rs must be strictly increasing")
    gkw = dict(_GRID, **(grid or {}))
    norms, tails, d = [], [], None
    for R in Rs:
        G = family(R) if callable(family) and not isinstance(family, Profile) else family
        d = G.d
        if part == "a":
            check_part_a(G)
        elif part == "b":
            if G.kind != "cap" and R < max(abs(G.support[0]), abs(G.support[1])):
                raise InvalidInputError("radii must be at least the support bound b")
        elif part != "translation":
            raise InvalidInputError(f"unknown part {part!r}")
        axis = G.axis if G.separable else None
        res = exterior_lp_norm(field_of(G, q), p or 2 * d, R, rho_factor * R, d=d,
                               axis=axis, adaptive=True, **gkw)
        norms.append(res.value)
        tails.append(res.tail_change)
    fit = fit_scaling(list(zip(Rs, norms)))
    return DecayReport(fit, tuple(Rs), tuple(norms), tuple(tails), theoretical_slope(d), part)


@dataclass(frozen=True)
class LayerwiseResult:
    total: float
    l2_norm_sq: float
    layer_norms: tuple
    k_range: tuple
    gamma: float

    @property
    def ratio(self) -> float:
        return self.total / self.l2_norm_sq if self.l2_norm_sq > 0 else 0.0


def layer_norms(G: Profile, gamma: float, k_range, *, p=None, q=None, n_radial=12,
                grid: dict | None = None) -> np.ndarray:
    """``||R*G||_{L^p(gamma^k < |x| <= gamma^{k+1})}`` for ``k0 <= k <= k1``."""
    if gamma <= 1:
        raise InvalidInputError("gamma must exceed 1")
    k0, k1 = k_range
    d = G.d
    p = p or 2 * d
    F = field_of(G, q)
    axis = G.axis if G.separable else None
    out = []
    for k in range(int(k0), int(k1) + 1):
        lo, hi = gamma ** k, gamma ** (k + 1)
        g = radial_angular_grid(d, lo, hi, axis=axis, n_radial=n_radial,
                                ratio=max(gamma ** 0.5, 1.0 + 1e-9), **(grid or {}))
        out.append(g.evaluate(F).lp_norm(p))
    return np.array(out)


def layerwise_sum(G: Profile, gamma: float, k_range, *, p=None, q=None,
                  grid: dict | None = None) -> LayerwiseResult:
    """``sum_k ||R*G||^2_{L^{2d}(layer k)}`` over ``k_range`` and its ratio to ``||G||^2``."""
    norms = layer_norms(G, gamma, k_range, p=p, q=q, grid=grid)
    return LayerwiseResult(float((norms ** 2).sum()), G.l2_norm_sq(), tuple(norms),
                           tuple(k_range), float(gamma))


@dataclass(frozen=True)
class ConvergenceReport:
    levels: tuple
    values: tuple
    changes: tuple
    level_star: int | None


def quadrature_convergence(G: Profile, x, levels: Sequence[int], tol: float = 1e-6
                           ) -> ConvergenceReport:
    """Adjoint values at ``x`` for increasing sphere-rule levels.

    ``level_star`` is the first level after which every further change is
    below ``tol`` (``None`` if never).
    """
    vals = [adjoint_radon(G, x, sphere_quadrature(G.d, L)) for L in levels]
    vals = [np.atleast_1d(v) for v in vals]
    changes = [float(np.max(np.abs(b - a))) for a, b in zip(vals, vals[1:])]
    star = None
    for i in range(len(changes)):
        if all(c < tol for c in changes[i:]):
            star = levels[i]
            break
    return ConvergenceReport(tuple(levels), tuple(float(v[0]) if v.size == 1 else v.tolist()
                                                  for v in vals), tuple(changes), star)


__all__ = ["decay_experiment", "DecayReport", "layerwise_sum", "layer_norms", "LayerwiseResult",
           "quadrature_convergence", "ConvergenceReport", "cap_cylinder_value",
           "part_a_ratio_limit", "check_part_a", "theoretical_slope", "field_of", "cap_witness",
           "LpNormResult"]
