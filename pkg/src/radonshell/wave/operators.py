"""Modified cut-off operator and the exterior Strichartz experiment."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..cutoff import PHI, CutoffPhi
from ..errors import InvalidInputError
from ..mc.engine import ScalingFit, fit_scaling
from ..radon.profile import Profile, sampled_grid
from ..radon.quadrature import panel_rule
from .synthesis import as_radiation, synthesize_wave, wave_grid

_CUT_BREAKS = np.array([-2.0, -1.75, -1.5, -1.25, -1.0, 1.0, 1.25, 1.5, 1.75, 2.0])


def _cut_rule(extra, n=24):
    br = np.unique(np.clip(np.concatenate([_CUT_BREAKS, np.asarray(extra, float)]), -2.0, 2.0))
    return panel_rule(br, n)


def phi_mean(G: Profile, phi: CutoffPhi = PHI, omega=None):
    """``||phi||_1^{-1} int phi(s) G(s, omega) ds``.

    For separable profiles this is the s-factor mean (a scalar); otherwise
    it is evaluated at the directions ``omega`` (default: the grid nodes).
    """
    if G.separable:
        s, w = _cut_rule(G.s_breaks())
        return float(w @ (phi(s) * G.g(s))) / phi.l1
    s, w = _cut_rule(G.params["s_nodes"])
    dirs = G.params["directions"] if omega is None else np.atleast_2d(omega)
    vals = G(s[:, None], np.asarray(dirs)[None, :, :])
    return (w * phi(s)) @ vals / phi.l1


def modified_cutoff(G: Profile, phi: CutoffPhi = PHI) -> Profile:
    """``P G = phi(s) [G(s, omega) - ||phi||_1^{-1} int phi(s') G(s', omega) ds']``.

    Separable inputs give a separable ``cutoff`` profile (exact in s);
    sampled inputs are resampled on a fine grid over [-2, 2].
    """
    if not isinstance(phi, CutoffPhi):
        raise InvalidInputError("phi must be a CutoffPhi")
    if G.separable:
        return Profile("cutoff", G.d, (-2.0, 2.0), {"base": G.to_dict(), "mean": phi_mean(G, phi)},
                       axis=G.axis)
    s_old = np.asarray(G.params["s_nodes"])
    s = np.unique(np.concatenate([np.linspace(-2.0, 2.0, 801), s_old[(s_old > -2) & (s_old < 2)]]))
    dirs = np.asarray(G.params["directions"])
    m = phi_mean(G, phi)
    vals = phi(s)[:, None] * (G(s[:, None], dirs[None, :, :]) - m[None, :])
    return sampled_grid(G.d, s, dirs, vals, G.params["dir_weights"])


def orthogonality_defect(G: Profile, phi: CutoffPhi = PHI):
    """``int phi(s) Gbar(s, omega) ds`` for the bracket ``Gbar = G - mean``.

    Zero by construction; the integral uses a finer s-rule than
    :func:`phi_mean` so the check is not circular.
    """
    if G.separable:
        s, w = _cut_rule(G.s_breaks(), 48)
        return float(w @ (phi(s) * (G.g(s) - phi_mean(G, phi))))
    s, w = _cut_rule(G.params["s_nodes"], 48)
    dirs = np.asarray(G.params["directions"])
    vals = G(s[:, None], dirs[None, :, :]) - phi_mean(G, phi)[None, :]
    return (w * phi(s)) @ vals


def double_cutoff_defect(G: Profile, phi: CutoffPhi = PHI) -> float:
    """``P(PG) - PG`` against its closed form for separable ``G`` inside [-1, 1].

    There ``PG = G - m phi`` and ``P(PG) - PG = m phi (1 - phi) - m' phi`` with
    ``m' = m (1 - ||phi||_2^2 / ||phi||_1)``; the difference vanishes only when
    ``m = 0``. Returns the max deviation from the closed form on a grid.
    """
    a, b = G.support
    if not (G.separable and -1.0 <= a and b <= 1.0):
        raise InvalidInputError("closed form needs a separable profile supported in [-1, 1]")
    PG = modified_cutoff(G, phi)
    PPG = modified_cutoff(PG, phi)
    m = PG.params["mean"]
    mp = m * (1.0 - phi.l2 ** 2 / phi.l1)
    s = np.linspace(-2.0, 2.0, 401)
    pred = m * phi(s) * (1.0 - phi(s)) - mp * phi(s)
    return float(np.max(np.abs(PPG.g(s) - PG.g(s) - pred)))


# -- exterior Strichartz norm -------------------------------------------------

@dataclass(frozen=True)
class StrichartzResult:
    fit: ScalingFit
    r_list: tuple
    norms: tuple
    t_window: float
    n_time: int
    warnings: tuple
    target: float = -2.0 / 35.0

    @property
    def slope(self) -> float:
        return self.fit.exponent

    def to_dict(self) -> dict:
        return {"fit": self.fit.to_dict(), "r_list": list(self.r_list), "norms": list(self.norms),
                "t_window": self.t_window, "n_time": self.n_time, "warnings": list(self.warnings),
                "target": self.target}


P_TIME, P_SPACE = 7.0 / 3.0, 14.0 / 3.0


def strichartz_norm(G, r: float, *, t_max: float, n_time_panels: int = 8, n_per_panel: int = 8,
                    n_radial: int = 8, n_polar: int = 8, q=None) -> float:
    """``||u||_{L^{7/3}_t L^{14/3}_x}`` over ``|t| < t_max, |x| > r``."""
    G = as_radiation(G)
    if G.d != 5:
        raise InvalidInputError("the exterior Strichartz norm is defined for d = 5")
    b = G.bound
    tb = np.concatenate([np.linspace(-t_max, t_max, n_time_panels + 1),
                         [s * v for s in (-1, 1) for v in (r - b, r + b) if 0 < v < t_max]])
    ts, tw = panel_rule(np.unique(tb), n_per_panel)
    acc = 0.0
    for t, w in zip(ts, tw):
        hi = 4.0 * max(r, abs(t) + b) + 4.0 * b
        g = wave_grid(G, t, r, hi, n_radial=n_radial, n_polar=n_polar)
        u = synthesize_wave(G, g.points, t, q).u
        inner = float(g.weights @ np.abs(u) ** P_SPACE) ** (1.0 / P_SPACE)
        acc += w * inner ** P_TIME
    return acc ** (1.0 / P_TIME)


def strichartz_exterior(G, r_list, *, t_max: float | None = None, q=None, **grid_kw
                        ) -> StrichartzResult:
    """Exterior Strichartz norms for each ``r`` and their log-log slope in ``r``.

    The time window defaults to ``max(8 R, 4 max(r_list))`` with ``R`` the
    support bound; a coarse-grid warning is always attached.
    """
    G = as_radiation(G)
    R = G.bound
    r_list = [float(r) for r in r_list]
    if any(r <= 0 for r in r_list) or any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise InvalidInputError("r_list must be increasing positive radii")
    T = float(t_max) if t_max is not None else max(8.0 * R, 4.0 * r_list[-1])
    norms = [strichartz_norm(G, r, t_max=T, q=q, **grid_kw) for r in r_list]
    notes = ["coarse space-time grid: exponent is indicative only"]
    if min(norms) <= 0:
        notes.append("zero norm: slope undefined")
        fit = ScalingFit(0.0, -math.inf, 1.0, tuple(zip(r_list, norms)), 0.0)
    else:
        fit = fit_scaling(list(zip(r_list, norms)))
    warnings.warn(notes[0], RuntimeWarning)
    n_time = grid_kw.get("n_time_panels", 8) * grid_kw.get("n_per_panel", 8)
    return StrichartzResult(fit, tuple(r_list), tuple(norms), T, n_time, tuple(notes))


__all__ = ["CutoffPhi", "PHI", "modified_cutoff", "phi_mean", "orthogonality_defect", "double_cutoff_defect",
           "strichartz_norm", "strichartz_exterior", "StrichartzResult"]
