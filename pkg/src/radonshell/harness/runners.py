"""One function per experiment kind: compute, write data files, return criteria."""
from __future__ import annotations

import csv
import math
import warnings
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError
from ..frames import jacobian_check
from ..geometry import SphereShell, regular_inscribed_simplex
from ..mc.engine import fit_scaling, lower_bound_experiment, reciprocal_integral
from ..radon.experiments import decay_experiment, layerwise_sum, theoretical_slope
from ..radon.profile import cap_witness, gaussian_bump, zonal_polynomial
from ..radon.transform import GaussianField, adjointness_check
from ..wave import (energy_norm, exterior_energy, radiation_convergence, strichartz_exterior,
                    wave_residual)
from .manifest import Criterion


def build_profile(desc: dict, d: int, R: float | None = None):
    """Profile from a JSON description ``{"kind": ..., **kwargs, "derivative": k}``."""
    desc = dict(desc)
    kind = desc.pop("kind", None)
    k = int(desc.pop("derivative", 0))
    try:
        if kind == "cap":
            if R is None:
                raise InvalidInputError("the cap witness needs a radius R")
            G = cap_witness(R, d)
        elif kind == "gaussian_bump":
            G = gaussian_bump(d, **desc)
        elif kind == "zonal_polynomial":
            desc.setdefault("dir_coeffs", [1.0])
            G = zonal_polynomial(d, **desc)
        else:
            raise InvalidInputError(f"unknown profile kind {kind!r}")
    except TypeError as exc:
        raise InvalidInputError(f"bad profile parameters for {kind!r}: {exc}") from None
    return G.derivative(k) if k else G


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header, rows) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path.name


def write_loglog_svg(path: Path, xs, ys, fit, xlabel: str, ylabel: str, title: str) -> str:
    """Log-log scatter with the fitted line; deterministic SVG bytes."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "radonshell", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(xs, ys, "o", label="measured")
        xx = np.geomspace(min(xs), max(xs), 50)
        ax.loglog(xx, np.exp(fit.intercept) * xx ** fit.exponent, "-",
                  label=f"slope {fit.exponent:.3f}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path.name


# -- runners -------------------------------------------------------------------

def run_reciprocal_scan(cfg, run_dir: Path):
    p, d = cfg.params, cfg.d
    r = float(p["r"])
    A = regular_inscribed_simplex(r, d)
    rows, pts = [], []
    for w in p["w_list"]:
        est = reciprocal_integral(A, SphereShell(r, float(w), d), p["n"], seed=cfg.seed,
                                  workers=cfg.workers)
        rows.append((float(w), est.value, est.std_error, est.truncated_mass_fraction))
        pts.append((float(w), est))
    fit = fit_scaling(pts)
    out = [write_csv(run_dir / "scan.csv", ["w", "estimate", "std_error", "truncated_fraction"], rows),
           write_loglog_svg(run_dir / "scan.svg", [r_[0] for r_ in rows], [r_[1] for r_ in rows],
                            fit, "w", "reciprocal integral", f"d={d}")]
    tol = p["exponent_tol"] if p["exponent_tol"] is not None else (0.5 if d == 3 else 0.7)
    trunc = max(r_[3] for r_ in rows)
    crit = [Criterion("w_exponent", abs(fit.exponent - (d + 1)) <= tol, True, fit.exponent,
                      f"{d + 1} +/- {tol}", "fitted exponent of the shell integral in w"),
            Criterion("truncated_mass", trunc < p["max_truncated"], True, trunc,
                      f"< {p['max_truncated']}", "largest truncated mass fraction")]
    return crit, out, {"fit": fit.to_dict()}


def run_lower_bound(cfg, run_dir: Path):
    p, d = cfg.params, cfg.d
    r = float(p["r"])
    rows = []
    for w in p["w_list"]:
        est = lower_bound_experiment(SphereShell(r, float(w), d), p["eps"], p["n"], seed=cfg.seed,
                                     workers=cfg.workers)
        norm = est.value / (float(w) ** (d + 1) * r ** (d * d - d - 1))
        rows.append((float(w), est.value, est.std_error, norm, est.acceptance))
    vals = [r_[3] for r_ in rows]
    spread = max(vals) / min(vals) if min(vals) > 0 else math.inf
    out = [write_csv(run_dir / "lower_bound.csv",
                     ["w", "estimate", "std_error", "normalized", "acceptance"], rows)]
    crit = [Criterion("band_spread", spread <= p["band"], True, spread, f"<= {p['band']}",
                      "max/min of the normalized cap-restricted estimate")]
    return crit, out, {"spread": spread}


def run_jacobian_check(cfg, run_dir: Path):
    p = cfg.params
    rng = np.random.default_rng([cfg.seed, 3])
    rows = []
    for d in p["d_list"]:
        for i in range(p["trials"]):
            rows.append((int(d), i, jacobian_check(rng.normal(size=(d + 1, d)))))
    worst = max(r_[2] for r_ in rows)
    out = [write_csv(run_dir / "jacobian.csv", ["d", "trial", "rel_error"], rows)]
    return [Criterion("jacobian_rel_error", worst < p["tol"], True, worst, f"< {p['tol']}",
                      "largest relative Jacobian error")], out, {"max_rel_error": worst}


def adjoint_pairs(seed: int, count: int):
    """Smooth (Gaussian field, Gaussian-bump profile) pairs in d = 3."""
    rng = np.random.default_rng([seed, 8])
    pairs = []
    for _ in range(count):
        f = GaussianField(tuple(rng.uniform(-0.5, 0.5, 3)), float(rng.uniform(0.4, 0.8)))
        G = gaussian_bump(3, center=float(rng.uniform(-0.3, 0.3)), width=float(rng.uniform(0.3, 0.6)),
                          dir_coeffs=(1.0, float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-0.3, 0.3))),
                          axis=rng.normal(size=3))
        pairs.append((f, G))
    return pairs


def run_adjoint_check(cfg, run_dir: Path):
    p = cfg.params
    rows = []
    for i, (f, G) in enumerate(adjoint_pairs(cfg.seed, p["pairs"])):
        res = adjointness_check(f, G, level=cfg.level)
        rows.append((i, res.lhs, res.rhs, res.rel_error))
    worst = max(r_[3] for r_ in rows)
    out = [write_csv(run_dir / "adjoint.csv", ["pair", "lhs", "rhs", "rel_error"], rows)]
    return [Criterion("adjointness", worst < p["tol"], True, worst, f"< {p['tol']}",
                      "largest relative mismatch of <Rf, G> and <f, R*G>")], out, {}


def run_decay(cfg, run_dir: Path):
    p, d = cfg.params, cfg.d
    desc = p["profile"]
    family = (lambda R: build_profile(desc, d, R)) if desc.get("kind") == "cap" else build_profile(desc, d)
    rep = decay_experiment(family, p["Rs"], part=p["part"])
    rows = list(zip(rep.Rs, rep.norms, rep.tail_changes))
    out = [write_csv(run_dir / "decay.csv", ["R", "norm", "tail_diag"], rows),
           write_loglog_svg(run_dir / "decay.svg", list(rep.Rs), list(rep.norms), rep.fit, "R",
                            f"exterior L^{2 * d} norm", f"d={d}")]
    target = theoretical_slope(d)
    if p["part"] == "b":
        ok = abs(rep.fit.exponent - target) <= p["slope_tol"]
        thr = f"{target:.4f} +/- {p['slope_tol']}"
    else:
        ok = rep.fit.exponent <= target + p["slope_tol"]
        thr = f"<= {target + p['slope_tol']:.4f}"
    tail = max(rep.tail_changes)
    crit = [Criterion("decay_slope", ok, True, rep.fit.exponent, thr, "exterior norm slope in R"),
            Criterion("tail", tail < p["tail_tol"], True, tail, f"< {p['tail_tol']}",
                      "tail diagnostic")]
    return crit, out, {"report": rep.to_dict()}


def run_layerwise(cfg, run_dir: Path):
    p, d = cfg.params, cfg.d
    k0, k1 = p["k_range"]
    rows, worst = [], 0.0
    for i, desc in enumerate(p["profiles"]):
        G = build_profile(desc, d)
        a = layerwise_sum(G, p["gamma"], (k0, k1))
        b = layerwise_sum(G, p["gamma"], (2 * k0, 2 * k1))
        change = abs(b.ratio - a.ratio) / a.ratio
        worst = max(worst, change)
        rows += [(i, k0, k1, a.total, a.l2_norm_sq, a.ratio),
                 (i, 2 * k0, 2 * k1, b.total, b.l2_norm_sq, b.ratio)]
    out = [write_csv(run_dir / "layerwise.csv",
                     ["profile", "k_lo", "k_hi", "layer_sum", "g_l2_sq", "ratio"], rows)]
    return [Criterion("layer_stability", worst < p["tol"], True, worst, f"< {p['tol']}",
                      "relative ratio change when the layer range doubles")], out, {}


def run_wave_energy(cfg, run_dir: Path):
    p, d = cfg.params, cfg.d
    rows, worst = [], 0.0
    for i, desc in enumerate(p["profiles"]):
        G = build_profile(desc, d)
        for t in p["t_list"]:
            res = energy_norm(G, float(t))
            worst = max(worst, abs(res.ratio - 1.0))
            rows.append((i, float(t), res.energy, res.g_l2, res.ratio, res.tail_change))
    out = [write_csv(run_dir / "energy.csv",
                     ["profile", "t", "energy", "g_l2_sq", "ratio", "tail_change"], rows)]
    crit = [Criterion("isometry", worst <= p["tol"], True, worst, f"<= {p['tol']}",
                      "largest |energy / (2 ||G||^2) - 1|")]
    ext = p.get("exterior")
    if ext:
        G = build_profile(ext["profile"], d)
        R = float(ext["R"])
        total = energy_norm(G, 0.0).energy
        erows = [(f * R, exterior_energy(G, f * R, R) / total) for f in ext["t_factors"]]
        out.append(write_csv(run_dir / "exterior.csv", ["t", "exterior_fraction"], erows))
        fr = [e for _, e in erows]
        dec = all(b < a for a, b in zip(fr, fr[1:]))
        crit.append(Criterion("exterior_energy", dec and fr[-1] < ext["limit"], True, fr[-1],
                              f"< {ext['limit']} at the last time, decreasing",
                              "exterior energy fraction over |x| > |t| + R"))
    return crit, out, {}


def run_wave_radiation(cfg, run_dir: Path):
    p, d = cfg.params, cfg.d
    G = build_profile(p["profile"], d)
    b = max(abs(G.support[0]), abs(G.support[1]))
    tab = radiation_convergence(G, [f * b for f in p["t_factors"]])
    rows = list(zip(tab.t_list, tab.errors_t, tab.errors_r, tab.clipped))
    rng = np.random.default_rng([cfg.seed, 12])
    X = rng.uniform(-1.0, 1.0, size=(p["probes"], d)) * b / math.sqrt(d)
    T = rng.uniform(-b, b, size=p["probes"])
    res = wave_residual(G, X, T)
    out = [write_csv(run_dir / "radiation.csv", ["t", "error_t", "error_r", "clipped"], rows),
           write_csv(run_dir / "residual.csv", ["probe", "t", "rel_residual"],
                     [(i, float(t), float(r_)) for i, (t, r_) in enumerate(zip(T, res))])]
    crit = [Criterion("radiation_decreasing", tab.decreasing, True, list(tab.errors_t),
                      "strictly decreasing", "radiation-field mismatch along t"),
            Criterion("wave_residual", float(res.max()) < p["residual_tol"], True, float(res.max()),
                      f"< {p['residual_tol']}", "largest relative wave-equation residual")]
    return crit, out, {"table": tab.to_dict()}


def run_strichartz(cfg, run_dir: Path):
    p, d = cfg.params, cfg.d
    G = build_profile(p["profile"], d)
    R = max(abs(G.support[0]), abs(G.support[1]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = strichartz_exterior(G, [f * R for f in p["r_factors"]])
    out = [write_csv(run_dir / "strichartz.csv", ["r", "norm"], list(zip(res.r_list, res.norms))),
           write_loglog_svg(run_dir / "strichartz.svg", list(res.r_list), list(res.norms), res.fit,
                            "r", "exterior space-time norm", "d=5")]
    crit = [Criterion("strichartz_negative", res.slope < 0, True, res.slope, "< 0",
                      "slope of the exterior norm in r"),
            Criterion("strichartz_exponent", abs(res.slope - p["target"]) <= p["soft_tol"],
                      True, res.slope, f"{p['target']:.4f} +/- {p['soft_tol']}",
                      "match of the decay exponent")]
    return crit, out, {"result": res.to_dict()}


RUNNERS = {
    "reciprocal-scan": run_reciprocal_scan,
    "lower-bound": run_lower_bound,
    "jacobian-check": run_jacobian_check,
    "adjoint-check": run_adjoint_check,
    "decay": run_decay,
    "layerwise": run_layerwise,
    "wave-energy": run_wave_energy,
    "wave-radiation": run_wave_radiation,
    "strichartz": run_strichartz,
}
