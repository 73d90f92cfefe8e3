"""Monte Carlo estimation of the reciprocal-simplex shell integral.

The integrand is ``1/|X_0 ... X_d|`` over (d+1)-tuples of shell points that
form a simplex reciprocal to a fixed simplex ``A``. Samples are produced in
fixed-size blocks; block ``b`` of stream ``s`` always draws from
``default_rng([seed, s, b])`` and partial sums are combined in block order,
so the result depends on ``(seed, n, block_size)`` but not on the number of
worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import betainc, betaincinv

from ..errors import InvalidInputError
from ..geometry import (
    DEGENERACY_ATOL,
    RECIPROCAL_RTOL,
    Simplex,
    SphereShell,
    as_simplex,
    partition_indices,
    regular_inscribed_simplex,
    sphere_area,
)
from ._backend import get_backend

DEFAULT_BLOCK = 1 << 16
DEFAULT_EPS_REL = 1e-9

_STREAM_PLAIN = 0
_STREAM_CAPS = 1
_STREAM_LAYER0 = 16


@dataclass(frozen=True)
class LayerEstimate:
    """Contribution of configurations with ``h_lo <= dist < h_hi``."""

    h_lo: float
    h_hi: float
    value: float
    std_error: float
    n_samples: int
    n_accepted: int


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    n_samples: int
    n_accepted: int
    truncated_mass_fraction: float
    seed: int
    layers: tuple = field(default=())

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidInputError("estimate is not finite")
        if self.std_error < 0 or self.n_accepted > self.n_samples:
            raise InvalidInputError("inconsistent estimate")

    @property
    def acceptance(self) -> float:
        return self.n_accepted / self.n_samples if self.n_samples else 0.0

    @property
    def relative_error(self) -> float:
        return self.std_error / abs(self.value) if self.value else math.inf

    def to_dict(self) -> dict:
        out = asdict(self)
        out["layers"] = [asdict(l) for l in self.layers]
        return out


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit ``log value = exponent * log param + intercept``."""

    exponent: float
    intercept: float
    r_squared: float
    points: tuple
    exponent_std_error: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


class _Moments:
    """Running count/mean/M2 with the pairwise (Chan) merge."""

    __slots__ = ("n", "mean", "m2", "accepted", "truncated")

    def __init__(self, n=0, mean=0.0, m2=0.0, accepted=0, truncated=0):
        self.n, self.mean, self.m2 = n, mean, m2
        self.accepted, self.truncated = accepted, truncated

    @classmethod
    def of(cls, f: np.ndarray, accepted: int, truncated: int) -> "_Moments":
        mean = float(f.mean())
        return cls(f.size, mean, float(((f - mean) ** 2).sum()), accepted, truncated)

    def merge(self, o: "_Moments") -> None:
        n = self.n + o.n
        if n == 0:
            return
        delta = o.mean - self.mean
        self.mean += delta * o.n / n
        self.m2 += o.m2 + delta * delta * self.n * o.n / n
        self.n = n
        self.accepted += o.accepted
        self.truncated += o.truncated

    def std_error(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(max(self.m2, 0.0) / (self.n - 1) / self.n)


def _rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream, block])


def _radial_fraction(rng, q: float, d: int, shape) -> np.ndarray:
    # inverse CDF of rho^d on [(r-w)^d, r^d], divided by r
    return (q + rng.random(shape) * (1.0 - q)) ** (1.0 / d)


def _directions(rng, shape, d: int) -> np.ndarray:
    g = rng.standard_normal(tuple(shape) + (d,))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def sample_shell(shell: SphereShell, rng: np.random.Generator, size=None) -> np.ndarray:
    """Uniform points of ``shell``; shape ``size + (d,)`` or ``(d,)``.

    The radius is ``r * (q + u (1 - q))**(1/d)`` with ``q = (1 - w/r)**d``,
    so rescaling the shell by ``lam`` rescales every draw by ``lam``.
    """
    d = shell.d
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    q = (1.0 - shell.w / shell.r) ** d
    g = _directions(rng, shape, d)
    t = _radial_fraction(rng, q, d, shape)
    return (shell.r * t)[..., None] * g


def _check_seed(seed) -> int:
    seed = int(seed)
    if seed < 0 or seed >= 2 ** 64:
        raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _check_A(A, shell: SphereShell) -> Simplex:
    a = as_simplex(A)
    if a.dim != shell.d:
        raise InvalidInputError(f"simplex dimension {a.dim} differs from shell dimension {shell.d}")
    v = a.vertices
    scale = max(float(np.ptp(v, axis=0).max()), 1e-300)
    if a.volume <= DEGENERACY_ATOL * scale ** a.dim:
        raise InvalidInputError("reference simplex is degenerate")
    return a


def _blocks(n: int, block_size: int) -> list[int]:
    if n < 1:
        raise InvalidInputError(f"need at least one sample, got n={n}")
    if block_size < 1:
        raise InvalidInputError("block_size must be positive")
    full, rest = divmod(n, block_size)
    return [block_size] * full + ([rest] if rest else [])


def _run_blocks(fn: Callable[[int, int], object], sizes: Sequence[int], workers: int) -> list:
    jobs = list(enumerate(sizes))
    if workers is None or workers <= 1 or len(jobs) == 1:
        return [fn(b, m) for b, m in jobs]
    # kernels release the GIL, so threads overlap the hot loop
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda job: fn(*job), jobs))


def _default_eps(shell: SphereShell, eps_vol):
    if eps_vol is None:
        return DEFAULT_EPS_REL * shell.r ** shell.d
    if eps_vol < 0:
        raise InvalidInputError("eps_vol must be nonnegative")
    return float(eps_vol)


def _weights(det: np.ndarray, acc: np.ndarray, eps_det: float, d: int):
    ok = acc.astype(bool)
    keep = ok & (det >= eps_det) & (det > 0)
    f = np.zeros(det.shape[0])
    f[keep] = math.factorial(d) / det[keep]
    return f, ok, keep


def reciprocal_integral(A, shell: SphereShell, n: int, eps_vol: float | None = None,
                        seed: int = 0, *, gamma: float = 1.0, block_size: int = DEFAULT_BLOCK,
                        workers: int = 1, backend=None) -> MCEstimate:
    """Estimate the shell integral of ``1/|X|`` over simplexes reciprocal to ``A``.

    Parameters
    ----------
    A : Simplex or (d+1, d) array
    shell : SphereShell
    n : int
        Number of (d+1)-tuples drawn uniformly from ``shell``.
    eps_vol : float, optional
        Tuples with volume below this are dropped; default ``1e-9 r^d``.
    gamma : float
        Weak-reciprocity factor, 1 for the strict test.

    Returns
    -------
    MCEstimate
        ``value = |shell|^{d+1} * mean(f)``; ``truncated_mass_fraction`` is
        the share of accepted tuples removed by the ``eps_vol`` cut.
    """
    a = _check_A(A, shell)
    seed = _check_seed(seed)
    if not (0.0 < gamma <= 1.0):
        raise InvalidInputError(f"gamma must lie in (0, 1], got {gamma}")
    d = shell.d
    be = get_backend(backend)
    ga, gb = partition_indices(d)
    A3 = np.ascontiguousarray(a.vertices[None])
    eps_det = _default_eps(shell, eps_vol) * math.factorial(d)

    def block(b, m):
        X = sample_shell(shell, _rng(seed, _STREAM_PLAIN, b), (m, d + 1))
        det, acc = be.reciprocal_block(A3, X, ga, gb, gamma, RECIPROCAL_RTOL)
        f, ok, keep = _weights(det, acc, eps_det, d)
        n_ok = int(ok.sum())
        return _Moments.of(f, n_ok, n_ok - int(keep.sum()))

    return _finish(_run_blocks(block, _blocks(n, block_size), workers),
                   shell.volume ** (d + 1), seed)


def _finish(parts, scale: float, seed: int, layers=()) -> MCEstimate:
    tot = _Moments()
    for p in parts:
        tot.merge(p)
    frac = tot.truncated / tot.accepted if tot.accepted else 0.0
    return MCEstimate(value=scale * tot.mean, std_error=scale * tot.std_error(),
                      n_samples=tot.n, n_accepted=tot.accepted,
                      truncated_mass_fraction=frac, seed=seed, layers=tuple(layers))


def layer_edges(r: float, n_layers: int) -> list[tuple[float, float]]:
    """Dyadic height bands ``[r/2^k, r/2^{k-1})`` plus a bottom band ``[0, .)``."""
    if n_layers < 1:
        raise InvalidInputError("need at least one layer")
    edges = []
    for k in range(n_layers - 1):
        edges.append((r * 2.0 ** -k, r * 2.0 ** (1 - k)))
    top = r * 2.0 ** (2 - n_layers) if n_layers > 1 else 2.0 * r
    edges.append((0.0, top))
    return edges


def _heights(X: np.ndarray, det: np.ndarray) -> np.ndarray:
    # distance from X_d to the hyperplane of X_0..X_{d-1}: |det| / sqrt(Gram)
    d = X.shape[2]
    E = X[:, 1:d, :] - X[:, :1, :]
    gram = np.linalg.det(np.einsum("nij,nkj->nik", E, E))
    base = np.sqrt(np.maximum(gram, 0.0))
    h = np.zeros_like(det)
    np.divide(det, base, out=h, where=base > 0)
    return h


def reciprocal_integral_layered(A, shell: SphereShell, n_per_layer: int, n_layers: int,
                                seed: int = 0, eps_vol: float | None = None, *,
                                gamma: float = 1.0, block_size: int = DEFAULT_BLOCK,
                                workers: int = 1, backend=None) -> MCEstimate:
    """Layer-by-layer estimate split by the apex height over the base facet.

    Each layer runs on its own random stream with ``n_per_layer`` tuples and
    keeps only tuples whose height falls in the layer, so layer errors are
    independent and add in quadrature.
    """
    a = _check_A(A, shell)
    seed = _check_seed(seed)
    d = shell.d
    be = get_backend(backend)
    ga, gb = partition_indices(d)
    A3 = np.ascontiguousarray(a.vertices[None])
    eps_det = _default_eps(shell, eps_vol) * math.factorial(d)
    scale = shell.volume ** (d + 1)
    layers, parts_all = [], []
    for k, (lo, hi) in enumerate(layer_edges(shell.r, n_layers)):
        last = k == n_layers - 1

        def block(b, m, k=k, lo=lo, hi=hi, last=last):
            X = sample_shell(shell, _rng(seed, _STREAM_LAYER0 + k, b), (m, d + 1))
            det, acc = be.reciprocal_block(A3, X, ga, gb, gamma, RECIPROCAL_RTOL)
            h = _heights(X, det)
            band = (h < hi) if last else ((h >= lo) & (h < hi))
            if k == 0:
                band |= h >= hi
            f, ok, keep = _weights(det, acc & band, eps_det, d)
            n_ok = int(ok.sum())
            return _Moments.of(f, n_ok, n_ok - int(keep.sum()))

        parts = _run_blocks(block, _blocks(n_per_layer, block_size), workers)
        est = _finish(parts, scale, seed)
        layers.append(LayerEstimate(lo, hi, est.value, est.std_error, est.n_samples, est.n_accepted))
        parts_all.extend(parts)
    value = sum(l.value for l in layers)
    se = math.sqrt(sum(l.std_error ** 2 for l in layers))
    acc = sum(p.accepted for p in parts_all)
    trunc = sum(p.truncated for p in parts_all)
    return MCEstimate(value=value, std_error=se, n_samples=n_per_layer * n_layers,
                      n_accepted=acc, truncated_mass_fraction=trunc / acc if acc else 0.0,
                      seed=seed, layers=tuple(layers))


def fit_scaling(points) -> ScalingFit:
    """OLS of ``log value`` on ``log param``.

    ``points`` holds ``(param, est)`` pairs where ``est`` is an
    :class:`MCEstimate`, a ``(value, std_error)`` pair or a bare value.
    The exponent error propagates each ``std_error/value`` through the
    linear least-squares weights (no fit residual term).
    """
    rows = []
    for p, est in points:
        if isinstance(est, MCEstimate):
            v, s = est.value, est.std_error
        elif isinstance(est, (tuple, list)):
            v, s = est
        else:
            v, s = est, 0.0
        p, v, s = float(p), float(v), float(s)
        if p <= 0 or v <= 0:
            raise InvalidInputError(f"fit needs positive parameters and values, got ({p}, {v})")
        rows.append((p, v, s))
    if len(rows) < 3:
        raise InvalidInputError("need at least three points to fit")
    x = np.log([r[0] for r in rows])
    y = np.log([r[1] for r in rows])
    sig = np.array([r[2] / r[1] for r in rows])
    xm = x.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0:
        raise InvalidInputError("parameters must not all be equal")
    c = (x - xm) / sxx
    slope = float(c @ y)
    intercept = float(y.mean() - slope * xm)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot <= 1e-30:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r2 = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return ScalingFit(exponent=slope, intercept=intercept, r_squared=r2,
                      points=tuple(rows), exponent_std_error=float(math.sqrt(c ** 2 @ sig ** 2)))


def max_cap_angle(d: int) -> float:
    """Half the angle between two vertices of a regular d-simplex."""
    return 0.5 * math.acos(-1.0 / d)


class CapSampler:
    """Uniform sampler of the caps around the regular inscribed simplex.

    Cap ``k`` is ``{angle(X, B_k) < eps, r - min(eps r, w) < |X| < r}``.
    """

    def __init__(self, shell: SphereShell, eps: float):
        d = shell.d
        if not (0.0 < eps < max_cap_angle(d)):
            raise InvalidInputError(
                f"caps overlap or are empty: need 0 < eps < {max_cap_angle(d):.6f}, got {eps}")
        self.shell, self.eps, self.d = shell, float(eps), d
        self.B = regular_inscribed_simplex(shell.r, d).vertices / shell.r
        self.depth = min(eps * shell.r, shell.w)
        self.q = (1.0 - self.depth / shell.r) ** d
        self._a = (d - 1) / 2.0
        # polar variable s = (1 - cos angle)/2 follows Beta(a, a) on the sphere
        self._F = float(betainc(self._a, self._a, (1.0 - math.cos(eps)) / 2.0))

    @property
    def cap_volume(self) -> float:
        solid = sphere_area(self.d) * self._F
        return solid * self.shell.r ** self.d * (1.0 - self.q) / self.d

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        d = self.d
        s = betaincinv(self._a, self._a, rng.random((m, d + 1)) * self._F)
        t = 1.0 - 2.0 * s
        g = rng.standard_normal((m, d + 1, d))
        g -= np.einsum("nkj,kj->nk", g, self.B)[..., None] * self.B
        g /= np.linalg.norm(g, axis=-1, keepdims=True)
        u = t[..., None] * self.B + np.sqrt(np.maximum(1.0 - t * t, 0.0))[..., None] * g
        rho = self.shell.r * _radial_fraction(rng, self.q, d, (m, d + 1))
        return rho[..., None] * u


def lower_bound_experiment(shell: SphereShell, eps: float, n: int, seed: int = 0,
                           eps_vol: float | None = None, *, block_size: int = DEFAULT_BLOCK,
                           workers: int = 1, backend=None) -> MCEstimate:
    """Cap-restricted reciprocal integral averaged over cap-restricted ``A``.

    Both tuples take one point per cap. The estimate is
    ``prod_k |cap_k| * mean(psi(X; Y) / |Y|)``, which is the integral over
    ``Y`` in the caps averaged over ``X`` in the caps. ``acceptance`` is the
    empirical mean of the reciprocity indicator ``psi``.
    """
    sampler = CapSampler(shell, eps)
    seed = _check_seed(seed)
    d = shell.d
    be = get_backend(backend)
    ga, gb = partition_indices(d)
    eps_det = _default_eps(shell, eps_vol) * math.factorial(d)

    def block(b, m):
        rng = _rng(seed, _STREAM_CAPS, b)
        X = sampler.sample(rng, m)
        Y = sampler.sample(rng, m)
        det, acc = be.reciprocal_block(X, Y, ga, gb, 1.0, RECIPROCAL_RTOL)
        f, ok, keep = _weights(det, acc, eps_det, d)
        n_ok = int(ok.sum())
        return _Moments.of(f, n_ok, n_ok - int(keep.sum()))

    return _finish(_run_blocks(block, _blocks(n, block_size), workers),
                   sampler.cap_volume ** (d + 1), seed)
