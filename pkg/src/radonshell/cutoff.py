"""Smooth even cut-off ``phi`` with ``phi = 1`` on [-1, 1] and support [-2, 2]."""
from __future__ import annotations

import functools

import numpy as np
from scipy.integrate import quad

from .errors import InvalidInputError


def _psi(t, k):
    """``exp(-1/t)`` for t > 0 (else 0) and its first ``k`` derivatives."""
    t = np.asarray(t, dtype=np.float64)
    pos = t > 0
    tt = np.where(pos, t, 1.0)
    e = np.where(pos, np.exp(-1.0 / tt), 0.0)
    out = [e]
    if k >= 1:
        out.append(e / tt ** 2)
    if k >= 2:
        out.append(e * (1.0 / tt ** 4 - 2.0 / tt ** 3))
    return out


class CutoffPhi:
    """``phi(s) = psi(2-|s|) / (psi(2-|s|) + psi(|s|-1))`` with ``psi(t) = exp(-1/t)``.

    Derivatives up to order 2 are exact; L1 and L2 norms come from adaptive
    quadrature and are cached.
    """

    inner = 1.0
    outer = 2.0
    max_order = 2

    def __call__(self, s, order: int = 0) -> np.ndarray:
        if not 0 <= order <= self.max_order:
            raise InvalidInputError(f"cut-off derivatives available up to order {self.max_order}")
        s = np.asarray(s, dtype=np.float64)
        a = np.abs(s)
        sg = np.sign(s)
        A = _psi(2.0 - a, order)
        B = _psi(a - 1.0, order)
        S0 = A[0] + B[0]
        # S0 > 0 everywhere because the two psi supports overlap on (1, 2)
        phi = A[0] / S0
        if order == 0:
            return phi
        # d/ds of A(2-|s|) is -sg * A', of B(|s|-1) is +sg * B'
        A1, B1 = -sg * A[1], sg * B[1]
        S1 = A1 + B1
        d1 = (A1 * S0 - A[0] * S1) / S0 ** 2
        if order == 1:
            return d1
        A2, B2 = A[2], B[2]
        S2 = A2 + B2
        return (A2 * S0 - A[0] * S2) / S0 ** 2 - 2.0 * S1 * (A1 * S0 - A[0] * S1) / S0 ** 3

    @functools.cached_property
    def l1(self) -> float:
        v, _ = quad(lambda s: float(self(s)), 1.0, 2.0, epsabs=1e-14, epsrel=1e-13)
        return 2.0 * (1.0 + v)

    @functools.cached_property
    def l2(self) -> float:
        v, _ = quad(lambda s: float(self(s)) ** 2, 1.0, 2.0, epsabs=1e-14, epsrel=1e-13)
        return float(np.sqrt(2.0 * (1.0 + v)))

    def to_dict(self) -> dict:
        return {"kind": "exp_smoothstep", "inner": self.inner, "outer": self.outer}


PHI = CutoffPhi()
