"""Pure-numpy implementations of the compiled kernels.

Selected automatically when the extension module is not built, or when
``RADONSHELL_PURE=1`` is set.
"""
import numpy as np


def _abs_dets(P, subsets):
    # P: (n, m, d); subsets: (k, d+1) -> (n, k) unnormalised |det|
    base = P[:, subsets[:, 0], :]
    edges = P[:, subsets[:, 1:], :] - base[:, :, None, :]
    return np.abs(np.linalg.det(edges))


def reciprocal_block(A, X, group_a, group_b, gamma, rtol):
    A = np.asarray(A, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if A.shape[0] not in (1, n):
        raise ValueError("A must have one simplex or one per sample")
    if A.shape[1:] != X.shape[1:]:
        raise ValueError("shape mismatch between A and X")
    P = np.concatenate([np.broadcast_to(A, X.shape), X], axis=1)
    va = _abs_dets(P, np.asarray(group_a))
    vb = _abs_dets(P, np.asarray(group_b))
    prods = va * vb
    p0 = prods[:, 0]
    thresh = p0 / (gamma * (1.0 - rtol))
    rejected = np.any(prods[:, 1:] > thresh[:, None], axis=1)
    return vb[:, 0].copy(), (~rejected).astype(np.uint8)


def block_volumes(P):
    P = np.asarray(P, dtype=np.float64)
    return np.abs(np.linalg.det(P[:, 1:, :] - P[:, :1, :]))
