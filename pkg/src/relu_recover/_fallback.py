"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Overflow is left to the caller, which checks for non-finite results.
"""

import numpy as np


def loss_and_grad(X, y, W):
    N = X.shape[0]
    if W.shape[0] != X.shape[1] or y.shape[0] != N:
        raise ValueError("dimension mismatch")
    with np.errstate(over="ignore", invalid="ignore"):
        Z = X @ W
        active = Z >= 0.0
        r = np.where(active, Z, 0.0).sum(axis=1) - y
        G = X.T @ (active * r[:, None]) / N
        return float(r @ r) / (2.0 * N), G


def loss_only(X, y, W):
    N = X.shape[0]
    if W.shape[0] != X.shape[1] or y.shape[0] != N:
        raise ValueError("dimension mismatch")
    with np.errstate(over="ignore", invalid="ignore"):
        r = np.maximum(X @ W, 0.0).sum(axis=1) - y
        return float(r @ r) / (2.0 * N)
