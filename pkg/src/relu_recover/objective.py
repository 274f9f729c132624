"""Empirical and population square loss of a one-hidden-layer ReLU network.

Weights are d x K arrays whose columns are neuron weight vectors.  The
``vec`` of a weight matrix stacks its columns, so block ``k`` of a dK vector
belongs to neuron ``k``.  Half-space indicators are inclusive at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .numerics import RngStream, as_rng
from .teacher import Dataset, TeacherSpec

_CHUNK = 1 << 16


def vec(W) -> np.ndarray:
    return np.asarray(W).reshape(-1, order="F")


def unvec(v, d: int, K: int) -> np.ndarray:
    return np.asarray(v).reshape((d, K), order="F")


def _check_shapes(W, X):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or X.ndim != 2 or W.shape[0] != X.shape[1]:
        raise ValueError(f"weights {W.shape} incompatible with inputs {X.shape}")
    return W


@dataclass(frozen=True)
class GradientDecomposition:
    signal: np.ndarray
    noise_part: np.ndarray
    total: np.ndarray


@dataclass(frozen=True)
class BlockMatrix:
    """K x K grid of d x d blocks held as one dK x dK array."""

    K: int
    d: int
    full: np.ndarray

    def block(self, k: int, j: int) -> np.ndarray:
        d = self.d
        return self.full[k * d:(k + 1) * d, j * d:(j + 1) * d]

    def __matmul__(self, other):
        return self.full @ other


def empirical_loss(W, data: Dataset) -> float:
    W = _check_shapes(W, data.inputs)
    return _backend.loss_only(data.inputs, data.labels, W)


def empirical_gradient(W, data: Dataset) -> np.ndarray:
    W = _check_shapes(W, data.inputs)
    return _backend.loss_and_grad(data.inputs, data.labels, W)[1]


def loss_and_gradient(W, data: Dataset):
    W = _check_shapes(W, data.inputs)
    return _backend.loss_and_grad(data.inputs, data.labels, W)


def sigma_hat(w_a, w_b, inputs) -> np.ndarray:
    """Average of x x^T over the samples lying in both half-spaces w_a.x >= 0 and w_b.x >= 0."""
    X = np.asarray(inputs, dtype=np.float64)
    w_a = np.asarray(w_a, dtype=np.float64).ravel()
    w_b = np.asarray(w_b, dtype=np.float64).ravel()
    if X.ndim != 2 or w_a.shape[0] != X.shape[1] or w_b.shape[0] != X.shape[1]:
        raise ValueError("dimension mismatch")
    inside = (X @ w_a >= 0.0) & (X @ w_b >= 0.0)
    Xs = X[inside]
    S = Xs.T @ Xs / X.shape[0]
    return 0.5 * (S + S.T)


def error_matrix(W, data: Dataset) -> np.ndarray:
    """Column k: average of eps_i x_i over samples with w_k.x_i >= 0."""
    if data.noise is None:
        raise ValueError("dataset carries no noise record")
    W = _check_shapes(W, data.inputs)
    X = data.inputs
    active = X @ W >= 0.0
    return X.T @ (active * data.noise[:, None]) / X.shape[0]


def gradient_decomposition(W, data: Dataset, w_star) -> GradientDecomposition:
    """Split the empirical gradient into its noiseless part and its noise part."""
    W = _check_shapes(W, data.inputs)
    X = data.inputs
    Z = X @ W
    active = Z >= 0.0
    gap = np.maximum(Z, 0.0).sum(axis=1) - np.maximum(X @ w_star, 0.0).sum(axis=1)
    signal = X.T @ (active * gap[:, None]) / X.shape[0]
    noise_part = error_matrix(W, data)
    return GradientDecomposition(signal, noise_part, empirical_gradient(W, data))


def _masked_stack(W, X):
    # columns of block k are X restricted to the half-space of w_k
    active = X @ W >= 0.0
    d, K = W.shape
    out = np.empty((X.shape[0], d * K))
    for k in range(K):
        out[:, k * d:(k + 1) * d] = X * active[:, k:k + 1]
    return out


def omega_hat(Wa, Wb, inputs) -> BlockMatrix:
    """Block (k, j) is sigma_hat(column j of Wa, column k of Wb)."""
    X = np.asarray(inputs, dtype=np.float64)
    Wa = _check_shapes(Wa, X)
    Wb = _check_shapes(Wb, X)
    if Wa.shape != Wb.shape:
        raise ValueError(f"shape mismatch: {Wa.shape} vs {Wb.shape}")
    d, K = Wa.shape
    full = np.zeros((d * K, d * K))
    for start in range(0, X.shape[0], _CHUNK):
        Xc = X[start:start + _CHUNK]
        A = _masked_stack(Wa, Xc)
        B = A if Wb is Wa else _masked_stack(Wb, Xc)
        full += B.T @ A
    full /= X.shape[0]
    return BlockMatrix(K, d, full)


def gradient_via_omega(W, data: Dataset, w_star) -> np.ndarray:
    """Gradient assembled from the block form Omega(W,W)vec(W) - Omega(W*,W)vec(W*) - vec(E)."""
    W = _check_shapes(W, data.inputs)
    w_star = np.asarray(w_star, dtype=np.float64)
    X = data.inputs
    g = omega_hat(W, W, X) @ vec(W) - omega_hat(w_star, W, X) @ vec(w_star)
    g -= vec(error_matrix(W, data))
    return unvec(g, *W.shape)


def empirical_hessian(W, inputs) -> BlockMatrix:
    """Hessian of the empirical loss on the activation cell containing W."""
    X = np.asarray(inputs, dtype=np.float64)
    W = _check_shapes(W, X).copy()
    for _ in range(8):
        if not np.any(X @ W == 0.0):
            break
        W += 1e-12 * (1.0 + np.abs(W).max())
    return omega_hat(W, W, X)


def population_sigma_mc(w_a, w_b, n_mc: int, rng: RngStream):
    """Monte Carlo estimate of E[X X^T 1{w_a.X >= 0} 1{w_b.X >= 0}] for X ~ N(0, I).

    Returns ``(estimate, se)`` with ``se`` the per-entry standard error (d x d).
    """
    if n_mc < 10_000:
        raise ValueError("n_mc must be at least 1e4")
    rng = as_rng(rng)
    w_a = np.asarray(w_a, dtype=np.float64).ravel()
    w_b = np.asarray(w_b, dtype=np.float64).ravel()
    d = w_a.shape[0]
    s1 = np.zeros((d, d))
    s2 = np.zeros((d, d))
    done = 0
    while done < n_mc:
        m = min(_CHUNK, n_mc - done)
        X = rng.normal((m, d))
        Xs = X[(X @ w_a >= 0.0) & (X @ w_b >= 0.0)]
        s1 += Xs.T @ Xs
        sq = Xs * Xs
        s2 += sq.T @ sq
        done += m
    mean = s1 / n_mc
    mean = 0.5 * (mean + mean.T)
    var = np.maximum(s2 / n_mc - mean ** 2, 0.0)
    return mean, np.sqrt(var / (n_mc - 1))


def population_gradient_mc(W, spec: TeacherSpec, n_mc: int, rng: RngStream, return_se: bool = False):
    """Unbiased Monte Carlo estimate of the population gradient.

    Equal to the empirical gradient on a fresh noiseless sample of size ``n_mc``.
    """
    if n_mc < 10_000:
        raise ValueError("n_mc must be at least 1e4")
    rng = as_rng(rng)
    W = np.asarray(W, dtype=np.float64)
    d, K = W.shape
    if spec.w_star.shape != W.shape:
        raise ValueError("weights and teacher have different shapes")
    g1 = np.zeros((d, K))
    g2 = np.zeros((d, K))
    done = 0
    while done < n_mc:
        m = min(_CHUNK, n_mc - done)
        X = rng.normal((m, d))
        Z = X @ W
        active = Z >= 0.0
        r = np.maximum(Z, 0.0).sum(axis=1) - np.maximum(X @ spec.w_star, 0.0).sum(axis=1)
        contrib = active * r[:, None]
        g1 += X.T @ contrib
        if return_se:
            g2 += (X * X).T @ (contrib * contrib)
        done += m
    g = g1 / n_mc
    if not return_se:
        return g
    var = np.maximum(g2 / n_mc - g ** 2, 0.0)
    return g, np.sqrt(var / (n_mc - 1))


def population_gradient_from_sigma(W, w_star, n_mc: int, rng: RngStream):
    """Population gradient assembled block by block from Monte Carlo covariances.

    Every covariance uses its own child stream, so the returned standard error
    treats the block estimates as independent.
    """
    rng = as_rng(rng)
    W = np.asarray(W, dtype=np.float64)
    w_star = np.asarray(w_star, dtype=np.float64)
    d, K = W.shape
    g = np.zeros((d, K))
    var = np.zeros((d, K))
    for k in range(K):
        for j in range(K):
            S, se = population_sigma_mc(W[:, j], W[:, k], n_mc, rng.spawn("own", k, j))
            g[:, k] += S @ W[:, j]
            var[:, k] += (se ** 2) @ (W[:, j] ** 2)
            S, se = population_sigma_mc(w_star[:, j], W[:, k], n_mc, rng.spawn("teacher", k, j))
            g[:, k] -= S @ w_star[:, j]
            var[:, k] += (se ** 2) @ (w_star[:, j] ** 2)
    return g, np.sqrt(var)
