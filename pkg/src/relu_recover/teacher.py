"""Ground-truth ReLU teacher networks and the synthetic data they generate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import RngStream, as_rng, orthonormal_factors, standard_gaussian_matrix

DATASET_MAGIC = "# relu-recover dataset v1"


def relu(z):
    return np.maximum(z, 0.0) if isinstance(z, np.ndarray) else max(z, 0.0)


def spectrum_quantities(sigma):
    """Condition number and the product ratio prod(sigma) / sigma_min^K."""
    sigma = np.asarray(sigma, dtype=np.float64)
    s_min = sigma.min()
    kappa = float(sigma.max() / s_min)
    lam = float(np.prod(sigma / s_min))
    return kappa, lam


@dataclass(frozen=True)
class TeacherSpec:
    w_star: np.ndarray
    sigma: np.ndarray
    kappa: float
    lam: float
    nu: float = 0.0

    @property
    def d(self) -> int:
        return self.w_star.shape[0]

    @property
    def K(self) -> int:
        return self.w_star.shape[1]

    @property
    def sigma_min(self) -> float:
        return float(self.sigma[-1])

    def with_noise(self, nu: float) -> "TeacherSpec":
        if nu < 0:
            raise ValueError("noise scale must be nonnegative")
        return TeacherSpec(self.w_star, self.sigma, self.kappa, self.lam, float(nu))

    @classmethod
    def from_weights(cls, w_star, nu: float = 0.0) -> "TeacherSpec":
        w_star = np.array(w_star, dtype=np.float64)
        sigma = np.linalg.svd(w_star, compute_uv=False)
        if sigma[-1] <= 0:
            raise ValueError("teacher weights must have full column rank")
        kappa, lam = spectrum_quantities(sigma)
        return cls(w_star, sigma, kappa, lam, float(nu))


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    noise: np.ndarray | None
    seed: int | None = None
    nu: float = 0.0

    def __post_init__(self):
        n = self.inputs.shape[0]
        if self.labels.shape != (n,):
            raise ValueError("labels length must match number of input rows")
        if self.noise is not None and self.noise.shape != (n,):
            raise ValueError("noise length must match number of input rows")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


def make_ground_truth(d: int, K: int, sigma_min: float, sigma_max: float,
                      rng: RngStream, nu: float = 0.0) -> TeacherSpec:
    """W* = U diag(sigma) V^T with singular values evenly spaced from sigma_max down to sigma_min."""
    if K < 2 or K > d:
        raise ValueError(f"need 2 <= K <= d, got d={d}, K={K}")
    if sigma_min <= 0 or sigma_max < sigma_min:
        raise ValueError("need 0 < sigma_min <= sigma_max")
    U, V = orthonormal_factors(d, K, rng)
    sigma = np.linspace(sigma_max, sigma_min, K)
    w_star = (U * sigma) @ V.T
    kappa, lam = spectrum_quantities(sigma)
    return TeacherSpec(w_star, sigma, kappa, lam, float(nu))


def forward(W, x):
    """Teacher output sum_j relu(w_j . x); ``x`` may be one input or a batch of rows."""
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != W.shape[0]:
        raise ValueError(f"input dimension {x.shape[-1]} does not match weights {W.shape}")
    out = np.maximum(x @ W, 0.0).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def generate_dataset(spec: TeacherSpec, N: int, rng: RngStream) -> Dataset:
    if N < 1:
        raise ValueError("N must be positive")
    rng = as_rng(rng)
    X = standard_gaussian_matrix(N, spec.d, rng)
    if spec.nu > 0:
        eps = spec.nu * rng.normal(N)
    else:
        eps = np.zeros(N)
    y = forward(spec.w_star, X) + eps
    return Dataset(X, y, eps, rng.seed, spec.nu)


def dataset_csv(data: Dataset) -> str:
    seed = "" if data.seed is None else data.seed
    lines = [f"{DATASET_MAGIC}, N={data.n}, d={data.dim}, seed={seed}, nu={data.nu!r}"]
    for row in np.column_stack([data.inputs, data.labels]):
        lines.append(",".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


def save_dataset(data: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dataset_csv(data))


def load_dataset(path) -> Dataset:
    """Read a dataset CSV.  The noise record is not stored, so ``noise`` is None."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith(DATASET_MAGIC):
            raise ValueError(f"{path}: not a relu-recover dataset file")
        meta = {}
        for item in header[len(DATASET_MAGIC):].split(","):
            if "=" in item:
                k, v = item.split("=", 1)
                meta[k.strip()] = v.strip()
        rows = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=np.float64)
    n, d = int(meta["N"]), int(meta["d"])
    if rows.shape != (n, d + 1):
        raise ValueError(f"{path}: expected {n} rows of {d + 1} values, got {rows.shape}")
    seed = int(meta["seed"]) if meta.get("seed") else None
    nu = float(meta.get("nu", "0.0"))
    if not math.isfinite(nu):
        raise ValueError(f"{path}: bad noise level")
    return Dataset(np.ascontiguousarray(rows[:, :d]), np.ascontiguousarray(rows[:, d]), None, seed, nu)
