"""Dense linear algebra and seeded randomness shared by the rest of the package.

Matrices are plain ``numpy.ndarray`` objects in float64.  Randomness goes
through :class:`RngStream`, whose Gaussian draws are a frozen function of the
seed: raw 64-bit words from PCG64 (whose output stream numpy guarantees to be
stable) are turned into uniforms by taking the top 53 bits and then into
normals with the Box-Muller transform.  Nothing here depends on numpy's
``Generator`` sampling methods, which are allowed to change between releases.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0
_MASK64 = (1 << 64) - 1


def derive_seed(*parts) -> int:
    """Hash an arbitrary tuple of labels (ints, floats, strings) to a 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        token = repr(part).encode("utf-8")
        h.update(struct.pack("<I", len(token)))
        h.update(token)
    return int.from_bytes(h.digest(), "little")


class RngStream:
    """Single-owner stream of reproducible uniform and Gaussian draws.

    ``position`` counts the raw 64-bit words consumed so far.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if seed < 0 or seed > _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.position = 0
        self._bits = np.random.PCG64(seed)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, position={self.position})"

    def spawn(self, *labels) -> "RngStream":
        """Child stream whose seed depends only on this seed and ``labels``."""
        return RngStream(derive_seed(self.seed, *labels))

    def _raw(self, n: int) -> np.ndarray:
        self.position += n
        return self._bits.random_raw(n)

    def uniform(self, size) -> np.ndarray:
        """Uniform draws on [0, 1) with 53 random bits each."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape, dtype=np.int64))
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return u.reshape(shape)

    def normal(self, size) -> np.ndarray:
        """Standard normal draws via Box-Muller, both outputs of each pair used."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape, dtype=np.int64))
        pairs = (n + 1) // 2
        raw = self._raw(2 * pairs).reshape(pairs, 2) >> np.uint64(11)
        # u1 in (0, 1] keeps the log finite
        u1 = (raw[:, 0].astype(np.float64) + 1.0) * _INV_2_53
        u2 = raw[:, 1].astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = _TWO_PI * u2
        z = np.empty((pairs, 2))
        z[:, 0] = r * np.cos(theta)
        z[:, 1] = r * np.sin(theta)
        return z.reshape(-1)[:n].reshape(shape)


def as_rng(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    return RngStream(rng)


def standard_gaussian_matrix(rows: int, cols: int, rng: RngStream) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise ValueError(f"invalid dimensions {rows}x{cols}")
    return as_rng(rng).normal((rows, cols))


def orthonormal_factors(d: int, K: int, rng: RngStream):
    """Left singular vectors (d x K) and right singular matrix (K x K) of a Gaussian d x K matrix."""
    if K < 1 or d < 1:
        raise ValueError(f"invalid dimensions d={d}, K={K}")
    if K > d:
        raise ValueError(f"need K <= d, got K={K} > d={d}")
    A = standard_gaussian_matrix(d, K, rng)
    U, _, Vt = np.linalg.svd(A, full_matrices=False)
    return U, Vt.T


def _symmetrized(S) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    return 0.5 * (S + S.T)


def symmetric_eigenvalues(S) -> np.ndarray:
    """Ascending eigenvalues of the symmetric part of ``S``."""
    return np.linalg.eigvalsh(_symmetrized(S))


def min_symmetric_eigenvalue(S) -> float:
    return float(symmetric_eigenvalues(S)[0])


def max_symmetric_eigenvalue(S) -> float:
    return float(symmetric_eigenvalues(S)[-1])


def frobenius_distance(A, B) -> float:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(np.linalg.norm(A - B))
