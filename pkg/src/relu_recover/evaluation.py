"""Permutation-invariant recovery metrics and numerical probes of the local geometry."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .numerics import RngStream, as_rng, min_symmetric_eigenvalue, standard_gaussian_matrix
from .objective import empirical_gradient, empirical_hessian, population_gradient_mc
from .teacher import TeacherSpec, generate_dataset

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("check", "probe_id", "seed", "N", "radius", "value")


@dataclass(frozen=True)
class PermutationMatch:
    permutation: tuple
    error: float
    relative_error: float


def _assignment_cost(W, w_star):
    # c[j, k] = ||w_j - w*_k||^2
    diff = W[:, :, None] - w_star[:, None, :]
    return np.einsum("ajk,ajk->jk", diff, diff)


def _lexicographic_assignment(C):
    """Optimal assignment; among optimal ones, the lexicographically smallest."""
    K = C.shape[0]
    rows, cols = linear_sum_assignment(C)
    best = C[rows, cols].sum()
    tol = 1e-12 * max(1.0, abs(best))
    big = np.abs(C).sum() + 1.0
    perm = list(cols)
    fixed = np.zeros_like(C)
    for j in range(K):
        for c in sorted(set(range(perm[j])) - set(perm[:j])):
            trial = C + fixed
            trial[j, :] = big
            trial[:, c] = big
            trial[j, c] = C[j, c]
            r, cc = linear_sum_assignment(trial)
            if C[r, cc].sum() <= best + tol and trial[r, cc].sum() < big:
                perm = list(cc)
                break
        # pin column perm[j] to row j for the remaining positions
        fixed[j, :] = big
        fixed[:, perm[j]] = big
        fixed[j, perm[j]] = 0.0
    return tuple(int(c) for c in perm)


def best_permutation_match(W, w_star) -> PermutationMatch:
    """Minimize ||W - W* M_pi||_F over column permutations pi.

    ``permutation[j]`` is the teacher column matched to column j of W.
    """
    W = np.asarray(W, dtype=np.float64)
    w_star = np.asarray(w_star, dtype=np.float64)
    if W.shape != w_star.shape:
        raise ValueError(f"shape mismatch: {W.shape} vs {w_star.shape}")
    scale = float(np.linalg.norm(w_star))
    if scale == 0.0:
        raise ValueError("teacher weights are zero; relative error undefined")
    perm = _lexicographic_assignment(_assignment_cost(W, w_star))
    error = float(np.linalg.norm(W - w_star[:, list(perm)]))
    return PermutationMatch(perm, error, error / scale)


def is_success(W, w_star, threshold: float = 1e-3) -> bool:
    return best_permutation_match(W, w_star).relative_error <= threshold


def _sphere_point(center, radius, rng):
    delta = standard_gaussian_matrix(*center.shape, rng)
    return center + radius * delta / np.linalg.norm(delta)


def _ball_point(center, radius, rng):
    dim = center.size
    u = float(rng.uniform(1)[0])
    return _sphere_point(center, radius * u ** (1.0 / dim), rng)


def _check_radius(spec, radius):
    if radius < 0 or radius > spec.sigma_min / 2:
        raise ValueError(f"radius must lie in [0, sigma_K/2] = [0, {spec.sigma_min / 2}]")


def check_local_strong_convexity(spec: TeacherSpec, N: int, n_probes: int, radius: float, rng: RngStream):
    """Smallest empirical-Hessian eigenvalue over probes on the sphere of ``radius`` around W*.

    Each probe draws its own point and its own dataset.  Returns ``(mu_hat, per_probe)``.
    """
    _check_radius(spec, radius)
    if N < spec.d * spec.K:
        raise ValueError("need N >= dK")
    rng = as_rng(rng)
    per_probe = []
    for i in range(n_probes):
        sub = rng.spawn("lsc", i)
        W = _sphere_point(spec.w_star, radius, sub)
        data = generate_dataset(spec, N, sub)
        H = empirical_hessian(W, data.inputs)
        per_probe.append({"probe_id": i, "seed": sub.seed, "N": N, "radius": radius,
                          "value": min_symmetric_eigenvalue(H.full)})
    return min(p["value"] for p in per_probe), per_probe


def lipschitz_probe(spec: TeacherSpec, n_pairs: int, radius: float, n_mc: int, rng: RngStream):
    """Largest observed ||grad L(W1) - grad L(W2)|| / ||W1 - W2|| over random pairs in the ball.

    Both gradients of a pair share one Monte Carlo sample.  Returns ``(L_hat, per_pair)``.
    """
    _check_radius(spec, radius)
    rng = as_rng(rng)
    min_gap = 1e-3 * spec.sigma_min
    per_pair = []
    for i in range(n_pairs):
        sub = rng.spawn("lip", i)
        while True:
            W1 = _ball_point(spec.w_star, radius, sub)
            W2 = _ball_point(spec.w_star, radius, sub)
            gap = float(np.linalg.norm(W1 - W2))
            if gap >= min_gap:
                break
        mc_seed = sub.spawn("mc").seed
        g1 = population_gradient_mc(W1, spec, n_mc, RngStream(mc_seed))
        g2 = population_gradient_mc(W2, spec, n_mc, RngStream(mc_seed))
        per_pair.append({"probe_id": i, "seed": sub.seed, "N": n_mc, "radius": radius,
                         "value": float(np.linalg.norm(g1 - g2)) / gap})
    return max(p["value"] for p in per_pair), per_pair


def hessian_lipschitz_probe(spec: TeacherSpec, N: int, n_pairs: int, radius: float, rng: RngStream):
    """Largest ||H(W1) - H(W2)||_2 / ||W1 - W2||_F over pairs, on one shared dataset."""
    _check_radius(spec, radius)
    rng = as_rng(rng)
    data = generate_dataset(spec, N, rng.spawn("data"))
    per_pair = []
    for i in range(n_pairs):
        sub = rng.spawn("hlip", i)
        W1 = _ball_point(spec.w_star, radius, sub)
        W2 = _ball_point(spec.w_star, radius, sub)
        dH = empirical_hessian(W1, data.inputs).full - empirical_hessian(W2, data.inputs).full
        ratio = float(np.linalg.norm(dH, 2)) / float(np.linalg.norm(W1 - W2))
        per_pair.append({"probe_id": i, "seed": sub.seed, "N": N, "radius": radius, "value": ratio})
    return max(p["value"] for p in per_pair), per_pair


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def concentration_sweep(spec: TeacherSpec, W, N_list, trials: int, n_mc_ref: int, rng: RngStream):
    """Log-log slope in N of the mean ||empirical gradient - population gradient||_F.

    The population gradient is one Monte Carlo estimate of size ``n_mc_ref``
    shared by every cell.  Returns ``(slope, table)``.
    """
    N_list = sorted(int(n) for n in N_list)
    if len(N_list) < 4 or N_list[-1] < 10 * N_list[0]:
        raise ValueError("need at least 4 sample sizes spanning at least a factor of 10")
    rng = as_rng(rng)
    W = np.asarray(W, dtype=np.float64)
    ref = population_gradient_mc(W, spec, n_mc_ref, rng.spawn("reference"))
    warning = ""
    if n_mc_ref < 10 * N_list[-1]:
        warning = f"n_mc_ref={n_mc_ref} is not much larger than max N={N_list[-1]}"
        log.warning(warning)
    table = []
    for N in N_list:
        devs = []
        for t in range(trials):
            sub = rng.spawn("conc", N, t)
            data = generate_dataset(spec, N, sub)
            devs.append(float(np.linalg.norm(empirical_gradient(W, data) - ref)))
        table.append({"N": N, "mean_deviation": float(np.mean(devs)), "trials": trials,
                      "seed": rng.seed, "warning": warning})
    slope = loglog_slope([r["N"] for r in table], [r["mean_deviation"] for r in table])
    return slope, table


def linear_fit(x, y):
    """Least-squares slope, intercept and R^2."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass(frozen=True)
class LinearSegment:
    entry: int
    end: int
    slope: float
    r2: float


def linear_segment(iterations, losses, floor: float = 1e-12, band: float = 0.5) -> LinearSegment:
    """Locate where a log10-loss curve joins its asymptotic straight line.

    The curve is cut at the first record with loss <= ``floor``.  A line is
    fitted to the last third of the remaining records; the entry point is the
    first record after which the curve stays within ``band`` decades of that
    line.  ``r2`` is the fit quality over [entry, end].
    """
    it = np.asarray(iterations, dtype=np.float64)
    y = np.log10(np.maximum(np.asarray(losses, dtype=np.float64), 1e-300))
    below = np.nonzero(y <= np.log10(floor))[0]
    end = int(below[0]) if below.size else len(y) - 1
    if end < 2:
        return LinearSegment(int(it[0]), int(it[end]), 0.0, 1.0)
    tail = max(0, end - max(2, (end + 1) // 3))
    slope, intercept, _ = linear_fit(it[tail:end + 1], y[tail:end + 1])
    off = np.abs(y[:end + 1] - (slope * it[:end + 1] + intercept)) > band
    bad = np.nonzero(off)[0]
    start = int(bad[-1]) + 1 if bad.size else 0
    start = min(start, end - 1)
    _, _, r2 = linear_fit(it[start:end + 1], y[start:end + 1])
    return LinearSegment(int(it[start]), int(it[end]), slope, r2)


@dataclass
class TheoryReport:
    mu_hat: float | None = None
    L_hat: float | None = None
    concentration_slope: float | None = None
    rho_hat: float | None = None
    probe_metadata: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def add_rows(self, check: str, records):
        for r in records:
            self.rows.append((check, r.get("probe_id", ""), r.get("seed", ""), r.get("N", ""),
                              r.get("radius", ""), r["value"]))

    def to_csv_lines(self):
        out = [",".join(REPORT_COLUMNS)]
        for row in self.rows:
            out.append(",".join(_cell(v) for v in row))
        return out


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)
