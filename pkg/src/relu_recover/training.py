"""Initializers and fixed-step full-batch gradient descent."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .evaluation import best_permutation_match
from .numerics import RngStream, standard_gaussian_matrix
from .objective import loss_and_gradient
from .teacher import Dataset, TeacherSpec


class DivergenceError(ArithmeticError):
    """Loss or gradient became non-finite during gradient descent."""

    def __init__(self, iteration: int, last_finite_W: np.ndarray, trajectory=None):
        super().__init__(f"non-finite loss or gradient at iteration {iteration}")
        self.iteration = iteration
        self.last_finite_W = last_finite_W
        self.trajectory = trajectory


@dataclass(frozen=True)
class GDConfig:
    eta: float = 0.5
    max_iters: int = 1000
    grad_tol: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("step size must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be nonnegative")


@dataclass
class Trajectory:
    iterations: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    param_errors: list = field(default_factory=list)
    final_W: np.ndarray | None = None
    stop_reason: str = "max_iters"

    def record(self, t, loss, gnorm, perr):
        self.iterations.append(t)
        self.losses.append(loss)
        self.grad_norms.append(gnorm)
        self.param_errors.append(perr)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(trajectory_csv(self))


def trajectory_csv(traj: Trajectory) -> str:
    lines = ["iter,loss,grad_norm,param_error"]
    for t, loss, g, e in zip(traj.iterations, traj.losses, traj.grad_norms, traj.param_errors):
        perr = "" if e is None else repr(float(e))
        lines.append(f"{t},{float(loss)!r},{float(g)!r},{perr}")
    return "\n".join(lines) + "\n"


def warm_start_init(spec: TeacherSpec, radius: float, rng: RngStream) -> np.ndarray:
    """Point at Frobenius distance exactly ``radius`` from W*, in a uniformly random direction."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    delta = standard_gaussian_matrix(spec.d, spec.K, rng)
    return spec.w_star + radius * delta / np.linalg.norm(delta)


def random_init(d: int, K: int, rng: RngStream) -> np.ndarray:
    if K < 1 or K > d:
        raise ValueError(f"need 1 <= K <= d, got d={d}, K={K}")
    return standard_gaussian_matrix(d, K, rng)


def theory_radius(spec: TeacherSpec, c: float = 1.0) -> float:
    """Radius c * sigma_K / (lambda kappa^3 K^2) of the local convergence ball."""
    return c * spec.sigma_min / (spec.lam * spec.kappa ** 3 * spec.K ** 2)


def gradient_descent(W0, data: Dataset, config: GDConfig, w_star=None) -> Trajectory:
    """Run W <- W - eta * grad for ``config.max_iters`` steps.

    Records every ``record_every`` iterations and always the final state.  With
    ``w_star`` given, ``param_errors`` holds the permutation-matched relative error.
    """
    W = np.array(W0, dtype=np.float64)
    if W.shape[0] != data.dim:
        raise ValueError(f"initial weights {W.shape} do not match data dimension {data.dim}")
    if w_star is not None and np.shape(w_star) != W.shape:
        raise ValueError("w_star shape differs from W0")
    traj = Trajectory()
    eta, T = config.eta, config.max_iters

    def rel_err(M):
        return None if w_star is None else best_permutation_match(M, w_star).relative_error

    for t in range(T + 1):
        loss, G = loss_and_gradient(W, data)
        gnorm = float(np.linalg.norm(G))
        if not (math.isfinite(loss) and math.isfinite(gnorm)):
            traj.final_W = W
            traj.stop_reason = "diverged"
            raise DivergenceError(t, W, traj)
        converged = config.grad_tol > 0 and gnorm <= config.grad_tol
        stop = t == T or converged
        if stop or t % config.record_every == 0:
            traj.record(t, loss, gnorm, rel_err(W))
        if stop:
            traj.stop_reason = "grad_tol" if converged else "max_iters"
            break
        W_next = W - eta * G
        if not np.all(np.isfinite(W_next)):
            traj.final_W = W
            traj.stop_reason = "diverged"
            raise DivergenceError(t + 1, W, traj)
        W = W_next
    traj.final_W = W
    return traj
