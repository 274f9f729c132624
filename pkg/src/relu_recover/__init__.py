"""Recover one-hidden-layer ReLU teacher networks with full-batch gradient descent."""

from . import _backend
from .evaluation import best_permutation_match, is_success
from .numerics import RngStream
from .objective import empirical_gradient, empirical_loss
from .teacher import Dataset, TeacherSpec, forward, generate_dataset, make_ground_truth
from .training import GDConfig, Trajectory, gradient_descent, random_init, warm_start_init

__version__ = "0.1.0"
BACKEND = _backend.NAME

__all__ = [
    "BACKEND",
    "Dataset",
    "GDConfig",
    "RngStream",
    "TeacherSpec",
    "Trajectory",
    "best_permutation_match",
    "empirical_gradient",
    "empirical_loss",
    "forward",
    "generate_dataset",
    "gradient_descent",
    "is_success",
    "make_ground_truth",
    "random_init",
    "warm_start_init",
]
