"""styleirl: learn a set/distribution of cost functions from unlabeled
trajectory demonstrations and predict future motion with MPC under the
inferred cost.

Subpackages follow the pipeline: core types -> dynamics -> features ->
irl (single-cost fitting) -> priors (mixture / nearest-neighbor models over
cost weights) -> predict (online inference + MPC) -> evaluate (prediction
error harness). ``synthgen`` builds the synthetic evaluation corpora and
``io``/``cli`` handle files and the command line.
"""

from ._kernels import backend_name
from .core import CostWeights, Dataset, Trajectory, split_dataset, validate_trajectory
from .dynamics import LqrParams, PointMass, lqr_cost, lqr_solve

__version__ = "0.1.0"

__all__ = [
    "CostWeights",
    "Dataset",
    "Trajectory",
    "split_dataset",
    "validate_trajectory",
    "LqrParams",
    "PointMass",
    "lqr_cost",
    "lqr_solve",
    "backend_name",
    "__version__",
]
