"""Learning DAGs of node-feature generation on dynamic graphs (GraphNOTEARS)."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DynamicGraphDataset,
    GroundTruthModel,
    NoiseSpec,
    is_acyclic,
    make_rng,
    validate_dataset,
)
from .design import LagSpec, StackedDesign, build_stacked  # noqa: E402
from .solver import FitResult, SolverConfig, fit_graphnotears, h_acyc, threshold  # noqa: E402
from .baselines import fit_dynotears, fit_notears_lasso  # noqa: E402
from .metrics import EdgeMetrics, score_inter, score_intra  # noqa: E402
from .simulate import GraphModelSpec, simulate_dataset  # noqa: E402

__all__ = [
    "DynamicGraphDataset",
    "GroundTruthModel",
    "NoiseSpec",
    "is_acyclic",
    "make_rng",
    "validate_dataset",
    "LagSpec",
    "StackedDesign",
    "build_stacked",
    "FitResult",
    "SolverConfig",
    "fit_graphnotears",
    "h_acyc",
    "threshold",
    "fit_dynotears",
    "fit_notears_lasso",
    "EdgeMetrics",
    "score_inter",
    "score_intra",
    "GraphModelSpec",
    "simulate_dataset",
]
