from .model import (
    build_model,
    clone_params,
    forward,
    gradients,
    param_arrays,
)
from .optim import OptimizerState, optimizer_step
from .train import (
    DIVERGENCE_LOSS,
    Dataset,
    TrainResult,
    compute_loss,
    estimate_cost_units,
    mse,
    split_indices,
    train_model,
)

__all__ = [
    "build_model",
    "clone_params",
    "forward",
    "gradients",
    "param_arrays",
    "OptimizerState",
    "optimizer_step",
    "DIVERGENCE_LOSS",
    "Dataset",
    "TrainResult",
    "compute_loss",
    "estimate_cost_units",
    "mse",
    "split_indices",
    "train_model",
]
