from .api import ApiError, create_app, serve, trial_summary
from .cli import MUTATION_PARITY, default_baseline, main

__all__ = [
    "ApiError",
    "create_app",
    "serve",
    "trial_summary",
    "MUTATION_PARITY",
    "default_baseline",
    "main",
]
