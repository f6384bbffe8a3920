from .datasets import (
    DATASET_NAMES,
    DatasetRegistry,
    gen_supervised_dataset,
)
from .logs import (
    LATENT_COLUMN,
    LOG_COLUMNS,
    LogTable,
    SURVEY_RATE,
    SimSpec,
    gen_interaction_logs,
    load_logs,
    save_logs,
)
from .online import (
    CONFIDENCE_Z,
    METRIC1_SCALE,
    OnlineExperiment,
    OnlineMetricsReport,
    TRAP_METRIC3,
    WATCH_TRAP_SHARE,
    model_trial_truth,
    reward_trial_truth,
    simulate_online,
    watch_time_share,
)
from .rewards import latent_correlation, pearson, reward_values

__all__ = [
    "DATASET_NAMES",
    "DatasetRegistry",
    "gen_supervised_dataset",
    "LATENT_COLUMN",
    "LOG_COLUMNS",
    "LogTable",
    "SURVEY_RATE",
    "SimSpec",
    "gen_interaction_logs",
    "load_logs",
    "save_logs",
    "CONFIDENCE_Z",
    "METRIC1_SCALE",
    "OnlineExperiment",
    "OnlineMetricsReport",
    "TRAP_METRIC3",
    "WATCH_TRAP_SHARE",
    "model_trial_truth",
    "reward_trial_truth",
    "simulate_online",
    "watch_time_share",
    "latent_correlation",
    "pearson",
    "reward_values",
]
