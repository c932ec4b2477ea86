"""Day-ahead electricity market bidding lab (Python front end of the C++ core)."""

from ._dabid import (
    Dataset,
    Error,
    MarketEnv,
    MissingArtifactError,
    ValidationError,
    clear_bid,
    cmaes_maximize,
    compute_gae,
    default_population,
    evaluate_strategy,
    evaluate_zero_action,
    generate_dataset,
    hourly_consumption,
    hourly_solar,
    hourly_wind,
    optimize,
    prepare_dataset,
    reference_balance,
    report,
    sweep_battery,
    train_rl,
)

__all__ = [
    "Dataset",
    "Error",
    "MarketEnv",
    "MissingArtifactError",
    "ValidationError",
    "clear_bid",
    "cmaes_maximize",
    "compute_gae",
    "default_population",
    "evaluate_strategy",
    "evaluate_zero_action",
    "generate_dataset",
    "hourly_consumption",
    "hourly_solar",
    "hourly_wind",
    "optimize",
    "prepare_dataset",
    "reference_balance",
    "report",
    "sweep_battery",
    "train_rl",
]
