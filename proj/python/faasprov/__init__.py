"""Resource provisioning for serverless function pipelines.

Descriptors are plain dicts with the same fields as the JSON documents
described in docs/formats.md.
"""

from ._core import (
    FaasprovError,
    approx_ged,
    exact_ged,
    exec_time,
    grid_search_oracle,
    monthly_cost,
    predict,
    run_experiment,
    select_configuration,
    simulate,
    softmax,
    train,
)

__all__ = [
    "FaasprovError",
    "approx_ged",
    "exact_ged",
    "exec_time",
    "grid_search_oracle",
    "monthly_cost",
    "predict",
    "run_experiment",
    "select_configuration",
    "simulate",
    "softmax",
    "train",
]
