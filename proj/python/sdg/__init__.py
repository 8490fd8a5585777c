"""Satisficing domain generalization: Python access to the C++ core."""

from ._core import (
    ConfigError,
    NumericError,
    __version__,
    beta_schedule,
    discrete_ba,
    metrics_columns,
    prop1,
    rd_curve,
    registered_objectives,
    run_command,
    sign_ba,
)

__all__ = [
    "ConfigError",
    "NumericError",
    "__version__",
    "beta_schedule",
    "discrete_ba",
    "metrics_columns",
    "prop1",
    "rd_curve",
    "registered_objectives",
    "run_command",
    "sign_ba",
]
