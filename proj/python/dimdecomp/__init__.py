"""Python bindings for the dimdecomp library."""

import json as _json

from ._core import (
    BudgetExhausted,
    ConfigError,
    Error,
    FunctionSpec,
    InputModel,
    IntegrationFailure,
    IntegrationSpec,
    InvalidArgument,
    Pipeline,
    SingularFactor,
    Unavailable,
    example4_errors,
    example_model,
    make_example,
    sobol_points,
    table1,
    table2,
    table3,
    table4,
)
from . import _core


def run(config):
    """Run a reproduce or analyze config (dict) and return its rows and metadata."""
    return _core.run_json(_json.dumps(config))


def run_csv(config):
    """Like run, rendered as the CLI's CSV."""
    return _core.to_csv_json(_json.dumps(config))


__all__ = [
    "BudgetExhausted",
    "ConfigError",
    "Error",
    "FunctionSpec",
    "InputModel",
    "IntegrationFailure",
    "IntegrationSpec",
    "InvalidArgument",
    "Pipeline",
    "SingularFactor",
    "Unavailable",
    "example4_errors",
    "example_model",
    "make_example",
    "run",
    "run_csv",
    "sobol_points",
    "table1",
    "table2",
    "table3",
    "table4",
]
