"""Divisor flow, spectral flow and eta invariants of parametric symbol families."""

import json

from ._core import (
    ConvergenceError,
    Error,
    JsonSyntaxError,
    PreconditionError,
    clifford_generators,
    clifford_grading,
    eta_parametric,
    eta_reduced,
    eta_spectral,
    spectral_flow,
    suspended_df,
    winding_df,
)
from . import _core

__all__ = [
    "ConvergenceError",
    "Error",
    "JsonSyntaxError",
    "PreconditionError",
    "clifford_generators",
    "clifford_grading",
    "default_config",
    "eta_parametric",
    "eta_reduced",
    "eta_spectral",
    "run",
    "spectral_flow",
    "suspended_df",
    "trace_csv",
    "verify",
    "winding_df",
]


def _options(options):
    return json.dumps(options, sort_keys=True) if options else ""


def run(command, spec=None, **options):
    """Run a harness command ("sf", "eta", "df", "regint", "suspend") and return the result record.

    spec is a dict in the CLI input format; options mirror the CLI flags
    (k, p, sign, seed, tol, nodes, parity) plus config={"quad": {...}}.
    """
    text = json.dumps(spec) if spec is not None else ""
    return json.loads(_core.run(command, text, _options(options)))


def verify(suite="all", seed=0, **options):
    return json.loads(_core.run("verify", "", _options(dict(options, suite=suite, seed=seed))))


def trace_csv(spec, nodes=200):
    return _core.run("trace", json.dumps(spec), _options({"nodes": nodes}))


def default_config():
    return json.loads(_core.default_config())
