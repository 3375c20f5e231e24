"""Fair provider profiling: shift interventions, efficient estimators and checks."""

import json

from ._fairpos import (
    PRNG,
    SCHEMA_VERSION,
    FairposError,
    eif_mean,
    interventional_propensity,
    observed_mean,
    one_step,
    processes,
    shift,
    smoothing,
    true_functional,
)
from . import _fairpos


def analyze(input, treatment, outcome, covariates, families=(), benchmark=None, k=100.0, folds=2, seed=0, threads=1):
    """Run the full analysis on a CSV file and return the report as a dict."""
    text = _fairpos.analyze_json(input, treatment, outcome, list(covariates), list(families), benchmark, k, folds,
                                 seed, threads)
    return json.loads(text)


def fairness_check():
    return json.loads(_fairpos.fairness_check_json())


def necessity_check():
    return json.loads(_fairpos.necessity_check_json())


def telescoping(seed=1, draws=1000):
    return json.loads(_fairpos.telescoping_json(seed, draws))


__all__ = [
    "PRNG",
    "SCHEMA_VERSION",
    "FairposError",
    "analyze",
    "eif_mean",
    "fairness_check",
    "interventional_propensity",
    "necessity_check",
    "observed_mean",
    "one_step",
    "processes",
    "shift",
    "smoothing",
    "telescoping",
    "true_functional",
]
