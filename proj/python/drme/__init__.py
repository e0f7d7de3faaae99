"""DR-ME split-sample tests for distributional treatment effects."""

import json

import numpy as np

from . import _core
from ._core import InputError, NumericError, chi2_sf, noncentral_chi2_sf, theory_power

__version__ = _core.__version__
__all__ = [
    "InputError",
    "NumericError",
    "chi2_sf",
    "default_config",
    "generate",
    "noncentral_chi2_sf",
    "run_test",
    "simulate",
    "theory_power",
]


def default_config():
    """Default test configuration as a dict."""
    return json.loads(_core.default_config())


def run_test(x, a, y, **config):
    """Run the split-sample test. Keyword arguments override config fields."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    a = np.asarray(a, dtype=np.int32)
    return json.loads(_core.run_test(x, a, y, json.dumps(config)))


def generate(scenario, n, seed=0, outcome_dim=5, h=0.0):
    """Synthetic dataset as (x, a, y) arrays."""
    return _core.generate(scenario, n, seed, outcome_dim, h)


def simulate(experiment, n_grid=(), reps=0, methods=(), seed=0, workers=1, **config):
    """Monte Carlo rejection rates for a named study, as a dict."""
    report = _core.simulate(
        experiment, list(n_grid), reps, list(methods), seed, workers, json.dumps(config) if config else ""
    )
    return json.loads(report)
