"""Python front end for the C++ BiJEPA core."""

import json

from ._core import ConfigError, fetch_mnist, integrate_lorenz, sine_batch, sphere_project
from . import _core

__all__ = [
    "ConfigError",
    "fetch_mnist",
    "hyperparams",
    "integrate_lorenz",
    "run",
    "sine_batch",
    "sphere_project",
]


def run(experiment, variant="bijepa-expressive", seed=0, out_dir=None, mnist_dir=None,
        steps=None, alpha=None, **overrides):
    """Train and probe one configuration; returns the report as a dict.

    Extra keyword arguments are hyperparameter overrides, e.g. ``lr=5e-4``.
    """
    text = _core.run_json(experiment, variant, seed,
                          None if out_dir is None else str(out_dir),
                          None if mnist_dir is None else str(mnist_dir),
                          steps, alpha, {k: str(v) for k, v in overrides.items()})
    return json.loads(text)


def hyperparams(experiment, variant="bijepa-expressive", **overrides):
    """Resolved hyperparameters for a configuration."""
    return json.loads(_core.resolved_json(experiment, variant, {k: str(v) for k, v in overrides.items()}))
