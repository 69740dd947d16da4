"""Spherical Langevin dynamics with iterate averaging.

A simulation library for recovering a planted unit direction in tensor-PCA
and single-index models by integrating a Langevin SDE on the sphere and
averaging the iterates, together with Monte-Carlo and closed-form oracles
that check the estimator's behaviour numerically.
"""

from . import dynamics, estimators, hermite, models, oracles, runner, sphere
from ._version import __version__

__all__ = [
    "sphere",
    "hermite",
    "models",
    "dynamics",
    "estimators",
    "oracles",
    "runner",
    "__version__",
]
