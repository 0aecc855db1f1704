"""Continual-learning benchmark engine over frozen-encoder feature spaces."""

from . import (  # noqa: F401
    classifiers,
    compute,
    errors,
    featurestore,
    metrics,
    numeric,
    replay,
    runner,
    similarity,
    streams,
    synth,
)

__version__ = "0.1.0"
