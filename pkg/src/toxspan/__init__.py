"""Toxic span detection and evaluation toolkit.

A library and command line for predicting which characters of a message
are toxic (by lexicon matching or by thresholding per-token importance
scores), scoring predictions with a character-offset F1 that handles
span-free samples, and running tuned in-domain / cross-domain benchmark
experiments with a reproducible error-analysis sampler.
"""

__version__ = "0.1.0"

from .exceptions import ConfigError, FormatError, IngestError, ToxspanError

__all__ = [
    "ConfigError",
    "FormatError",
    "IngestError",
    "ToxspanError",
    "__version__",
]
