"""Anxiety detection from wristband EDA and BVP recordings.

Preprocessing, peak-based window features with an optional protocol-context
column, STAI-derived labels, Kendall tau-b feature selection, classifiers
with grid-search tuning, a synthetic cohort generator and a streaming
latency benchmark.
"""

from .errors import AnxietyBandError, ConfigError, DataError

__version__ = "0.1.0"

__all__ = ["AnxietyBandError", "ConfigError", "DataError", "__version__"]
