"""tsdiffbench: paired time-series difference benchmark.

Generates (reference, target) series pairs whose differences are known
exactly, provides non-neural baseline explainers, and scores explanations
against the ground truth.
"""

__version__ = "0.1.0"

from .config import GenConfig  # noqa: E402
from .funclib import Interval, RangeConfig, catalog, evaluate  # noqa: E402
from .schema import DifferenceRecord, parse, serialize, validate  # noqa: E402

__all__ = [
    "__version__",
    "GenConfig",
    "Interval",
    "RangeConfig",
    "catalog",
    "evaluate",
    "DifferenceRecord",
    "parse",
    "serialize",
    "validate",
]
