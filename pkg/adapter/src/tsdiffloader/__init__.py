"""Schema-driven loader that feeds difference datasets to training code."""

from .loader import (
    AdapterError,
    LoadedPair,
    SchemaRules,
    ValidationError,
    load_manifest,
    load_schema,
    to_training_batch,
)

__all__ = [
    "AdapterError",
    "LoadedPair",
    "SchemaRules",
    "ValidationError",
    "load_manifest",
    "load_schema",
    "to_training_batch",
]

__version__ = "0.1.0"
