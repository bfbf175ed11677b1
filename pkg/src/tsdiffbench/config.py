"""Generation settings: a human-editable JSON config file, resolved defaults,
and the provenance hash recorded with every run."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .funclib import ConfigError, RangeConfig, catalog

BASELINE_KINDS = ("RANDOM_WALK", "AR1", "SINE_MIX", "PIECEWISE_CONST", "CORPUS")


@dataclass(frozen=True)
class GenConfig:
    """Everything a dataset generation run depends on, apart from the seed."""

    length: int = 300                    # samples per series (T)
    k_min: int = 1                       # min differences per pair
    k_max: int = 1                       # max differences per pair
    baseline: str = "RANDOM_WALK"        # kind, or CORPUS with baseline_path
    baseline_path: str | None = None     # CSV file or directory for CORPUS
    baseline_params: dict = field(default_factory=dict)  # kind-specific knobs
    ranges: RangeConfig = field(default_factory=RangeConfig)

    def validate(self) -> None:
        if self.length < 8:
            raise ConfigError(f"length must be >= 8, got {self.length}")
        if not 1 <= self.k_min <= self.k_max:
            raise ConfigError(
                f"k bounds must satisfy 1 <= k_min <= k_max, got "
                f"({self.k_min}, {self.k_max})")
        if self.baseline not in BASELINE_KINDS:
            raise ConfigError(f"unknown baseline kind {self.baseline!r}")
        if self.baseline == "CORPUS" and not self.baseline_path:
            raise ConfigError("CORPUS baseline requires a path")
        catalog(self.length, self.ranges)  # raises on infeasible ranges


def to_dict(config: GenConfig) -> dict:
    d = dataclasses.asdict(config)
    d["ranges"] = dataclasses.asdict(config.ranges)
    return d


def from_dict(data: dict) -> GenConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(GenConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    kwargs = dict(data)
    if "ranges" in kwargs:
        r = kwargs["ranges"]
        range_fields = {f.name for f in dataclasses.fields(RangeConfig)}
        bad = set(r) - range_fields
        if bad:
            raise ConfigError(f"unknown range keys {sorted(bad)}")
        kwargs["ranges"] = RangeConfig(**{
            k: tuple(v) if isinstance(v, list) else v for k, v in r.items()})
    try:
        config = GenConfig(**kwargs)
    except TypeError as e:
        raise ConfigError(str(e))
    config.validate()
    return config


def load(path: str) -> GenConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")
    return from_dict(data)


def dump(config: GenConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_dict(config), fh, indent=2)
        fh.write("\n")


def resolved(config: GenConfig) -> dict:
    """Config plus the concrete catalog it induces (ids, ranges, durations)."""
    entries = {}
    for spec in catalog(config.length, config.ranges):
        entries[spec.id] = {
            "category": spec.category,
            "params": list(spec.params),
            "base_ranges": {k: list(v) for k, v in spec.base_ranges.items()},
            "duration_bounds": list(spec.duration_bounds),
            "modifiable": list(spec.modifiable),
            "mod_rule": {k: [v[0], list(v[1])] for k, v in spec.mod_rule.items()},
        }
    return {"config": to_dict(config), "catalog": entries}


def config_hash(config: GenConfig) -> str:
    """Stable digest of the resolved config, recorded in provenance."""
    canon = json.dumps(resolved(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]
