"""Pair generation: baselines, elementary differences, datasets.

A sample is a (reference, target) pair built from one shared baseline plus
K elementary differences.  Each difference is either TYPE1 (its component is
injected into exactly one side) or TYPE2 (injected into both sides with one
parameter magnitude increased on one side).  The target-minus-reference
delta therefore reconstructs exactly as the signed sum of the per-side
component renderings.

Determinism: sample i of a run seeded with S draws everything from the
substream split(S, i), so reruns are byte-identical and workers can build
samples in any order without changing the output.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import config as config_mod
from . import funclib, schema
from .config import GenConfig
from .funclib import CATEGORIES, ConfigError, FunctionSpec, Interval


class DataError(ValueError):
    """Raised for unreadable or malformed input data."""


EPSILON_STD = 1e-8  # z-normalization floor


def preprocess_baseline(raw: np.ndarray, length: int) -> np.ndarray:
    """Fit a raw series to the window: linear-interp upsample if shorter,
    truncate to the first `length` samples if longer, then z-normalize."""
    x = np.asarray(raw, dtype=float).ravel()
    if x.size == 0:
        raise DataError("empty baseline series")
    if not np.all(np.isfinite(x)):
        raise DataError("baseline contains non-finite values")
    if x.size < length:
        grid = np.linspace(0.0, x.size - 1.0, length)
        x = np.interp(grid, np.arange(x.size), x)
    elif x.size > length:
        x = x[:length].copy()
    std = float(x.std())
    return (x - x.mean()) / max(std, EPSILON_STD)


def synth_baseline(kind: str, length: int, rng: np.random.Generator,
                   **params: float) -> np.ndarray:
    """Raw synthetic baseline of one of four kinds (pre-normalization).

    RANDOM_WALK(step_std=1): cumulative sum of gaussian steps.
    AR1(coef=0.8, noise_std=1): x[t] = coef*x[t-1] + noise.
    SINE_MIX(components=3): sum of sines with uniform amp/freq/phase.
    PIECEWISE_CONST(segments=5): gaussian levels over random change points.
    """
    if kind == "RANDOM_WALK":
        step_std = float(params.pop("step_std", 1.0))
        out = np.cumsum(rng.normal(0.0, step_std, length))
    elif kind == "AR1":
        coef = float(params.pop("coef", 0.8))
        noise_std = float(params.pop("noise_std", 1.0))
        eps = rng.normal(0.0, noise_std, length)
        out = np.empty(length)
        acc = 0.0
        for t in range(length):
            acc = coef * acc + eps[t]
            out[t] = acc
    elif kind == "SINE_MIX":
        n_comp = int(params.pop("components", 3))
        t = np.arange(length) / length
        out = np.zeros(length)
        for _ in range(max(1, n_comp)):
            amp = rng.uniform(0.5, 2.0)
            freq = rng.uniform(1.0, 8.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            out += amp * np.sin(2.0 * np.pi * freq * t + phase)
    elif kind == "PIECEWISE_CONST":
        n_seg = int(params.pop("segments", 5))
        n_seg = max(1, min(n_seg, length))
        cuts = np.sort(rng.choice(np.arange(1, length), size=n_seg - 1,
                                  replace=False)) if n_seg > 1 else np.array([], dtype=int)
        levels = rng.normal(0.0, 1.0, n_seg)
        out = np.repeat(levels, np.diff(np.concatenate(([0], cuts, [length]))))
    else:
        raise ConfigError(f"unknown baseline kind {kind!r}")
    if params:
        raise ConfigError(f"unknown {kind} parameters {sorted(params)}")
    return out


class CorpusReader:
    """Baselines from user CSV files: a single file, or a directory of files.

    Each file holds one series in a single column (header optional).  Every
    sample draw picks one file uniformly at random.
    """

    def __init__(self, path: str):
        if os.path.isdir(path):
            names = sorted(n for n in os.listdir(path) if n.endswith(".csv"))
            self.files = [os.path.join(path, n) for n in names]
        elif os.path.isfile(path):
            self.files = [path]
        else:
            raise DataError(f"corpus path {path!r} does not exist")
        if not self.files:
            raise DataError(f"corpus directory {path!r} holds no .csv files")
        self._cache: dict[str, np.ndarray] = {}

    def _read(self, path: str) -> np.ndarray:
        if path not in self._cache:
            values: list[float] = []
            with open(path, newline="", encoding="utf-8") as fh:
                for row in csv.reader(fh):
                    if not row:
                        continue
                    cell = row[0].strip()
                    try:
                        values.append(float(cell))
                    except ValueError:
                        if values:
                            raise DataError(f"{path}: non-numeric cell {cell!r}")
                        continue  # header line
            if not values:
                raise DataError(f"{path}: no numeric values")
            self._cache[path] = np.asarray(values)
        return self._cache[path]

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return self._read(self.files[int(rng.integers(0, len(self.files)))])


@dataclass(frozen=True)
class ElementaryDifference:
    """One injected difference, with enough detail to re-render both sides."""

    kind: str                      # TYPE1 | TYPE2
    spec: FunctionSpec
    interval: Interval
    theta_ref: dict[str, float]
    theta_tgt: dict[str, float]
    active_ref: bool
    active_tgt: bool
    diff_param: str | None         # TYPE2 only
    noise_seed: int                # shared FLUCTUATION realization

    def __post_init__(self) -> None:
        if self.kind == schema.TYPE1 and (self.active_ref == self.active_tgt):
            raise ConfigError("TYPE1 must be active on exactly one side")
        if self.kind == schema.TYPE2 and not (self.active_ref and self.active_tgt):
            raise ConfigError("TYPE2 must be active on both sides")


@dataclass
class PairSample:
    id: str
    ref: np.ndarray
    tgt: np.ndarray
    ground_truth: list[schema.DifferenceRecord]
    differences: list[ElementaryDifference] = field(repr=False)
    provenance: dict = field(default_factory=dict)


def sample_difference(cfg: GenConfig, specs: list[FunctionSpec],
                      rng: np.random.Generator) -> ElementaryDifference:
    """Draw one elementary difference per the sampling protocol: uniform
    category, uniform function within it, uniform type, uniform side/param."""
    by_cat: dict[str, list[FunctionSpec]] = {c: [] for c in CATEGORIES}
    for s in specs:
        by_cat[s.category].append(s)
    cat = CATEGORIES[int(rng.integers(0, len(CATEGORIES)))]
    pool = by_cat[cat]
    spec = pool[int(rng.integers(0, len(pool)))]
    theta = funclib.sample_base_params(spec, rng)
    interval = funclib.sample_interval(spec, cfg.length, rng)
    noise_seed = int(rng.integers(0, 2 ** 31 - 1))
    if int(rng.integers(0, 2)) == 0:
        tgt_active = int(rng.integers(0, 2)) == 1
        return ElementaryDifference(
            kind=schema.TYPE1, spec=spec, interval=interval,
            theta_ref=dict(theta), theta_tgt=dict(theta),
            active_ref=not tgt_active, active_tgt=tgt_active,
            diff_param=None, noise_seed=noise_seed)
    param = spec.modifiable[int(rng.integers(0, len(spec.modifiable)))]
    modified = funclib.modify_param(spec, theta, param, rng)
    if int(rng.integers(0, 2)) == 1:
        theta_ref, theta_tgt = dict(theta), modified
    else:
        theta_ref, theta_tgt = modified, dict(theta)
    return ElementaryDifference(
        kind=schema.TYPE2, spec=spec, interval=interval,
        theta_ref=theta_ref, theta_tgt=theta_tgt,
        active_ref=True, active_tgt=True,
        diff_param=param, noise_seed=noise_seed)


def to_record(diff: ElementaryDifference) -> schema.DifferenceRecord:
    """Ground-truth record for one difference."""
    if diff.kind == schema.TYPE1:
        presence = schema.PRESENT if diff.active_tgt else schema.ABSENT
        return schema.DifferenceRecord(
            type=schema.TYPE1, func=diff.spec.id,
            start=diff.interval.start, end=diff.interval.end,
            presence=presence, param=None, magnitude=None)
    p = diff.diff_param
    larger = abs(diff.theta_tgt[p]) > abs(diff.theta_ref[p])
    return schema.DifferenceRecord(
        type=schema.TYPE2, func=diff.spec.id,
        start=diff.interval.start, end=diff.interval.end,
        presence=None, param=p,
        magnitude=schema.LARGER if larger else schema.SMALLER)


def render_side(diff: ElementaryDifference, side: str, length: int) -> np.ndarray:
    """The component this difference contributes to one side (may be zero)."""
    active = diff.active_tgt if side == "tgt" else diff.active_ref
    if not active:
        return np.zeros(length)
    theta = diff.theta_tgt if side == "tgt" else diff.theta_ref
    return funclib.evaluate(diff.spec, theta, diff.interval, length,
                            noise_seed=diff.noise_seed)


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based substream: independent of how many samples precede it."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(index,)))


def _draw_baseline(cfg: GenConfig, rng: np.random.Generator,
                   corpus: CorpusReader | None) -> np.ndarray:
    if cfg.baseline == "CORPUS":
        raw = corpus.draw(rng)
    else:
        raw = synth_baseline(cfg.baseline, cfg.length, rng, **cfg.baseline_params)
    return preprocess_baseline(raw, cfg.length)


def generate_pair(cfg: GenConfig, seed: int, index: int,
                  corpus: CorpusReader | None = None,
                  sample_id: str | None = None) -> PairSample:
    """Build sample `index` of the run seeded with `seed`."""
    cfg.validate()
    rng = _sample_rng(seed, index)
    baseline = _draw_baseline(cfg, rng, corpus)
    specs = funclib.catalog(cfg.length, cfg.ranges)
    k = int(rng.integers(cfg.k_min, cfg.k_max + 1))
    diffs = [sample_difference(cfg, specs, rng) for _ in range(k)]
    ref = baseline.copy()
    tgt = baseline.copy()
    for d in diffs:
        ref += render_side(d, "ref", cfg.length)
        tgt += render_side(d, "tgt", cfg.length)
    records = schema.sort_records([to_record(d) for d in diffs])
    return PairSample(
        id=sample_id or f"sample-{index:05d}",
        ref=ref, tgt=tgt, ground_truth=records, differences=diffs,
        provenance={
            "seed": seed,
            "index": index,
            "length": cfg.length,
            "baseline_source": cfg.baseline if cfg.baseline != "CORPUS"
            else f"CORPUS:{cfg.baseline_path}",
            "config_hash": config_mod.config_hash(cfg),
        })


def generate_dataset(cfg: GenConfig, seed: int, count: int,
                     workers: int = 1):
    """Yield `count` samples in index order (workers only change wall time)."""
    cfg.validate()
    corpus = CorpusReader(cfg.baseline_path) if cfg.baseline == "CORPUS" else None
    if workers <= 1:
        for i in range(count):
            yield generate_pair(cfg, seed, i, corpus)
        return
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(generate_pair, cfg, seed, i, corpus)
                   for i in range(count)]
        for fut in futures:
            yield fut.result()


def _series_json(x: np.ndarray) -> list[float]:
    return [float(v) for v in x]


def manifest_line(sample: PairSample, csv_sidecar: bool = False,
                  series_dir: str | None = None) -> dict:
    if csv_sidecar:
        return {
            "id": sample.id,
            "ref_file": f"{series_dir}/{sample.id}.ref.csv",
            "tgt_file": f"{series_dir}/{sample.id}.tgt.csv",
            "ground_truth": [r.as_dict() for r in sample.ground_truth],
            "provenance": sample.provenance,
        }
    return {
        "id": sample.id,
        "ref": _series_json(sample.ref),
        "tgt": _series_json(sample.tgt),
        "ground_truth": [r.as_dict() for r in sample.ground_truth],
        "provenance": sample.provenance,
    }


def atomic_write(path: str, data: str | bytes) -> None:
    """Write via a temp file + rename so readers never see partial output."""
    mode = "wb" if isinstance(data, bytes) else "w"
    tmp = path + ".tmp"
    with open(tmp, mode, encoding=None if isinstance(data, bytes) else "utf-8") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _write_series_csv(path: str, x: np.ndarray) -> None:
    lines = ["value"] + [repr(float(v)) for v in x]
    atomic_write(path, "\n".join(lines) + "\n")


def write_dataset(cfg: GenConfig, seed: int, count: int, out_dir: str,
                  csv_sidecar: bool = False, workers: int = 1,
                  overlay_csv: bool = False) -> dict:
    """Write manifest.jsonl (+ optional sidecars) into out_dir.

    Returns summary facts for the run manifest.  Output bytes depend only on
    (cfg, seed, count, flags).
    """
    t0 = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)
    series_dir = "series"
    if csv_sidecar:
        os.makedirs(os.path.join(out_dir, series_dir), exist_ok=True)
    overlay_dir = "overlay"
    if overlay_csv:
        os.makedirs(os.path.join(out_dir, overlay_dir), exist_ok=True)
    lines: list[str] = []
    n_records = 0
    for sample in generate_dataset(cfg, seed, count, workers=workers):
        if csv_sidecar:
            _write_series_csv(os.path.join(out_dir, series_dir, f"{sample.id}.ref.csv"),
                              sample.ref)
            _write_series_csv(os.path.join(out_dir, series_dir, f"{sample.id}.tgt.csv"),
                              sample.tgt)
        if overlay_csv:
            rows = ["ref,tgt"] + [f"{repr(float(a))},{repr(float(b))}"
                                  for a, b in zip(sample.ref, sample.tgt)]
            atomic_write(os.path.join(out_dir, overlay_dir, f"{sample.id}.csv"),
                         "\n".join(rows) + "\n")
        lines.append(json.dumps(manifest_line(sample, csv_sidecar, series_dir),
                                separators=(",", ":")))
        n_records += len(sample.ground_truth)
    atomic_write(os.path.join(out_dir, "manifest.jsonl"), "\n".join(lines) + "\n")
    atomic_write(os.path.join(out_dir, "schema.json"), schema.document_text())
    atomic_write(os.path.join(out_dir, "config_resolved.json"),
                 json.dumps(config_mod.resolved(cfg), indent=2) + "\n")
    return {
        "samples": count,
        "ground_truth_records": n_records,
        "manifest": os.path.join(out_dir, "manifest.jsonl"),
        "duration_s": round(time.monotonic() - t0, 3),
    }


def read_manifest(path: str) -> list[PairSample]:
    """Load a dataset manifest back into memory (inline or sidecar series)."""
    samples: list[PairSample] = []
    base = os.path.dirname(os.path.abspath(path))
    try:
        fh = open(path, encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot open manifest {path!r}: {e}")
    with fh:
        for ln, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{ln}: invalid JSON at column {e.colno}: {e.msg}")
            try:
                sid = obj["id"]
                gt = obj["ground_truth"]
            except (KeyError, TypeError):
                raise DataError(f"{path}:{ln}: line is not a manifest object")
            records = schema.parse(json.dumps(gt), lenient=False)
            if "ref" in obj:
                ref = np.asarray(obj["ref"], dtype=float)
                tgt = np.asarray(obj["tgt"], dtype=float)
            else:
                ref = _read_value_csv(os.path.join(base, obj["ref_file"]))
                tgt = _read_value_csv(os.path.join(base, obj["tgt_file"]))
            if ref.shape != tgt.shape:
                raise DataError(f"{path}:{ln}: ref/tgt length mismatch")
            samples.append(PairSample(id=sid, ref=ref, tgt=tgt,
                                      ground_truth=records, differences=[],
                                      provenance=obj.get("provenance", {})))
    if not samples:
        raise DataError(f"{path}: empty manifest")
    return samples


def _read_value_csv(path: str) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as e:
        raise DataError(f"cannot open series file {path!r}: {e}")
    if not rows or rows[0][0].strip() != "value":
        raise DataError(f"{path}: expected a 'value' header")
    try:
        return np.asarray([float(r[0]) for r in rows[1:]])
    except ValueError:
        raise DataError(f"{path}: non-numeric value cell")
