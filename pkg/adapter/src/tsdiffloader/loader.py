"""Training-side loader for generated difference datasets.

Reads the artifacts a dataset directory ships with -- ``manifest.jsonl``
plus the machine-readable ``schema.json`` document -- and yields pairs ready
for a training stack.  The generator package is never imported: every
validation rule is taken from the schema document, which is the single
source of truth across the language/package boundary.

Validation is strict, mirroring the generator CLI's validator: canonical key
order, complete key set, uppercase enums, integer interval endpoints, and
the per-type nullability rules.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np


class AdapterError(ValueError):
    """Raised for unreadable files or malformed manifest structure."""


class ValidationError(AdapterError):
    """Raised when a record breaks a schema rule; names the sample."""


@dataclass(frozen=True)
class SchemaRules:
    """The record rules distilled from a dataset's schema document."""

    field_order: tuple[str, ...]
    enums: dict[str, frozenset[str]]
    modifiable: dict[str, frozenset[str]]

    @classmethod
    def from_document(cls, doc: dict) -> "SchemaRules":
        try:
            field_order = tuple(doc["field_order"])
            enums = {k: frozenset(v) for k, v in doc["enums"].items()}
            modifiable = {fid: frozenset(entry["modifiable"])
                          for fid, entry in doc["functions"].items()}
        except (KeyError, TypeError) as e:
            raise AdapterError(f"schema document is missing entry {e}")
        for needed in ("type", "func", "presence", "param", "magnitude"):
            if needed not in enums:
                raise AdapterError(f"schema document lacks the {needed} enum")
        return cls(field_order=field_order, enums=enums, modifiable=modifiable)

    def check_record(self, obj: object, where: str) -> None:
        """Raise ValidationError on the first rule this record breaks."""
        def bad(msg: str) -> ValidationError:
            return ValidationError(f"{where}: {msg}")

        if not isinstance(obj, dict):
            raise bad(f"expected an object, got {type(obj).__name__}")
        if list(obj.keys()) != list(self.field_order):
            raise bad(f"keys must be exactly {list(self.field_order)} "
                      f"in order, got {list(obj.keys())}")
        rtype = obj["type"]
        if rtype not in self.enums["type"]:
            raise bad(f"type must be one of {sorted(self.enums['type'])}, "
                      f"got {rtype!r}")
        func = obj["func"]
        if func not in self.enums["func"]:
            raise bad(f"unknown func {func!r}")
        for key in ("start", "end"):
            v = obj[key]
            if not isinstance(v, int) or isinstance(v, bool):
                raise bad(f"field {key} must be an integer, got {v!r}")
        if obj["start"] < 0 or obj["end"] < obj["start"]:
            raise bad(f"interval [{obj['start']}, {obj['end']}] is not "
                      "ordered within bounds")
        presence, param, magnitude = obj["presence"], obj["param"], obj["magnitude"]
        if rtype == "TYPE1":
            if presence not in self.enums["presence"]:
                raise bad(f"TYPE1 requires presence in "
                          f"{sorted(self.enums['presence'])}, got {presence!r}")
            if param is not None:
                raise bad("TYPE1 requires a null param")
            if magnitude is not None:
                raise bad("TYPE1 requires a null magnitude")
        else:
            if presence is not None:
                raise bad("TYPE2 requires a null presence")
            if param not in self.enums["param"]:
                raise bad(f"TYPE2 requires param in "
                          f"{sorted(self.enums['param'])}, got {param!r}")
            if param not in self.modifiable.get(func, frozenset()):
                raise bad(f"param {param} is not modifiable for {func}")
            if magnitude not in self.enums["magnitude"]:
                raise bad(f"TYPE2 requires magnitude in "
                          f"{sorted(self.enums['magnitude'])}, got {magnitude!r}")


@dataclass(frozen=True)
class LoadedPair:
    """One manifest entry: the two series plus validated ground truth."""

    id: str
    reference: np.ndarray
    target: np.ndarray
    ground_truth: list[dict]

    @property
    def label_text(self) -> str:
        """Canonical serialized ground truth (the training answer string)."""
        return json.dumps(self.ground_truth, separators=(",", ":"))


def load_schema(path: str) -> SchemaRules:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise AdapterError(f"cannot open schema document {path!r}: {e}")
    except json.JSONDecodeError as e:
        raise AdapterError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")
    if not isinstance(doc, dict) or doc.get("schema") != "difference-record":
        raise AdapterError(f"{path} is not a difference-record schema document")
    return SchemaRules.from_document(doc)


def _read_value_csv(path: str) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as e:
        raise AdapterError(f"cannot open series file {path!r}: {e}")
    if not rows or rows[0][0].strip() != "value":
        raise AdapterError(f"{path}: expected a 'value' header")
    try:
        return np.asarray([float(r[0]) for r in rows[1:]])
    except ValueError:
        raise AdapterError(f"{path}: non-numeric value cell")


def load_manifest(manifest_path: str,
                  schema_path: str | None = None) -> Iterator[LoadedPair]:
    """Stream a dataset manifest in file order, validating every record.

    The schema document defaults to ``schema.json`` beside the manifest.
    Raises on the first violation, naming the offending sample.
    """
    base = os.path.dirname(os.path.abspath(manifest_path))
    rules = load_schema(schema_path or os.path.join(base, "schema.json"))
    try:
        fh = open(manifest_path, encoding="utf-8")
    except OSError as e:
        raise AdapterError(f"cannot open manifest {manifest_path!r}: {e}")
    with fh:
        for ln, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise AdapterError(f"{manifest_path}:{ln}: malformed JSON "
                                   f"at column {e.colno}: {e.msg}")
            if not isinstance(obj, dict) or "id" not in obj:
                raise AdapterError(f"{manifest_path}:{ln}: line is not a "
                                   "manifest object")
            sid = obj["id"]
            records = obj.get("ground_truth")
            if not isinstance(records, list):
                raise ValidationError(f"{sid}: ground_truth must be an array")
            for i, rec in enumerate(records):
                rules.check_record(rec, where=f"{sid}: record {i}")
            if "ref" in obj and "tgt" in obj:
                ref = np.asarray(obj["ref"], dtype=float)
                tgt = np.asarray(obj["tgt"], dtype=float)
            elif "ref_file" in obj and "tgt_file" in obj:
                ref = _read_value_csv(os.path.join(base, obj["ref_file"]))
                tgt = _read_value_csv(os.path.join(base, obj["tgt_file"]))
            else:
                raise AdapterError(f"{sid}: no series data in manifest line")
            if ref.shape != tgt.shape:
                raise AdapterError(f"{sid}: reference/target length mismatch "
                                   f"({ref.size} vs {tgt.size})")
            declared = obj.get("provenance", {}).get("length")
            if declared is not None and ref.size != declared:
                raise AdapterError(f"{sid}: series length {ref.size} differs "
                                   f"from declared length {declared}")
            yield LoadedPair(id=sid, reference=ref, target=tgt,
                             ground_truth=records)


def to_training_batch(pairs: Iterable[LoadedPair], batch_size: int,
                      ) -> Iterator[tuple[np.ndarray, np.ndarray, list[str]]]:
    """Chunk pairs into dense (ref, tgt, labels) batches.

    Matrices have shape (batch, T); labels are the canonical serialized
    ground-truth strings.  A final short batch is yielded as-is.  Pairs of
    differing lengths in one batch are a data error.
    """
    if batch_size < 1:
        raise AdapterError(f"batch_size must be >= 1, got {batch_size}")
    chunk: list[LoadedPair] = []

    def emit(batch: list[LoadedPair]):
        lengths = {p.reference.size for p in batch}
        if len(lengths) != 1:
            raise AdapterError(f"ragged series lengths in batch: "
                               f"{sorted(lengths)}")
        ref = np.stack([p.reference for p in batch])
        tgt = np.stack([p.target for p in batch])
        return ref, tgt, [p.label_text for p in batch]

    for pair in pairs:
        chunk.append(pair)
        if len(chunk) == batch_size:
            yield emit(chunk)
            chunk = []
    if chunk:
        yield emit(chunk)
