"""Difference-record schema: validation, canonical serialization, parsing.

A difference record names one elementary difference between a reference and
a target series.  An explanation is a JSON array of records with keys in
exactly this order:

    type, func, start, end, presence, param, magnitude

TYPE1 records (the phenomenon exists in only one series) carry a presence
value and null param/magnitude.  TYPE2 records (same phenomenon in both
series, one parameter changed) carry param/magnitude and a null presence.
All enum values are uppercase.  Canonical serialization is byte-stable:
equal record lists always produce equal bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import funclib

TYPE1 = "TYPE1"
TYPE2 = "TYPE2"
TYPES = (TYPE1, TYPE2)

PRESENT = "PRESENT"
ABSENT = "ABSENT"
PRESENCES = (PRESENT, ABSENT)

LARGER = "LARGER"
SMALLER = "SMALLER"
MAGNITUDES = (LARGER, SMALLER)

PARAMS = (funclib.AMPLITUDE, funclib.FREQUENCY, funclib.PHASE)

FIELD_ORDER = ("type", "func", "start", "end", "presence", "param", "magnitude")

_CATALOG = funclib.catalog_index()
_MODIFIABLE = {fid: spec.modifiable for fid, spec in _CATALOG.items()}


class SchemaViolation(ValueError):
    """Raised when records or their JSON encoding break a schema rule."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class DifferenceRecord:
    type: str
    func: str
    start: int
    end: int
    presence: str | None = None
    param: str | None = None
    magnitude: str | None = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in FIELD_ORDER}


ExplanationList = list  # list[DifferenceRecord]


def validate(record: DifferenceRecord, length: int | None = None) -> list[str]:
    """Return all rule violations for one record (empty list when valid)."""
    v: list[str] = []
    if record.type not in TYPES:
        v.append(f"type must be one of {TYPES}, got {record.type!r}")
    if record.func not in _CATALOG:
        v.append(f"unknown func {record.func!r}")
    if not isinstance(record.start, int) or isinstance(record.start, bool):
        v.append(f"start must be an integer, got {record.start!r}")
    if not isinstance(record.end, int) or isinstance(record.end, bool):
        v.append(f"end must be an integer, got {record.end!r}")
    if not v:
        if record.start < 0 or record.end < record.start:
            v.append(f"interval [{record.start}, {record.end}] is not ordered "
                     "within bounds")
        elif length is not None and record.end > length - 1:
            v.append(f"interval end {record.end} exceeds window of {length} samples")
    if record.type == TYPE1:
        if record.presence not in PRESENCES:
            v.append(f"TYPE1 requires presence in {PRESENCES}, got {record.presence!r}")
        if record.param is not None:
            v.append("TYPE1 requires a null param")
        if record.magnitude is not None:
            v.append("TYPE1 requires a null magnitude")
    elif record.type == TYPE2:
        if record.presence is not None:
            v.append("TYPE2 requires a null presence")
        if record.param not in PARAMS:
            v.append(f"TYPE2 requires param in {PARAMS}, got {record.param!r}")
        elif record.func in _MODIFIABLE and record.param not in _MODIFIABLE[record.func]:
            v.append(f"param {record.param} is not modifiable for {record.func}")
        if record.magnitude not in MAGNITUDES:
            v.append(f"TYPE2 requires magnitude in {MAGNITUDES}, got {record.magnitude!r}")
    return v


def sort_records(records: list[DifferenceRecord]) -> list[DifferenceRecord]:
    """Canonical order: interval start ascending, ties by func id."""
    return sorted(records, key=lambda r: (r.start, r.func))


def serialize(records: list[DifferenceRecord]) -> str:
    """Canonical JSON text for a record list.  All records must be valid."""
    problems: list[str] = []
    for i, rec in enumerate(records):
        for msg in validate(rec):
            problems.append(f"record {i}: {msg}")
    if problems:
        raise SchemaViolation(problems)
    return json.dumps([r.as_dict() for r in records], separators=(",", ":"))


def _coerce(obj: object, index: int, lenient: bool) -> tuple[DifferenceRecord | None, list[str]]:
    if not isinstance(obj, dict):
        return None, [f"record {index}: expected an object, got {type(obj).__name__}"]
    v: list[str] = []
    unknown = [k for k in obj if k not in FIELD_ORDER]
    if unknown:
        v.append(f"record {index}: unknown keys {sorted(unknown)}")
    if not lenient:
        present_keys = [k for k in obj if k in FIELD_ORDER]
        expected = [k for k in FIELD_ORDER if k in obj]
        if present_keys != expected:
            v.append(f"record {index}: keys out of canonical order")
        missing = [k for k in FIELD_ORDER if k not in obj]
        if missing:
            v.append(f"record {index}: missing keys {missing}")
    if v:
        return None, v
    values: dict[str, object] = {k: obj.get(k) for k in FIELD_ORDER}
    for k in ("type", "func", "presence", "param", "magnitude"):
        val = values[k]
        if val is not None and not isinstance(val, str):
            v.append(f"record {index}: field {k} must be a string or null")
        elif isinstance(val, str) and val != val.upper():
            v.append(f"record {index}: field {k} must be uppercase, got {val!r}")
    for k in ("start", "end"):
        val = values[k]
        if not isinstance(val, int) or isinstance(val, bool):
            v.append(f"record {index}: field {k} must be an integer")
    if v:
        return None, v
    return DifferenceRecord(**values), []  # type: ignore[arg-type]


def parse(text: str, lenient: bool = False) -> list[DifferenceRecord]:
    """Parse an explanation.  Strict mode demands canonical key order and a
    complete key set; lenient mode tolerates reordering and missing-as-null.
    Every accepted record passes validate()."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaViolation([f"syntax error at line {e.lineno} column {e.colno}: {e.msg}"])
    if not isinstance(data, list):
        raise SchemaViolation(["top level must be a JSON array"])
    records: list[DifferenceRecord] = []
    problems: list[str] = []
    for i, obj in enumerate(data):
        rec, v = _coerce(obj, i, lenient)
        problems.extend(v)
        if rec is not None:
            for msg in validate(rec):
                problems.append(f"record {i}: {msg}")
            records.append(rec)
    if problems:
        raise SchemaViolation(problems)
    return records


def document() -> dict:
    """Machine-readable schema description: field order, enums, nullability,
    and the function catalog.  Consumers can validate records from this
    document alone."""
    return {
        "schema": "difference-record",
        "version": 1,
        "field_order": list(FIELD_ORDER),
        "field_types": {
            "type": "enum", "func": "enum", "start": "int", "end": "int",
            "presence": "enum|null", "param": "enum|null", "magnitude": "enum|null",
        },
        "enums": {
            "type": list(TYPES),
            "presence": list(PRESENCES),
            "param": list(PARAMS),
            "magnitude": list(MAGNITUDES),
            "func": list(funclib.ALL_IDS),
        },
        "rules": {
            "TYPE1": {"presence": "required", "param": "null", "magnitude": "null"},
            "TYPE2": {"presence": "null", "param": "required", "magnitude": "required"},
            "interval": "0 <= start <= end <= length-1",
            "param_modifiable": "TYPE2 param must belong to the func's modifiable set",
        },
        "functions": {
            fid: {
                "category": spec.category,
                "params": list(spec.params),
                "modifiable": list(spec.modifiable),
            }
            for fid, spec in _CATALOG.items()
        },
    }


def document_text() -> str:
    return json.dumps(document(), indent=2, sort_keys=False) + "\n"
