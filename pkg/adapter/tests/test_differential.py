"""Differential acceptance: the loader and the generator CLI must agree.

One thousand generated samples must be accepted by both validators, and one
hundred single-rule corruptions must be rejected by both.  The loader never
imports the generator package; agreement comes solely from the shared
schema document, so any drift between the two rule sets fails here.
"""

import json
import shutil

import pytest

from tsdiffloader import AdapterError, load_manifest, load_schema, to_training_batch

N_SAMPLES = 1000
N_MUTANTS = 100


@pytest.fixture(scope="module")
def big_dataset(tmp_path_factory, run_cli):
    out = tmp_path_factory.mktemp("differential-ds") / "ds"
    run_cli("generate", "--n", str(N_SAMPLES), "--seed", "77", "--kmax", "3",
            "--out", str(out))
    return out


def _first_record(entry):
    return entry["ground_truth"][0]


def _type3(entry, rules):
    _first_record(entry)["type"] = "TYPE3"


def _lowercase_type(entry, rules):
    rec = _first_record(entry)
    rec["type"] = rec["type"].lower()


def _unknown_func(entry, rules):
    _first_record(entry)["func"] = "WAVELET"


def _lowercase_func(entry, rules):
    rec = _first_record(entry)
    rec["func"] = rec["func"].lower()


def _unknown_key(entry, rules):
    _first_record(entry)["confidence"] = 0.9


def _reordered_keys(entry, rules):
    rec = _first_record(entry)
    order = ("func", "type", "start", "end", "presence", "param", "magnitude")
    entry["ground_truth"][0] = {k: rec[k] for k in order}


def _missing_func(entry, rules):
    _first_record(entry).pop("func")


def _missing_magnitude(entry, rules):
    _first_record(entry).pop("magnitude")


def _float_start(entry, rules):
    rec = _first_record(entry)
    rec["start"] = rec["start"] + 0.5


def _bool_start(entry, rules):
    _first_record(entry)["start"] = True


def _negative_start(entry, rules):
    _first_record(entry)["start"] = -3


def _end_before_start(entry, rules):
    rec = _first_record(entry)
    rec["end"] = rec["start"] - 1


def _nullability_extra_field(entry, rules):
    rec = _first_record(entry)
    if rec["type"] == "TYPE1":
        rec["param"] = "AMPLITUDE"
    else:
        rec["presence"] = "PRESENT"


def _nullability_second_field(entry, rules):
    rec = _first_record(entry)
    if rec["type"] == "TYPE1":
        rec["magnitude"] = "SMALLER"
    else:
        rec["param"] = None


def _nullability_dropped_field(entry, rules):
    rec = _first_record(entry)
    if rec["type"] == "TYPE1":
        rec["presence"] = None
    else:
        rec["magnitude"] = None


def _enum_value_invented(entry, rules):
    rec = _first_record(entry)
    if rec["type"] == "TYPE1":
        rec["presence"] = "MAYBE"
    else:
        rec["magnitude"] = "HUGE"


def _type_flipped_without_fields(entry, rules):
    rec = _first_record(entry)
    rec["type"] = "TYPE2" if rec["type"] == "TYPE1" else "TYPE1"


def _param_outside_enum(entry, rules):
    rec = _first_record(entry)
    rec.update(type="TYPE2", presence=None, param="DURATION",
               magnitude="LARGER")


def _param_not_modifiable(entry, rules):
    rec = _first_record(entry)
    blocked = next(p for p in ("FREQUENCY", "PHASE")
                   if p not in rules.modifiable[rec["func"]])
    rec.update(type="TYPE2", presence=None, param=blocked, magnitude="LARGER")


def _record_not_an_object(entry, rules):
    entry["ground_truth"][0] = "not-a-record"


def _ground_truth_not_an_array(entry, rules):
    entry["ground_truth"] = {"oops": 1}


MUTATIONS = [
    ("type3", _type3),
    ("lowercase-type", _lowercase_type),
    ("unknown-func", _unknown_func),
    ("lowercase-func", _lowercase_func),
    ("unknown-key", _unknown_key),
    ("reordered-keys", _reordered_keys),
    ("missing-func", _missing_func),
    ("missing-magnitude", _missing_magnitude),
    ("float-start", _float_start),
    ("bool-start", _bool_start),
    ("negative-start", _negative_start),
    ("end-before-start", _end_before_start),
    ("nullability-extra-field", _nullability_extra_field),
    ("nullability-second-field", _nullability_second_field),
    ("nullability-dropped-field", _nullability_dropped_field),
    ("enum-value-invented", _enum_value_invented),
    ("type-flipped-without-fields", _type_flipped_without_fields),
    ("param-outside-enum", _param_outside_enum),
    ("param-not-modifiable", _param_not_modifiable),
    ("record-not-an-object", _record_not_an_object),
    ("ground-truth-not-an-array", _ground_truth_not_an_array),
]


def _adapter_accepts(manifest_path) -> bool:
    try:
        list(load_manifest(manifest_path))
        return True
    except AdapterError:
        return False


def _primary_accepts(run_cli, manifest_path) -> bool:
    proc = run_cli("validate", "--in", str(manifest_path), expect=None)
    assert proc.returncode in (0, 1), proc.stderr
    return proc.returncode == 0


def test_differential_validation(big_dataset, tmp_path, run_cli,
                                 manifest_entries):
    manifest = big_dataset / "manifest.jsonl"

    # Both sides accept the full generated dataset.
    pairs = list(load_manifest(manifest))
    assert [p.id for p in pairs] == [f"sample-{i:05d}" for i in range(N_SAMPLES)]
    assert _primary_accepts(run_cli, manifest)

    # Batching over the full corpus keeps dense, ordered shapes.
    batches = list(to_training_batch(iter(pairs), batch_size=64))
    assert len(batches) == 16
    for ref, tgt, labels in batches[:-1]:
        assert ref.shape == tgt.shape == (64, 300)
        assert len(labels) == 64
    assert batches[-1][0].shape == (N_SAMPLES - 15 * 64, 300)
    assert sum(len(labels) for _, _, labels in batches) == N_SAMPLES

    # One hundred single-rule corruptions: both validators must reject
    # every one, so per-file decisions stay identical in both directions.
    rules = load_schema(str(big_dataset / "schema.json"))
    mutant_dir = tmp_path / "mutants"
    mutant_dir.mkdir()
    shutil.copy(big_dataset / "schema.json", mutant_dir / "schema.json")
    entries = manifest_entries(big_dataset)

    disagreements = []
    accepted = []
    for i in range(N_MUTANTS):
        name, mutate = MUTATIONS[i % len(MUTATIONS)]
        entry = json.loads(json.dumps(entries[i]))

        clean_path = mutant_dir / f"clean_{i:03d}.jsonl"
        clean_path.write_text(json.dumps(entries[i]) + "\n", encoding="utf-8")
        assert _adapter_accepts(clean_path), f"clean sample {i} should load"
        assert _primary_accepts(run_cli, clean_path)

        mutate(entry, rules)
        path = mutant_dir / f"mutant_{i:03d}_{name}.jsonl"
        path.write_text(json.dumps(entry) + "\n", encoding="utf-8")
        adapter_ok = _adapter_accepts(path)
        primary_ok = _primary_accepts(run_cli, path)
        if adapter_ok != primary_ok:
            disagreements.append((i, name, adapter_ok, primary_ok))
        if adapter_ok or primary_ok:
            accepted.append((i, name))

    assert not disagreements, f"validators disagree on: {disagreements}"
    assert not accepted, f"mutants slipped through: {accepted}"
    print(f"ACCEPTANCE differential-validation: PASS "
          f"({N_SAMPLES}/{N_SAMPLES} accepted by both, "
          f"{N_MUTANTS}/{N_MUTANTS} rejected by both)")
