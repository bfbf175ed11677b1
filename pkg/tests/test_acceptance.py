"""Acceptance suite: one test (and one printed PASS/FAIL line) per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see the criterion lines.
Tolerances are pinned here and must not be loosened to make a run pass.
"""

import contextlib
import json
import math
import time

import numpy as np
import pytest

from tsdiffbench import (config as config_mod, evaluator, explain, funclib,
                         pairgen, schema)
from tsdiffbench.config import GenConfig
from tsdiffbench.funclib import AMPLITUDE, Interval
from tsdiffbench.schema import DifferenceRecord


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException as e:
        print(f"ACCEPTANCE {name}: FAIL ({e})")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def _reconstruction_error(sample, length):
    delta = sample.tgt - sample.ref
    total = np.zeros(length)
    for d in sample.differences:
        total += pairgen.render_side(d, "tgt", length)
        total -= pairgen.render_side(d, "ref", length)
    return float(np.abs(delta - total).max())


def test_criterion_1_delta_reconstruction():
    """Target-minus-reference equals the signed component sum, everywhere."""
    with criterion("delta-reconstruction"):
        t0 = time.monotonic()
        worst = 0.0
        baselines = ("RANDOM_WALK", "AR1", "SINE_MIX", "PIECEWISE_CONST")
        for k_max in (1, 2, 3, 4):
            cfg = GenConfig(k_max=k_max, baseline=baselines[k_max - 1])
            for sample in pairgen.generate_dataset(cfg, seed=1000 + k_max,
                                                   count=250, workers=4):
                worst = max(worst, _reconstruction_error(sample, cfg.length))
        elapsed = time.monotonic() - t0
        assert worst < 1e-9, f"max reconstruction error {worst}"
        assert elapsed < 30.0, f"took {elapsed:.1f}s"
        print(f"  max_err={worst:.3e} over 1000 pairs in {elapsed:.1f}s")


def test_criterion_2_oracle_fixed_point():
    """Oracle explanations score exactly 100.0 match, 0.0 OPR, 0.0 UPR."""
    with criterion("oracle-fixed-point"):
        for k_max in (1, 4):
            cfg = GenConfig(k_max=k_max)
            gt, pred = {}, {}
            for sample in pairgen.generate_dataset(cfg, seed=2000 + k_max,
                                                   count=1000, workers=4):
                gt[sample.id] = sample.ground_truth
                pred[sample.id] = explain.explain_oracle(sample)
            report = evaluator.evaluate_dataset(pred, gt)
            assert report.match_acc == 100.0, (k_max, report.match_acc)
            assert report.opr == 0.0 and report.upr == 0.0
            assert report.mean_iou == pytest.approx(100.0, abs=1e-9)
            for f, v in report.field_acc.items():
                assert v in (100.0, None), (k_max, f, v)


def test_criterion_3_interval_overlap_fixtures():
    """Pinned interval-overlap ratios on worked record pairs."""
    with criterion("interval-overlap-fixtures"):
        gt = {
            "w1": [DifferenceRecord("TYPE2", "TRIANGLE_WAVE", 36, 237, None,
                                    "FREQUENCY", "LARGER")],
            "w2": [DifferenceRecord("TYPE1", "QUADRATIC_INCREASE", 35, 240,
                                    "PRESENT", None, None)],
            "w3": [DifferenceRecord("TYPE1", "DROP", 268, 268,
                                    "PRESENT", None, None)],
        }
        pred = {
            "w1": [DifferenceRecord("TYPE2", "TRIANGLE_WAVE", 47, 237, None,
                                    "FREQUENCY", "LARGER")],
            "w2": [DifferenceRecord("TYPE1", "QUADRATIC_INCREASE", 40, 240,
                                    "PRESENT", None, None)],
            "w3": [DifferenceRecord("TYPE1", "DROP", 268, 268,
                                    "PRESENT", None, None)],
        }
        assert evaluator.interval_iou((36, 237), (47, 237)) == pytest.approx(
            190 / 201, abs=1e-9)
        assert evaluator.interval_iou((35, 240), (40, 240)) == pytest.approx(
            200 / 205, abs=1e-9)
        assert evaluator.interval_iou((268, 268), (268, 268)) == pytest.approx(
            1.0, abs=1e-9)
        report = evaluator.evaluate_dataset(pred, gt)
        expected_mean = 100.0 * (190 / 201 + 200 / 205 + 1.0) / 3.0
        assert report.mean_iou == pytest.approx(expected_mean, abs=1e-7)
        assert report.match_acc == 100.0  # all three clear the 0.8 gate


def test_criterion_4_rate_fixtures():
    """Pinned unmatched-rate and field-accuracy fixture values."""
    with criterion("rate-fixtures"):
        gt, pred = {}, {}
        for i in range(8):
            rec = DifferenceRecord("TYPE1", "GAUSSIAN", 50, 149,
                                   "PRESENT", None, None)
            gt[f"s{i}"], pred[f"s{i}"] = [rec], [rec]
        gt["s8"] = [DifferenceRecord("TYPE1", "SPIKE", 10, 10, "PRESENT", None, None),
                    DifferenceRecord("TYPE1", "GAUSSIAN", 100, 199, "ABSENT", None, None)]
        pred["s8"] = [DifferenceRecord("TYPE1", "GAUSSIAN", 100, 199, "ABSENT", None, None)]
        gt["s9"] = [DifferenceRecord("TYPE1", "SINUSOIDAL", 30, 129, "PRESENT", None, None),
                    DifferenceRecord("TYPE1", "DROP", 250, 250, "PRESENT", None, None)]
        pred["s9"] = [DifferenceRecord("TYPE1", "SINUSOIDAL", 30, 129, "PRESENT", None, None),
                      DifferenceRecord("TYPE1", "QUADRATIC_INCREASE", 250, 259,
                                       "PRESENT", None, None)]
        report = evaluator.evaluate_dataset(pred, gt)
        assert report.opr == pytest.approx(8.33, abs=0.01)
        assert report.upr == pytest.approx(16.67, abs=0.01)

        gt2 = {
            "a": [DifferenceRecord("TYPE1", "LINEAR_INCREASE", 0, 99, "PRESENT", None, None),
                  DifferenceRecord("TYPE1", "GAUSSIAN", 150, 249, "PRESENT", None, None)],
            "b": [DifferenceRecord("TYPE1", "SIGMOID", 20, 119, "PRESENT", None, None)],
            "c": [DifferenceRecord("TYPE1", "CUBIC_INCREASE", 10, 109, "PRESENT", None, None)],
        }
        pred2 = {k: [r for r in v] for k, v in gt2.items()}
        pred2["b"] = [DifferenceRecord("TYPE1", "QUADRATIC_INCREASE", 20, 119,
                                       "PRESENT", None, None)]
        report2 = evaluator.evaluate_dataset(pred2, gt2)
        assert report2.field_acc["func"] == 75.0  # exact
        print(f"  opr={report.opr:.4f} upr={report.upr:.4f} "
              f"func={report2.field_acc['func']}")


def _random_valid_record(rng) -> DifferenceRecord:
    fid = funclib.ALL_IDS[int(rng.integers(0, len(funclib.ALL_IDS)))]
    start = int(rng.integers(0, 900))
    end = start + int(rng.integers(0, 100))
    if int(rng.integers(0, 2)) == 0:
        presence = "PRESENT" if int(rng.integers(0, 2)) else "ABSENT"
        return DifferenceRecord("TYPE1", fid, start, end, presence, None, None)
    modifiable = funclib.catalog_index()[fid].modifiable
    param = modifiable[int(rng.integers(0, len(modifiable)))]
    magnitude = "LARGER" if int(rng.integers(0, 2)) else "SMALLER"
    return DifferenceRecord("TYPE2", fid, start, end, None, param, magnitude)


def test_criterion_5_schema_round_trip():
    """10,000 random valid records survive serialize -> parse bit-exactly;
    every nullability mutation and unknown key is rejected."""
    with criterion("schema-round-trip"):
        rng = np.random.default_rng(52)
        records = [_random_valid_record(rng) for _ in range(10_000)]
        text = schema.serialize(records)
        back = schema.parse(text)
        assert back == records
        assert schema.serialize(back) == text  # byte-exact re-encode

        t1 = DifferenceRecord("TYPE1", "SPIKE", 5, 5, "PRESENT", None, None)
        t2 = DifferenceRecord("TYPE2", "SINUSOIDAL", 0, 99, None,
                              "FREQUENCY", "LARGER")
        mutations = [
            dict(t1.as_dict(), param="AMPLITUDE"),
            dict(t1.as_dict(), magnitude="LARGER"),
            dict(t1.as_dict(), presence=None),
            dict(t2.as_dict(), presence="PRESENT"),
            dict(t2.as_dict(), param=None),
            dict(t2.as_dict(), magnitude=None),
        ]
        for mut in mutations:
            with pytest.raises(schema.SchemaViolation):
                schema.parse(json.dumps([mut]))
        with pytest.raises(schema.SchemaViolation, match="unknown keys"):
            schema.parse(json.dumps([dict(t1.as_dict(), note="hi")]))
        print(f"  {len(records)} records, {len(text)} bytes, "
              f"{len(mutations)} mutations rejected")


def test_criterion_6_generation_determinism(tmp_path):
    """Same seed -> byte-identical manifests; workers do not change bytes."""
    with criterion("generation-determinism"):
        cfg = GenConfig(k_max=4, baseline="AR1")
        paths = []
        for name, workers in (("r1", 1), ("r2", 1), ("r4", 4)):
            out = str(tmp_path / name)
            pairgen.write_dataset(cfg, seed=2026, count=200, out_dir=out,
                                  workers=workers)
            with open(f"{out}/manifest.jsonl", "rb") as fh:
                paths.append(fh.read())
        assert paths[0] == paths[1], "rerun changed manifest bytes"
        assert paths[0] == paths[2], "worker count changed manifest bytes"
        print(f"  {len(paths[0])} bytes stable across reruns and 4 workers")


def _binomial_critical(n: int, p: float, alpha: float) -> int:
    """Smallest k with P(Binomial(n, p) >= k) < alpha (exact tail sum)."""
    term = (1.0 - p) ** n
    cdf = term
    k = 0
    while k < n and 1.0 - cdf >= alpha:
        term *= (n - k) / (k + 1) * p / (1.0 - p)
        cdf += term
        k += 1
    return k + 1


def test_criterion_7_baseline_quality_gates():
    """Clean-pair function accuracy, noise-family split, retrieval vs chance;
    all three inside one five-minute budget."""
    with criterion("baseline-quality-gates"):
        t0 = time.monotonic()

        func_acc = explain.benchmark_func_accuracy(n_trials=300, seed=7)
        assert func_acc >= 0.90, f"function accuracy {func_acc:.3f} < 0.90"

        cat = funclib.catalog_index(2100)
        specs = funclib.catalog(2100)
        hits = 0
        n_noise = 200
        for trial in range(n_noise):
            fid = "GAUSSIAN_NOISE" if trial % 2 == 0 else "LAPLACE_NOISE"
            tgt = funclib.evaluate(cat[fid], {AMPLITUDE: 1.0},
                                   Interval(50, 2049), 2100,
                                   noise_seed=3000 + trial)
            ev = explain.fit_component(np.zeros(2100), tgt,
                                       Interval(50, 2049), specs)
            if ev.tgt.best is not None and ev.tgt.best.func == fid:
                hits += 1
        noise_acc = hits / n_noise
        assert noise_acc >= 0.95, f"noise split accuracy {noise_acc:.3f} < 0.95"

        cfg = GenConfig()
        pool = explain.build_pool(cfg, seed=4242, count=50_000, workers=4)
        correct = 0
        n_queries = 500
        for sample in pairgen.generate_dataset(cfg, seed=777, count=n_queries,
                                               workers=4):
            result = explain.explain_retrieval(sample.ref, sample.tgt, pool)
            if result and result[0].func == sample.ground_truth[0].func:
                correct += 1
        k_crit = _binomial_critical(n_queries, 1.0 / 28.0, 0.01)
        assert correct >= k_crit, (
            f"retrieval matched {correct}/{n_queries}; needs >= {k_crit} to "
            f"beat 1/28 chance at 99% confidence")

        elapsed = time.monotonic() - t0
        assert elapsed < 300.0, f"gates took {elapsed:.1f}s"
        print(f"  func={func_acc:.3f} noise={noise_acc:.3f} "
              f"retrieval={correct}/{n_queries} (critical {k_crit}) "
              f"in {elapsed:.1f}s")


def test_criterion_8_sampling_protocol_frequencies():
    """Category, type, and magnitude-direction draws match the protocol."""
    with criterion("sampling-protocol-frequencies"):
        cfg = GenConfig()
        specs = funclib.catalog(cfg.length, cfg.ranges)
        rng = np.random.default_rng(31415)
        n = 10_000
        cat_counts = {c: 0 for c in funclib.CATEGORIES}
        type1 = 0
        larger = 0
        type2 = 0
        for _ in range(n):
            d = pairgen.sample_difference(cfg, specs, rng)
            cat_counts[d.spec.category] += 1
            if d.kind == schema.TYPE1:
                type1 += 1
            else:
                type2 += 1
                if pairgen.to_record(d).magnitude == schema.LARGER:
                    larger += 1
        for c, count in cat_counts.items():
            assert abs(count / n - 0.25) <= 0.02, (c, count / n)
        assert abs(type1 / n - 0.5) <= 0.02, type1 / n
        assert abs(larger / type2 - 0.5) <= 0.03, larger / type2
        print(f"  categories={[round(cat_counts[c] / n, 3) for c in funclib.CATEGORIES]} "
              f"type1={type1 / n:.3f} larger|type2={larger / type2:.3f}")
