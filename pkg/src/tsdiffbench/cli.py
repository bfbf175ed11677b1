"""Command-line interface.

Subcommands:
    generate    synthesize a labeled dataset (manifest + per-sample files)
    explain     run one of the baseline explainers over a dataset
    evaluate    score predictions against ground truth, render the report
    validate    check explanation/manifest files against the record schema
    build-pool  embed a generated dataset into a retrieval pool file

Exit codes: 0 success, 1 runtime/data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__, config as config_mod, evaluator, explain, pairgen, schema
from .config import GenConfig
from .funclib import ConfigError


class UsageError(Exception):
    pass


def _run_manifest(command: str, seed: int | None, cfg_hash: str | None,
                  inputs: list[str], outputs: list[str], t0: float) -> dict:
    return {
        "command": command,
        "tool_version": __version__,
        "seed": seed,
        "config_hash": cfg_hash,
        "inputs": inputs,
        "outputs": outputs,
        "duration_s": round(time.monotonic() - t0, 3),
    }


def _write_run_manifest(path: str, manifest: dict) -> None:
    pairgen.atomic_write(path, json.dumps(manifest, indent=2) + "\n")


def _load_config(args) -> GenConfig:
    cfg = config_mod.load(args.config) if args.config else GenConfig()
    overrides = {}
    if getattr(args, "length", None) is not None:
        overrides["length"] = args.length
    if getattr(args, "kmin", None) is not None:
        overrides["k_min"] = args.kmin
    if getattr(args, "kmax", None) is not None:
        overrides["k_max"] = args.kmax
    if (overrides.get("k_min") is not None or overrides.get("k_max") is not None):
        k_min = overrides.get("k_min", cfg.k_min)
        k_max = overrides.get("k_max", cfg.k_max)
        if not 1 <= k_min <= k_max:
            raise UsageError(f"--kmax must be >= --kmin >= 1, got "
                             f"kmin={k_min} kmax={k_max}")
    source = getattr(args, "source", None)
    if source is not None:
        if source.upper().startswith("CORPUS:"):
            overrides["baseline"] = "CORPUS"
            overrides["baseline_path"] = source.split(":", 1)[1]
        else:
            overrides["baseline"] = source.upper()
    if overrides:
        cfg = config_mod.from_dict({**config_mod.to_dict(cfg), **overrides})
    try:
        cfg.validate()
    except ConfigError as e:
        raise UsageError(str(e))
    return cfg


def cmd_generate(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    summary = pairgen.write_dataset(cfg, args.seed, args.n, args.out,
                                    csv_sidecar=args.csv, workers=args.workers,
                                    overlay_csv=args.plot)
    outputs = [summary["manifest"], os.path.join(args.out, "schema.json"),
               os.path.join(args.out, "config_resolved.json")]
    if args.plot:
        from . import plots
        plot_dir = os.path.join(args.out, "plots")
        os.makedirs(plot_dir, exist_ok=True)
        shown = 0
        for sample in pairgen.generate_dataset(cfg, args.seed, args.n):
            if shown >= args.plot_limit:
                break
            path = os.path.join(plot_dir, f"{sample.id}.png")
            plots.save_pair_overlay(sample, path)
            outputs.append(path)
            shown += 1
    _write_run_manifest(os.path.join(args.out, "run_manifest.json"),
                        _run_manifest("generate", args.seed,
                                      config_mod.config_hash(cfg),
                                      [args.config] if args.config else [],
                                      outputs, t0))
    print(f"wrote {args.n} samples to {args.out}")
    return 0


def _read_predictions(path: str) -> dict[str, list[schema.DifferenceRecord]]:
    """A predictions/ground-truth JSONL file: {id, explanation|ground_truth}."""
    out: dict[str, list[schema.DifferenceRecord]] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as e:
        raise evaluator.DataError(f"cannot open {path!r}: {e}")
    with fh:
        for ln, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise evaluator.DataError(
                    f"{path}: malformed JSON at line {ln} column {e.colno}: {e.msg}")
            if not isinstance(obj, dict) or "id" not in obj:
                raise evaluator.DataError(f"{path}:{ln}: expected an object with an id")
            records = obj.get("explanation", obj.get("ground_truth"))
            if records is None:
                raise evaluator.DataError(
                    f"{path}:{ln}: no explanation/ground_truth entry")
            if obj["id"] in out:
                raise evaluator.DataError(f"{path}:{ln}: duplicate id {obj['id']!r}")
            out[obj["id"]] = schema.parse(json.dumps(records))
    if not out:
        raise evaluator.DataError(f"{path}: no samples")
    return out


def cmd_explain(args) -> int:
    t0 = time.monotonic()
    if args.method == "retrieval" and not args.pool:
        raise UsageError("--method retrieval requires --pool")
    samples = pairgen.read_manifest(args.input)
    pool = explain.load_pool(args.pool) if args.method == "retrieval" else None
    lines = []
    for sample in samples:
        if args.method == "lsq":
            records = explain.explain_lsq(sample.ref, sample.tgt)
        elif args.method == "retrieval":
            records = explain.explain_retrieval(sample.ref, sample.tgt, pool)
        else:
            records = explain.explain_oracle(sample)
        lines.append(json.dumps(
            {"id": sample.id, "explanation": [r.as_dict() for r in records]},
            separators=(",", ":")))
    pairgen.atomic_write(args.out, "\n".join(lines) + "\n")
    _write_run_manifest(args.out + ".run.json",
                        _run_manifest(f"explain --method {args.method}", None, None,
                                      [args.input] + ([args.pool] if args.pool else []),
                                      [args.out], t0))
    print(f"explained {len(samples)} samples with {args.method}")
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.monotonic()
    pred = _read_predictions(args.pred)
    gt = _read_predictions(args.gt)
    report = evaluator.evaluate_dataset(pred, gt)
    os.makedirs(args.out, exist_ok=True)
    json_path = os.path.join(args.out, "report.json")
    text_path = os.path.join(args.out, "report.txt")
    chart_path = os.path.join(args.out, "report.png")
    pairgen.atomic_write(json_path, evaluator.report_json(report))
    pairgen.atomic_write(text_path, evaluator.render_table(report))
    from . import plots
    plots.save_report_chart(report, chart_path)
    _write_run_manifest(os.path.join(args.out, "run_manifest.json"),
                        _run_manifest("evaluate", None, None,
                                      [args.pred, args.gt],
                                      [json_path, text_path, chart_path], t0))
    match = report.match_acc
    print("-" if match is None else f"{match:.1f}")
    return 0


def cmd_validate(args) -> int:
    try:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        print(f"error: cannot open {args.input!r}: {e}", file=sys.stderr)
        return 1
    stripped = text.lstrip()
    problems: list[str] = []
    count = 0
    if stripped.startswith("["):
        try:
            schema.parse(text, lenient=args.lenient)
            count = 1
        except schema.SchemaViolation as e:
            problems.extend(e.violations)
    else:
        for ln, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            count += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                problems.append(f"line {ln}: malformed JSON at column {e.colno}: {e.msg}")
                continue
            if not isinstance(obj, dict):
                problems.append(f"line {ln}: expected an object")
                continue
            records = obj.get("explanation", obj.get("ground_truth"))
            if records is None:
                problems.append(f"line {ln}: no explanation/ground_truth entry")
                continue
            try:
                schema.parse(json.dumps(records), lenient=args.lenient)
            except schema.SchemaViolation as e:
                problems.extend(f"line {ln}: {v}" for v in e.violations)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        print(f"invalid: {len(problems)} violation(s)", file=sys.stderr)
        return 1
    print(f"valid ({count} entr{'y' if count == 1 else 'ies'})")
    return 0


def cmd_build_pool(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    pool = explain.build_pool(cfg, args.seed, args.n, workers=args.workers)
    explain.save_pool(pool, args.out)
    _write_run_manifest(args.out + ".run.json",
                        _run_manifest("build-pool", args.seed,
                                      config_mod.config_hash(cfg),
                                      [args.config] if args.config else [],
                                      [args.out], t0))
    print(f"pool of {len(pool)} entries written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsdiffbench",
        description="Paired time-series difference benchmark: generate, "
                    "explain, evaluate.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_gen_opts(p, needs_n=True):
        if needs_n:
            p.add_argument("--n", type=int, required=True, help="number of samples")
        p.add_argument("--seed", type=int, required=True,
                       help="master seed (required; runs are reproducible)")
        p.add_argument("--kmin", type=int, default=None, help="min differences (default 1)")
        p.add_argument("--kmax", type=int, default=None, help="max differences (default 1)")
        p.add_argument("--length", type=int, default=None, help="series length (default 300)")
        p.add_argument("--source", default=None,
                       help="baseline: random_walk|ar1|sine_mix|piecewise_const|corpus:PATH")
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--workers", type=int, default=1, help="parallel sample builders")

    g = sub.add_parser("generate", help="synthesize a labeled dataset")
    add_gen_opts(g)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--csv", action="store_true",
                   help="store series as sidecar CSVs instead of inline arrays")
    g.add_argument("--plot", action="store_true",
                   help="write per-sample ref/tgt overlay CSVs plus PNG figures")
    g.add_argument("--plot-limit", type=int, default=8,
                   help="max PNG overlays to render (CSV overlays are unlimited)")
    g.set_defaults(fn=cmd_generate)

    e = sub.add_parser("explain", help="run a baseline explainer over a dataset")
    e.add_argument("--method", choices=("lsq", "retrieval", "oracle"), required=True)
    e.add_argument("--in", dest="input", required=True, help="dataset manifest.jsonl")
    e.add_argument("--out", required=True, help="predictions JSONL to write")
    e.add_argument("--pool", default=None, help="retrieval pool file (.npz)")
    e.set_defaults(fn=cmd_explain)

    v = sub.add_parser("evaluate", help="score predictions against ground truth")
    v.add_argument("--pred", required=True, help="predictions JSONL")
    v.add_argument("--gt", required=True, help="ground-truth JSONL (dataset manifest)")
    v.add_argument("--out", required=True, help="report directory")
    v.set_defaults(fn=cmd_evaluate)

    c = sub.add_parser("validate", help="check files against the record schema")
    c.add_argument("--in", dest="input", required=True,
                   help="a JSON record array or a JSONL manifest/predictions file")
    c.add_argument("--lenient", action="store_true",
                   help="tolerate reordered keys and missing-as-null")
    c.set_defaults(fn=cmd_validate)

    b = sub.add_parser("build-pool", help="embed generated pairs for retrieval")
    add_gen_opts(b)
    b.add_argument("--out", required=True, help="pool file to write (.npz)")
    b.set_defaults(fn=cmd_build_pool)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (ConfigError, schema.SchemaViolation, evaluator.DataError,
            pairgen.DataError, explain.PoolError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
