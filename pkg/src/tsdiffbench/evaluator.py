"""Scoring: alignment of predicted vs ground-truth records and the metric set.

Alignment is per sample, in two passes.  Pass 1 greedily pairs records whose
functions share a category, taking candidate pairs by descending interval
IoU (ties broken by ground-truth index, then prediction index).  Pass 2 is a
positional fallback -- i-th prediction with i-th ground truth -- applied only
when pass 1 produced no matches at all.

Field accuracies are pooled over all matched pairs in the dataset.  A field
only counts where the ground truth makes it meaningful: presence on TYPE1
rows, param/magnitude on TYPE2 rows; a field with zero eligible pairs is
reported as absent rather than zero.  A matched pair counts as a full match
when every eligible field is correct and interval IoU >= 0.8.  OPR and UPR
express the unmatched predictions / ground truths as a percentage of all
ground-truth records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import funclib, schema
from .schema import DifferenceRecord

MATCH_IOU_GATE = 0.8

_FIELDS = ("type", "func", "presence", "param", "magnitude")


class DataError(ValueError):
    """Raised when prediction/ground-truth inputs do not line up."""


def interval_iou(a: DifferenceRecord | tuple, b: DifferenceRecord | tuple) -> float:
    """Index-arithmetic IoU: (min end - max start)+ / (max end - min start).

    Identical single-point intervals score 1.0 (the 0/0 limit); distinct
    single points score 0.
    """
    a_s, a_e = (a.start, a.end) if isinstance(a, DifferenceRecord) else a
    b_s, b_e = (b.start, b.end) if isinstance(b, DifferenceRecord) else b
    inter = max(0, min(a_e, b_e) - max(a_s, b_s))
    union = max(a_e, b_e) - min(a_s, b_s)
    if union == 0:
        return 1.0 if (a_s, a_e) == (b_s, b_e) else 0.0
    return inter / union


@dataclass
class Alignment:
    """Matched index pairs (pred_i, gt_j, iou) plus the leftovers."""

    matches: list[tuple[int, int, float]] = field(default_factory=list)
    unmatched_pred: list[int] = field(default_factory=list)
    unmatched_gt: list[int] = field(default_factory=list)


def _category(record: DifferenceRecord) -> str | None:
    return funclib.CATEGORY_OF.get(record.func)


def align(pred: list[DifferenceRecord], gt: list[DifferenceRecord]) -> Alignment:
    candidates = []
    for j, g in enumerate(gt):
        for i, p in enumerate(pred):
            if _category(p) is not None and _category(p) == _category(g):
                candidates.append((-interval_iou(p, g), j, i))
    candidates.sort()
    used_p: set[int] = set()
    used_g: set[int] = set()
    matches: list[tuple[int, int, float]] = []
    for neg_iou, j, i in candidates:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        matches.append((i, j, -neg_iou))
    if not matches:
        for i in range(min(len(pred), len(gt))):
            matches.append((i, i, interval_iou(pred[i], gt[i])))
            used_p.add(i)
            used_g.add(i)
    return Alignment(
        matches=matches,
        unmatched_pred=[i for i in range(len(pred)) if i not in used_p],
        unmatched_gt=[j for j in range(len(gt)) if j not in used_g])


@dataclass
class MatchedPair:
    pred: DifferenceRecord
    gt: DifferenceRecord
    iou: float


def _field_eligible(fieldname: str, gt: DifferenceRecord) -> bool:
    if fieldname in ("type", "func"):
        return True
    if fieldname == "presence":
        return gt.type == schema.TYPE1
    return gt.type == schema.TYPE2  # param, magnitude


def field_accuracies(pairs: list[MatchedPair]) -> dict[str, float | None]:
    """Per-field accuracy in percent over eligible matched pairs; None when
    a field had no eligible pair."""
    out: dict[str, float | None] = {}
    for f in _FIELDS:
        eligible = [p for p in pairs if _field_eligible(f, p.gt)]
        if not eligible:
            out[f] = None
            continue
        hits = sum(1 for p in eligible
                   if getattr(p.pred, f) == getattr(p.gt, f))
        out[f] = 100.0 * hits / len(eligible)
    return out


def _is_full_match(pair: MatchedPair) -> bool:
    if pair.iou < MATCH_IOU_GATE:
        return False
    return all(getattr(pair.pred, f) == getattr(pair.gt, f)
               for f in _FIELDS if _field_eligible(f, pair.gt))


def match_accuracy(pairs: list[MatchedPair]) -> tuple[float | None, dict[str, float | None]]:
    """(overall, per-ground-truth-category) full-match rates over matched pairs."""
    if not pairs:
        return None, {c: None for c in funclib.CATEGORIES}
    overall = 100.0 * sum(_is_full_match(p) for p in pairs) / len(pairs)
    by_cat: dict[str, float | None] = {}
    for cat in funclib.CATEGORIES:
        sub = [p for p in pairs if _category(p.gt) == cat]
        by_cat[cat] = 100.0 * sum(_is_full_match(p) for p in sub) / len(sub) if sub else None
    return overall, by_cat


@dataclass
class EvalReport:
    n_samples: int
    n_gt: int
    n_pred: int
    n_matched: int
    field_acc: dict[str, float | None]
    mean_iou: float | None           # percentage over matched pairs
    match_acc: float | None
    match_acc_by_category: dict[str, float | None]
    opr: float
    upr: float

    def to_dict(self) -> dict:
        return {
            "counts": {
                "samples": self.n_samples,
                "ground_truth_records": self.n_gt,
                "predicted_records": self.n_pred,
                "matched_pairs": self.n_matched,
            },
            "field_accuracy": self.field_acc,
            "mean_iou": self.mean_iou,
            "match_accuracy": self.match_acc,
            "match_accuracy_by_category": self.match_acc_by_category,
            "overprediction_rate": self.opr,
            "underprediction_rate": self.upr,
        }


def evaluate_dataset(pred: dict[str, list[DifferenceRecord]],
                     gt: dict[str, list[DifferenceRecord]]) -> EvalReport:
    """Score a whole dataset keyed by sample id.  Key sets must be equal."""
    missing_pred = sorted(set(gt) - set(pred))
    missing_gt = sorted(set(pred) - set(gt))
    if missing_pred or missing_gt:
        parts = []
        if missing_pred:
            parts.append(f"ids missing from predictions: {missing_pred[:5]}")
        if missing_gt:
            parts.append(f"ids missing from ground truth: {missing_gt[:5]}")
        raise DataError("; ".join(parts))
    if not gt:
        raise DataError("no samples to evaluate")

    pairs: list[MatchedPair] = []
    n_gt = n_pred = unmatched_pred = unmatched_gt = 0
    for sid in sorted(gt):
        g_list, p_list = gt[sid], pred[sid]
        n_gt += len(g_list)
        n_pred += len(p_list)
        al = align(p_list, g_list)
        unmatched_pred += len(al.unmatched_pred)
        unmatched_gt += len(al.unmatched_gt)
        for i, j, iou in al.matches:
            pairs.append(MatchedPair(pred=p_list[i], gt=g_list[j], iou=iou))

    if n_gt == 0:
        raise DataError("ground truth holds no records")
    overall, by_cat = match_accuracy(pairs)
    return EvalReport(
        n_samples=len(gt),
        n_gt=n_gt,
        n_pred=n_pred,
        n_matched=len(pairs),
        field_acc=field_accuracies(pairs),
        mean_iou=(100.0 * sum(p.iou for p in pairs) / len(pairs)) if pairs else None,
        match_acc=overall,
        match_acc_by_category=by_cat,
        opr=100.0 * unmatched_pred / n_gt,
        upr=100.0 * unmatched_gt / n_gt)


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.1f}"


def render_table(report: EvalReport) -> str:
    """Aligned text table; percentages shown to one decimal."""
    head1 = ["Type", "Func", "Presence", "Param", "Magnitude", "IoU", "Match"]
    row1 = [_fmt(report.field_acc["type"]), _fmt(report.field_acc["func"]),
            _fmt(report.field_acc["presence"]), _fmt(report.field_acc["param"]),
            _fmt(report.field_acc["magnitude"]), _fmt(report.mean_iou),
            _fmt(report.match_acc)]
    head2 = ["Trend", "Periodic", "Fluctuation", "Event", "OPR", "UPR"]
    by = report.match_acc_by_category
    row2 = [_fmt(by["TREND"]), _fmt(by["PERIODIC"]), _fmt(by["FLUCTUATION"]),
            _fmt(by["EVENT"]), _fmt(report.opr), _fmt(report.upr)]

    def block(head: list[str], row: list[str]) -> list[str]:
        widths = [max(len(h), len(r)) for h, r in zip(head, row)]
        return ["  ".join(h.rjust(w) for h, w in zip(head, widths)),
                "  ".join(r.rjust(w) for r, w in zip(row, widths))]

    lines = [
        f"samples={report.n_samples}  gt={report.n_gt}  pred={report.n_pred}"
        f"  matched={report.n_matched}",
        "",
        "Field accuracy (%) over matched pairs / match accuracy (%):",
        *block(head1, row1),
        "",
        "Match accuracy (%) by ground-truth category / unmatched rates (%):",
        *block(head2, row2),
    ]
    return "\n".join(lines) + "\n"


def report_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"
