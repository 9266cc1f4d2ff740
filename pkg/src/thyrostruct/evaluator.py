"""Scoring: span-level per-tag precision/recall/F1 and per-class record accuracy.

Two regimes, matching the two measurement tables the system reports:
entity-level exact-span matching with unweighted macro averaging, and
per-class accuracy over aligned record pairs with an unweighted mean over
the 22 classes. A relaxed-overlap span mode exists for sensitivity analysis
only and is never the default.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .model import (
    NOT_MENTIONED,
    EntitySpan,
    OperationRecord,
    RECORD_FIELDS,
    TAG_CODES,
    TAG_DESCRIPTIONS,
    record_fields,
)

REPORT_SCHEMA_VERSION = 1


class AlignmentError(ValueError):
    """Gold and prediction inputs do not line up document-for-document."""


@dataclass(frozen=True)
class TagMetrics:
    tag: str
    precision: float
    recall: float
    f1: float
    support: int

    def __post_init__(self) -> None:
        if self.support < 0:
            raise ValueError("support must be non-negative")


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


DocSpans = Mapping[str, Sequence[EntitySpan]]


def _as_doc_map(spans: Sequence[EntitySpan] | DocSpans) -> dict[str, list[EntitySpan]]:
    if isinstance(spans, Mapping):
        return {doc_id: list(doc) for doc_id, doc in spans.items()}
    return {"": list(spans)}


def span_counts(
    gold: Sequence[EntitySpan] | DocSpans,
    pred: Sequence[EntitySpan] | DocSpans,
    overlap: bool = False,
) -> dict[str, tuple[int, int, int]]:
    """Per-tag (TP, FP, FN) counts over aligned documents.

    A prediction is TP when tag and both offsets match a gold span exactly;
    with `overlap` a same-tag character overlap counts instead (each gold
    span may be claimed once).
    """
    gold_map = _as_doc_map(gold)
    pred_map = _as_doc_map(pred)
    if set(gold_map) != set(pred_map):
        missing = set(gold_map) ^ set(pred_map)
        raise AlignmentError(f"gold/pred document ids differ: {sorted(missing)}")

    tp: Counter[str] = Counter()
    fp: Counter[str] = Counter()
    fn: Counter[str] = Counter()
    for doc_id, gold_spans in gold_map.items():
        pred_spans = pred_map[doc_id]
        if overlap:
            claimed = [False] * len(gold_spans)
            for p in pred_spans:
                hit = False
                for i, g in enumerate(gold_spans):
                    if claimed[i] or g.tag != p.tag:
                        continue
                    if p.start < g.end and g.start < p.end:
                        claimed[i] = True
                        hit = True
                        break
                if hit:
                    tp[p.tag] += 1
                else:
                    fp[p.tag] += 1
            for i, g in enumerate(gold_spans):
                if not claimed[i]:
                    fn[g.tag] += 1
        else:
            gold_set = Counter((g.tag, g.start, g.end) for g in gold_spans)
            for p in pred_spans:
                key = (p.tag, p.start, p.end)
                if gold_set[key] > 0:
                    gold_set[key] -= 1
                    tp[p.tag] += 1
                else:
                    fp[p.tag] += 1
            for key, left in gold_set.items():
                fn[key[0]] += left
    return {
        tag: (tp[tag], fp[tag], fn[tag])
        for tag in TAG_CODES
        if tp[tag] or fp[tag] or fn[tag]
    }


def span_metrics(
    gold: Sequence[EntitySpan] | DocSpans,
    pred: Sequence[EntitySpan] | DocSpans,
    overlap: bool = False,
) -> list[TagMetrics]:
    """Per-tag metrics in canonical tag order; 0/0 ratios are 0."""
    counts = span_counts(gold, pred, overlap=overlap)
    out = []
    for tag in TAG_CODES:
        if tag not in counts:
            continue
        tp, fp, fn = counts[tag]
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        out.append(TagMetrics(tag, precision, recall, f1_score(precision, recall), tp + fn))
    return out


def macro_average(per_tag: Sequence[TagMetrics]) -> tuple[float, float, float]:
    """Unweighted means of P, R, F1 over tags with gold support."""
    included = [m for m in per_tag if m.support > 0]
    if not included:
        raise ValueError("macro average needs at least one tag with support > 0")
    n = len(included)
    return (
        sum(m.precision for m in included) / n,
        sum(m.recall for m in included) / n,
        sum(m.f1 for m in included) / n,
    )


# ---------------------------------------------------------------------------
# Record accuracy
# ---------------------------------------------------------------------------


def record_accuracy(
    gold: Sequence[OperationRecord], pred: Sequence[OperationRecord]
) -> tuple[dict[str, float], float]:
    """Per-class accuracy in percent plus the unweighted mean over classes.

    Two NOT_MENTIONED values agree; every comparison is exact equality.
    """
    if len(gold) != len(pred):
        raise AlignmentError(f"{len(gold)} gold records vs {len(pred)} predictions")
    if not gold:
        raise AlignmentError("cannot score an empty record list")
    n = len(gold)
    per_class: dict[str, float] = {}
    for spec in RECORD_FIELDS:
        agree = sum(
            1 for g, p in zip(gold, pred)
            if getattr(g, spec.name) == getattr(p, spec.name)
        )
        per_class[spec.name] = agree / n * 100.0
    return per_class, mean_class_accuracy(per_class)


def mean_class_accuracy(per_class: Mapping[str, float]) -> float:
    """Unweighted mean of the per-class accuracies."""
    if not per_class:
        raise ValueError("no class accuracies to average")
    return sum(per_class.values()) / len(per_class)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


class ReportFormat(Enum):
    JSON = "json"
    CSV = "csv"
    MARKDOWN = "markdown"


@dataclass(frozen=True)
class EvalReport:
    """Combined span- and record-level results; either part may be empty."""

    per_tag: tuple[TagMetrics, ...] = ()
    macro_precision: float | None = None
    macro_recall: float | None = None
    macro_f1: float | None = None
    per_class_accuracy: Mapping[str, float] | None = None
    mean_accuracy: float | None = None
    case_count: int = 0

    @classmethod
    def from_spans(
        cls,
        gold: Sequence[EntitySpan] | DocSpans,
        pred: Sequence[EntitySpan] | DocSpans,
        overlap: bool = False,
    ) -> "EvalReport":
        per_tag = span_metrics(gold, pred, overlap=overlap)
        macro_p, macro_r, macro_f = macro_average(per_tag)
        case_count = len(_as_doc_map(gold))
        return cls(tuple(per_tag), macro_p, macro_r, macro_f, None, None, case_count)

    @classmethod
    def from_records(
        cls, gold: Sequence[OperationRecord], pred: Sequence[OperationRecord]
    ) -> "EvalReport":
        per_class, mean = record_accuracy(gold, pred)
        return cls((), None, None, None, per_class, mean, len(gold))


def _ordered_classes(per_class: Mapping[str, float]) -> list[tuple[str, float]]:
    ordered = [(spec, per_class[spec.name]) for spec in RECORD_FIELDS if spec.name in per_class]
    return [(spec.key, value) for spec, value in ordered]


def emit_report(report: EvalReport, fmt: ReportFormat = ReportFormat.JSON) -> str:
    """Render deterministically: canonical tag order, canonical class order."""
    if fmt is ReportFormat.JSON:
        obj: dict = {"schema_version": REPORT_SCHEMA_VERSION, "case_count": report.case_count}
        if report.per_tag:
            obj["span"] = {
                "per_tag": [
                    {
                        "tag": m.tag,
                        "precision": m.precision,
                        "recall": m.recall,
                        "f1": m.f1,
                        "support": m.support,
                    }
                    for m in report.per_tag
                ],
                "macro": {
                    "precision": report.macro_precision,
                    "recall": report.macro_recall,
                    "f1": report.macro_f1,
                },
            }
        if report.per_class_accuracy is not None:
            obj["record"] = {
                "per_class": {key: value for key, value in _ordered_classes(report.per_class_accuracy)},
                "mean_accuracy": report.mean_accuracy,
            }
        return json.dumps(obj, ensure_ascii=False, indent=2)

    if fmt is ReportFormat.CSV:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["section", "name", "precision", "recall", "f1", "support", "accuracy"])
        for m in report.per_tag:
            writer.writerow(["tag", m.tag, f"{m.precision:.6f}", f"{m.recall:.6f}",
                             f"{m.f1:.6f}", m.support, ""])
        if report.per_tag:
            writer.writerow(["macro", "Macro", f"{report.macro_precision:.6f}",
                             f"{report.macro_recall:.6f}", f"{report.macro_f1:.6f}", "", ""])
        if report.per_class_accuracy is not None:
            for key, value in _ordered_classes(report.per_class_accuracy):
                writer.writerow(["class", key, "", "", "", "", f"{value:.6f}"])
            writer.writerow(["average", "Average", "", "", "", "",
                             f"{report.mean_accuracy:.6f}"])
        return buffer.getvalue()

    if fmt is ReportFormat.MARKDOWN:
        lines: list[str] = []
        if report.per_tag:
            lines.append("| Tag | Details | P | R | F1 | Support |")
            lines.append("| --- | --- | --- | --- | --- | --- |")
            for m in report.per_tag:
                lines.append(
                    f"| {m.tag} | {TAG_DESCRIPTIONS[m.tag]} | {m.precision:.2f} "
                    f"| {m.recall:.2f} | {m.f1:.2f} | {m.support} |"
                )
            total_support = sum(m.support for m in report.per_tag)
            lines.append(
                f"| Macro |  | {report.macro_precision:.2f} | {report.macro_recall:.2f} "
                f"| {report.macro_f1:.2f} | {total_support} |"
            )
        if report.per_class_accuracy is not None:
            if lines:
                lines.append("")
            lines.append("| Class | Accuracy (%) |")
            lines.append("| --- | --- |")
            for key, value in _ordered_classes(report.per_class_accuracy):
                lines.append(f"| {key} | {value:.2f} |")
            lines.append(f"| Average | {report.mean_accuracy:.2f} |")
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown format {fmt!r}")


def report_from_json(text: str) -> EvalReport:
    obj = json.loads(text)
    per_tag = ()
    macro_p = macro_r = macro_f = None
    if "span" in obj:
        per_tag = tuple(
            TagMetrics(m["tag"], m["precision"], m["recall"], m["f1"], m["support"])
            for m in obj["span"]["per_tag"]
        )
        macro = obj["span"]["macro"]
        macro_p, macro_r, macro_f = macro["precision"], macro["recall"], macro["f1"]
    per_class = None
    mean_acc = None
    if "record" in obj:
        key_to_name = {spec.key: spec.name for spec in RECORD_FIELDS}
        per_class = {key_to_name[k]: v for k, v in obj["record"]["per_class"].items()}
        mean_acc = obj["record"]["mean_accuracy"]
    return EvalReport(per_tag, macro_p, macro_r, macro_f, per_class, mean_acc,
                      obj.get("case_count", 0))
