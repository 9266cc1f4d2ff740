import csv
import io
import json
import random
from collections import Counter

import pytest

from thyrostruct.evaluator import (
    AlignmentError,
    EvalReport,
    ReportFormat,
    TagMetrics,
    emit_report,
    f1_score,
    macro_average,
    mean_class_accuracy,
    record_accuracy,
    report_from_json,
    span_counts,
    span_metrics,
)
from thyrostruct.model import (
    EntitySpan,
    Laterality,
    OperationRecord,
    RECORD_FIELDS,
    Sex,
    TAG_CODES,
)
from tests.conftest import (
    REFERENCE_CLASS_ACCURACY,
    REFERENCE_MACRO,
    REFERENCE_MEAN_ACCURACY,
    REFERENCE_TAG_SCORES,
)


def spans(*triples) -> list[EntitySpan]:
    return [EntitySpan(s, e, tag, "x" * (e - s)) for tag, s, e in triples]


# ---------------------------------------------------------------------------
# span metrics
# ---------------------------------------------------------------------------


def test_perfect_prediction_is_all_ones():
    gold = spans(("PAT", 0, 5), ("DXN", 10, 20))
    out = span_metrics(gold, list(gold))
    assert {m.tag for m in out} == {"PAT", "DXN"}
    for m in out:
        assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)
        assert m.support == 1


def test_counts_two_tp_one_fp_one_fn():
    gold = spans(("PAT", 0, 5), ("PAT", 10, 15), ("PAT", 20, 25))
    pred = spans(("PAT", 0, 5), ("PAT", 10, 15), ("PAT", 30, 35))
    (m,) = span_metrics(gold, pred)
    assert m.support == 3
    assert m.precision == pytest.approx(2 / 3, abs=1e-9)
    assert m.recall == pytest.approx(2 / 3, abs=1e-9)
    assert m.f1 == pytest.approx(2 / 3, abs=1e-9)


def test_harmonic_mean_reference_row():
    # the published row with P=0.67, R=1.00 reports F1=0.80
    assert f1_score(0.67, 1.00) == pytest.approx(0.80, abs=5e-3)
    assert f1_score(0.0, 0.0) == 0.0


def test_zero_over_zero_is_zero():
    gold = spans(("PAT", 0, 5))
    pred = spans(("DXN", 0, 5))
    out = {m.tag: m for m in span_metrics(gold, pred)}
    assert out["PAT"].precision == 0.0 and out["PAT"].recall == 0.0
    assert out["DXN"].precision == 0.0 and out["DXN"].recall == 0.0
    assert out["DXN"].support == 0


def test_document_alignment_enforced():
    with pytest.raises(AlignmentError):
        span_metrics({"a": spans(("PAT", 0, 2))}, {"b": spans(("PAT", 0, 2))})


def test_overlap_mode_is_laxer():
    gold = spans(("PAT", 0, 10))
    pred = spans(("PAT", 3, 8))
    assert span_metrics(gold, pred)[0].f1 == 0.0
    assert span_metrics(gold, pred, overlap=True)[0].f1 == 1.0


def test_swap_gold_pred_swaps_precision_recall():
    rng = random.Random(5)
    for _ in range(50):
        gold = _random_doc_spans(rng)
        pred = _random_doc_spans(rng)
        ab = {m.tag: m for m in span_metrics(gold, pred)}
        ba = {m.tag: m for m in span_metrics(pred, gold)}
        assert set(ab) == set(ba)
        for tag in ab:
            assert ab[tag].precision == pytest.approx(ba[tag].recall, abs=1e-12)
            assert ab[tag].recall == pytest.approx(ba[tag].precision, abs=1e-12)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


def _random_doc_spans(rng: random.Random, max_spans: int = 20) -> list[EntitySpan]:
    out = []
    for _ in range(rng.randint(0, max_spans)):
        start = rng.randint(0, 80)
        end = start + rng.randint(1, 10)
        tag = rng.choice(TAG_CODES[:6])
        out.append(EntitySpan(start, end, tag, "x" * (end - start)))
    return out


def _brute_counts(gold_map, pred_map):
    """Pairwise enumeration over every (gold, pred) combination."""
    tp, fp, fn = Counter(), Counter(), Counter()
    for doc_id, gold in gold_map.items():
        pred = pred_map[doc_id]
        taken = [False] * len(gold)
        for p in pred:
            hit = None
            for gi, g in enumerate(gold):
                if taken[gi]:
                    continue
                if (g.tag, g.start, g.end) == (p.tag, p.start, p.end):
                    hit = gi
                    break
            if hit is None:
                fp[p.tag] += 1
            else:
                taken[hit] = True
                tp[p.tag] += 1
        for gi, g in enumerate(gold):
            if not taken[gi]:
                fn[g.tag] += 1
    return tp, fp, fn


def test_span_counts_match_brute_force_small():
    rng = random.Random(2024)
    for _ in range(200):
        n_docs = rng.randint(1, 10)
        gold_map = {f"d{i}": _random_doc_spans(rng) for i in range(n_docs)}
        pred_map = {f"d{i}": _random_doc_spans(rng) for i in range(n_docs)}
        counts = span_counts(gold_map, pred_map)
        tp, fp, fn = _brute_counts(gold_map, pred_map)
        for tag in set(tp) | set(fp) | set(fn) | set(counts):
            assert counts.get(tag, (0, 0, 0)) == (tp[tag], fp[tag], fn[tag])


# ---------------------------------------------------------------------------
# macro averaging against the published table
# ---------------------------------------------------------------------------


def _reference_metrics() -> list[TagMetrics]:
    return [TagMetrics(tag, p, r, f, s) for tag, p, r, f, s in REFERENCE_TAG_SCORES]


def test_macro_of_reference_scores():
    macro_p, macro_r, macro_f = macro_average(_reference_metrics())
    ref_p, ref_r, ref_f = REFERENCE_MACRO
    assert macro_p == pytest.approx(ref_p, abs=5e-3)
    assert macro_r == pytest.approx(ref_r, abs=5e-3)
    assert macro_f == pytest.approx(ref_f, abs=5e-3)


def test_macro_single_tag_is_identity():
    (m,) = [TagMetrics("PAT", 0.5, 0.7, 0.58, 3)]
    assert macro_average([m]) == (0.5, 0.7, 0.58)


def test_macro_excludes_zero_support_tags():
    ms = [TagMetrics("PAT", 1.0, 1.0, 1.0, 10), TagMetrics("DXN", 0.0, 0.0, 0.0, 0)]
    assert macro_average(ms) == (1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        macro_average([TagMetrics("DXN", 0.0, 0.0, 0.0, 0)])


# ---------------------------------------------------------------------------
# record accuracy
# ---------------------------------------------------------------------------


def _base_record() -> OperationRecord:
    from thyrostruct.model import (
        DrainStatus, Finding, MonitorUse, Preservation, RemovalStatus,
        ResectionKind, ResectionRange,
    )
    return OperationRecord(
        age=50,
        sex=Sex.FEMALE,
        tumor_location=(Laterality.LEFT,),
        tumor_size=(1.3,),
        diagnosis_name="papillary thyroid carcinoma",
        surgery_method="skin incision",
        thyroid_resection_range=ResectionRange(ResectionKind.TOTAL),
        lymph_node_removal=RemovalStatus.PERFORMED,
        capsular_invasion=Finding.ABSENT,
        extrathyroidal_invasion=Finding.ABSENT,
        lymph_node_enlargement=Finding.ABSENT,
        parathyroid_upper_right=Preservation.PRESERVED,
        parathyroid_lower_right=Preservation.PRESERVED,
        parathyroid_upper_left=Preservation.PRESERVED,
        parathyroid_lower_left=Preservation.PRESERVED,
        neural_monitor_use=MonitorUse.USED,
        rln_right=Preservation.PRESERVED,
        rln_left=Preservation.PRESERVED,
        sln_right=Preservation.PRESERVED,
        sln_left=Preservation.PRESERVED,
        bleeding_on_cleanup="minimal bleeding",
        drain_insertion=DrainStatus.INSERTED,
    )


def _flip(record: OperationRecord, name: str) -> OperationRecord:
    from dataclasses import replace
    from thyrostruct.model import NOT_MENTIONED
    return replace(record, **{name: NOT_MENTIONED})


def test_identical_records_score_100():
    gold = [_base_record() for _ in range(5)]
    per_class, mean = record_accuracy(gold, list(gold))
    assert all(v == 100.0 for v in per_class.values())
    assert mean == 100.0


def test_not_mentioned_agreement_counts_as_correct():
    gold = [OperationRecord(), OperationRecord()]
    per_class, mean = record_accuracy(gold, [OperationRecord(), OperationRecord()])
    assert mean == 100.0


def test_length_mismatch_rejected():
    with pytest.raises(AlignmentError):
        record_accuracy([OperationRecord()], [])


def _disagreements_for(column: list[float], cases: int = 65) -> list[int]:
    return [round((100.0 - acc) / 100.0 * cases) for acc in column]


@pytest.mark.parametrize("column", ["korean_koelectra", "korean_gpt4"])
def test_reference_accuracy_columns_reproduced_from_records(column):
    cases = 65
    flips = _disagreements_for(REFERENCE_CLASS_ACCURACY[column], cases)
    gold = [_base_record() for _ in range(cases)]
    pred = []
    for i in range(cases):
        record = _base_record()
        for spec, k in zip(RECORD_FIELDS, flips):
            if i < k:
                record = _flip(record, spec.name)
        pred.append(record)
    per_class, mean = record_accuracy(gold, pred)
    for spec, expected in zip(RECORD_FIELDS, REFERENCE_CLASS_ACCURACY[column]):
        assert per_class[spec.name] == pytest.approx(expected, abs=5e-3)
    assert mean == pytest.approx(REFERENCE_MEAN_ACCURACY[column], abs=5e-3)
    # value anchor: every accuracy sits on the 100/n grid
    for value in per_class.values():
        assert value * cases / 100.0 == pytest.approx(round(value * cases / 100.0), abs=1e-9)


@pytest.mark.parametrize("column", sorted(REFERENCE_CLASS_ACCURACY))
def test_reference_means_from_published_values(column):
    per_class = {
        spec.name: value
        for spec, value in zip(RECORD_FIELDS, REFERENCE_CLASS_ACCURACY[column])
    }
    assert mean_class_accuracy(per_class) == pytest.approx(
        REFERENCE_MEAN_ACCURACY[column], abs=5e-3
    )


def test_accuracy_bounds_random():
    rng = random.Random(8)
    for _ in range(20):
        n = rng.randint(1, 12)
        gold = [_base_record() for _ in range(n)]
        pred = [
            _flip(_base_record(), rng.choice(RECORD_FIELDS).name) if rng.random() < 0.5
            else _base_record()
            for _ in range(n)
        ]
        per_class, mean = record_accuracy(gold, pred)
        values = list(per_class.values())
        assert all(0.0 <= v <= 100.0 for v in values)
        assert min(values) - 1e-9 <= mean <= max(values) + 1e-9


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def _full_report() -> EvalReport:
    per_tag = tuple(_reference_metrics())
    macro_p, macro_r, macro_f = macro_average(per_tag)
    per_class = {
        spec.name: value
        for spec, value in zip(RECORD_FIELDS, REFERENCE_CLASS_ACCURACY["korean_koelectra"])
    }
    return EvalReport(per_tag, macro_p, macro_r, macro_f, per_class,
                      mean_class_accuracy(per_class), 65)


def test_markdown_mirrors_reference_layout():
    text = emit_report(_full_report(), ReportFormat.MARKDOWN)
    lines = [line for line in text.splitlines() if line.startswith("|")]
    # 18 tag rows + header + separator + macro row
    tag_table = [line for line in lines if "|" in line and "Accuracy" not in line]
    assert len([l for l in tag_table if l.split("|")[1].strip() in TAG_CODES]) == 18
    assert any(l.startswith("| Macro") for l in lines)
    assert any(l.startswith("| Average") for l in lines)
    assert "| PAT | Patient demographics (age and gender) | 1.00 | 1.00 | 1.00 | 592 |" in text


def test_json_report_round_trip():
    report = _full_report()
    text = emit_report(report, ReportFormat.JSON)
    loaded = report_from_json(text)
    assert loaded.per_tag == report.per_tag
    assert loaded.mean_accuracy == pytest.approx(report.mean_accuracy)
    assert json.loads(text)["schema_version"] == 1


def test_csv_values_agree_with_json():
    report = _full_report()
    rows = list(csv.DictReader(io.StringIO(emit_report(report, ReportFormat.CSV))))
    by_name = {(r["section"], r["name"]): r for r in rows}
    for m in report.per_tag:
        row = by_name[("tag", m.tag)]
        assert float(row["precision"]) == pytest.approx(m.precision)
        assert int(row["support"]) == m.support
    macro_row = by_name[("macro", "Macro")]
    assert float(macro_row["f1"]) == pytest.approx(report.macro_f1)
    avg_row = by_name[("average", "Average")]
    assert float(avg_row["accuracy"]) == pytest.approx(report.mean_accuracy)


def test_span_metrics_returns_canonical_tag_order():
    gold = spans(("DNT", 0, 2), ("PAT", 5, 8), ("SGM", 10, 12), ("TMR", 20, 22))
    out = span_metrics(gold, list(gold))
    assert [m.tag for m in out] == ["PAT", "TMR", "SGM", "DNT"]


def test_class_table_follows_canonical_class_order():
    text = emit_report(_full_report(), ReportFormat.MARKDOWN)
    class_rows = [
        line.split("|")[1].strip()
        for line in text.splitlines()
        if line.startswith("|") and line.split("|")[1].strip() not in TAG_CODES
        and "Accuracy" not in line and "---" not in line
        and line.split("|")[1].strip() not in ("Tag", "Macro", "Average", "Class", "")
    ]
    assert class_rows == [spec.key for spec in RECORD_FIELDS]
