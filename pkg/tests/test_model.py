import json
import random

import pytest

from thyrostruct.model import (
    NOT_MENTIONED,
    DrainStatus,
    EntitySpan,
    Finding,
    GoldDocument,
    LabelSequence,
    Laterality,
    MonitorUse,
    Note,
    OperationRecord,
    Preservation,
    RECORD_FIELDS,
    RecordParseError,
    RecordSchemaError,
    RemovalStatus,
    ResectionKind,
    ResectionRange,
    Sex,
    TAG_CODES,
    TAG_DESCRIPTIONS,
    Transcript,
    check_spans,
    gold_from_json,
    gold_to_json,
    record_from_json,
    record_to_json,
    validate_record,
)


def test_tag_set_has_18_unique_codes():
    assert len(TAG_CODES) == 18
    assert len(set(TAG_CODES)) == 18
    assert TAG_DESCRIPTIONS["PRT"] == "Parathyroid information (preservation, or not)"
    assert TAG_DESCRIPTIONS["DXN"] == "Diagnosis name"


def test_record_has_22_classes():
    assert len(RECORD_FIELDS) == 22
    assert len({spec.key for spec in RECORD_FIELDS}) == 22


def test_transcript_rejects_empty_text():
    with pytest.raises(ValueError):
        Transcript(id="x", text="   ")


def test_span_invariants():
    with pytest.raises(ValueError):
        EntitySpan(5, 5, "PAT", "")
    with pytest.raises(ValueError):
        EntitySpan(0, 3, "XXX", "foo")
    text = "a drain was inserted"
    span = EntitySpan(2, 7, "DNT", "drain")
    check_spans([span], text)
    with pytest.raises(ValueError):
        check_spans([EntitySpan(2, 7, "DNT", "wrong")], text)
    with pytest.raises(ValueError):
        check_spans([EntitySpan(2, 7, "DNT", "drain"), EntitySpan(5, 9, "DNT", "n wa")], text)


def test_label_sequence_invariants():
    LabelSequence(((0, 2), (3, 5)), ("B-PAT", "I-PAT"))
    with pytest.raises(ValueError):
        LabelSequence(((0, 2),), ("B-PAT", "O"))
    with pytest.raises(ValueError):
        LabelSequence(((0, 2), (1, 4)), ("O", "O"))
    with pytest.raises(ValueError):
        LabelSequence(((0, 2),), ("B-XXX",))


# ---------------------------------------------------------------------------
# validate_record
# ---------------------------------------------------------------------------


def test_minimal_record_valid():
    record = OperationRecord(age=50, sex=Sex.FEMALE)
    assert validate_record(record) == []


def test_all_not_mentioned_valid():
    assert validate_record(OperationRecord()) == []


def test_misaligned_tumor_lists_flagged():
    record = OperationRecord(
        tumor_location=(Laterality.LEFT, Laterality.RIGHT), tumor_size=(1.3,)
    )
    violations = validate_record(record)
    assert len(violations) == 1
    assert violations[0][0] == "tumor_location"


def test_validate_flags_bad_values():
    record = OperationRecord(
        age=-3,
        sex="female",  # not the enum
        rln_left=Preservation.NOT_IDENTIFIED,
        tumor_size=(0.0,),
        notes=(Note("XXX", "hm"),),
    )
    fields = {f for f, _ in validate_record(record)}
    assert fields == {"age", "sex", "rln_left", "tumor_size", "notes"}


def test_other_resection_must_not_shadow_canonical():
    bad = OperationRecord(
        thyroid_resection_range=ResectionRange(ResectionKind.OTHER, "Total thyroidectomy")
    )
    assert validate_record(bad)
    good = OperationRecord(
        thyroid_resection_range=ResectionRange(ResectionKind.OTHER, "subtotal resection")
    )
    assert validate_record(good) == []


def _brute_force_valid(record: OperationRecord) -> bool:
    """Field-by-field reimplementation, independent of validate_record."""
    ok = True
    v = record.age
    if v is not NOT_MENTIONED:
        ok &= isinstance(v, int) and not isinstance(v, bool) and v > 0
    v = record.sex
    if v is not NOT_MENTIONED:
        ok &= isinstance(v, Sex)
    loc, size = record.tumor_location, record.tumor_size
    if loc is not NOT_MENTIONED:
        ok &= isinstance(loc, tuple) and len(loc) > 0 and all(isinstance(x, Laterality) for x in loc)
    if size is not NOT_MENTIONED:
        ok &= (
            isinstance(size, tuple) and len(size) > 0
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0 for x in size)
        )
    if loc is not NOT_MENTIONED and size is not NOT_MENTIONED:
        ok &= len(loc) == len(size)
    for name in ("diagnosis_name", "surgery_method", "bleeding_on_cleanup"):
        v = getattr(record, name)
        if v is not NOT_MENTIONED:
            ok &= isinstance(v, str) and bool(v.strip())
    v = record.thyroid_resection_range
    if v is not NOT_MENTIONED:
        ok &= isinstance(v, ResectionRange)
        if isinstance(v, ResectionRange) and v.kind is ResectionKind.OTHER:
            ok &= v.detail.strip().casefold() not in {
                "total thyroidectomy", "left lobectomy", "right lobectomy", "isthmusectomy",
            }
    for name, enum_cls in [
        ("lymph_node_removal", RemovalStatus),
        ("capsular_invasion", Finding),
        ("extrathyroidal_invasion", Finding),
        ("lymph_node_enlargement", Finding),
        ("neural_monitor_use", MonitorUse),
        ("drain_insertion", DrainStatus),
    ]:
        v = getattr(record, name)
        if v is not NOT_MENTIONED:
            ok &= isinstance(v, enum_cls)
    for name in (
        "parathyroid_upper_right", "parathyroid_lower_right",
        "parathyroid_upper_left", "parathyroid_lower_left", "sln_right", "sln_left",
    ):
        v = getattr(record, name)
        if v is not NOT_MENTIONED:
            ok &= isinstance(v, Preservation)
    for name in ("rln_right", "rln_left"):
        v = getattr(record, name)
        if v is not NOT_MENTIONED:
            ok &= isinstance(v, Preservation) and v is not Preservation.NOT_IDENTIFIED
    for note in record.notes:
        ok &= isinstance(note, Note) and note.tag in TAG_CODES and bool(note.text.strip())
    return bool(ok)


def _random_record(rng: random.Random, force_valid: bool) -> OperationRecord:
    kw = {}
    if rng.random() < 0.7:
        kw["age"] = rng.randint(1, 99) if force_valid or rng.random() < 0.9 else -rng.randint(1, 9)
    if rng.random() < 0.7:
        kw["sex"] = rng.choice(list(Sex))
    if rng.random() < 0.6:
        n = rng.randint(1, 3)
        kw["tumor_location"] = tuple(rng.choice(list(Laterality)) for _ in range(n))
        if force_valid or rng.random() < 0.8:
            kw["tumor_size"] = tuple(round(rng.uniform(0.1, 5.0), 1) for _ in range(n))
        else:
            kw["tumor_size"] = tuple(round(rng.uniform(0.1, 5.0), 1) for _ in range(n + 1))
    if rng.random() < 0.5:
        kw["diagnosis_name"] = rng.choice(["papillary thyroid carcinoma", "PTC", "goiter"])
    if rng.random() < 0.5:
        kw["surgery_method"] = "skin incision"
    if rng.random() < 0.5:
        kw["thyroid_resection_range"] = rng.choice([
            ResectionRange(ResectionKind.TOTAL),
            ResectionRange(ResectionKind.LOBECTOMY_LEFT),
            ResectionRange(ResectionKind.ISTHMUSECTOMY),
            ResectionRange(ResectionKind.OTHER, "subtotal resection"),
        ])
    if rng.random() < 0.5:
        kw["lymph_node_removal"] = rng.choice(list(RemovalStatus))
    for name in ("capsular_invasion", "extrathyroidal_invasion", "lymph_node_enlargement"):
        if rng.random() < 0.5:
            kw[name] = rng.choice(list(Finding))
    for name in ("parathyroid_upper_right", "parathyroid_lower_right",
                 "parathyroid_upper_left", "parathyroid_lower_left",
                 "sln_right", "sln_left"):
        if rng.random() < 0.5:
            kw[name] = rng.choice(list(Preservation))
    for name in ("rln_right", "rln_left"):
        if rng.random() < 0.5:
            if force_valid:
                kw[name] = rng.choice([Preservation.PRESERVED, Preservation.NOT_PRESERVED])
            else:
                kw[name] = rng.choice(list(Preservation))
    if rng.random() < 0.5:
        kw["neural_monitor_use"] = rng.choice(list(MonitorUse))
    if rng.random() < 0.5:
        kw["bleeding_on_cleanup"] = "minimal bleeding was noted while cleaning the surgical site"
    if rng.random() < 0.5:
        kw["drain_insertion"] = rng.choice(list(DrainStatus))
    if rng.random() < 0.4:
        kw["notes"] = tuple(
            Note(rng.choice(TAG_CODES), f"note {i}", "unparsed" if rng.random() < 0.2 else None)
            for i in range(rng.randint(1, 3))
        )
    return OperationRecord(**kw)


def test_validate_agrees_with_brute_force_on_random_records():
    rng = random.Random(1234)
    checked_invalid = 0
    for _ in range(500):
        record = _random_record(rng, force_valid=False)
        expected = _brute_force_valid(record)
        got = validate_record(record) == []
        assert got == expected, record
        checked_invalid += 0 if expected else 1
    assert checked_invalid > 20  # the generator does produce invalid ones


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------


def test_sample_fragment_parses_with_defaults():
    text = json.dumps(
        {
            "Age": 50,
            "Gender": "Female",
            "Tumor Location": ["Left", "Right"],
            "Tumor Size": [1.3, 1.1],
            "Drain Insertion": "Inserted",
        }
    )
    record = record_from_json(text)
    assert record.age == 50
    assert record.sex is Sex.FEMALE
    assert record.tumor_location == (Laterality.LEFT, Laterality.RIGHT)
    assert record.tumor_size == (1.3, 1.1)
    assert record.drain_insertion is DrainStatus.INSERTED
    untouched = [
        spec.name for spec in RECORD_FIELDS
        if spec.name not in ("age", "sex", "tumor_location", "tumor_size", "drain_insertion")
    ]
    assert len(untouched) == 17
    for name in untouched:
        assert getattr(record, name) is NOT_MENTIONED


def test_not_mentioned_serialization():
    payload = json.loads(record_to_json(OperationRecord()))
    assert len(payload) == 23  # 22 classes + Notes
    assert all(payload[spec.key] == "not mentioned" for spec in RECORD_FIELDS)
    assert payload["Notes"] == []


def test_ill_typed_age_rejected():
    with pytest.raises(RecordSchemaError) as err:
        record_from_json('{"Age": "fifty"}')
    assert any(key == "Age" for key, _ in err.value.problems)


def test_unknown_keys_rejected():
    with pytest.raises(RecordSchemaError) as err:
        record_from_json('{"Age": 50, "Blood Type": "A"}')
    assert any(key == "Blood Type" for key, _ in err.value.problems)


def test_malformed_json_is_a_parse_error():
    with pytest.raises(RecordParseError):
        record_from_json("{nope")
    with pytest.raises(RecordParseError):
        record_from_json("[1, 2]")


def test_round_trip_identity_randomized():
    rng = random.Random(99)
    n = 0
    for _ in range(1000):
        record = _random_record(rng, force_valid=True)
        if validate_record(record):
            continue
        n += 1
        assert record_from_json(record_to_json(record)) == record
    assert n > 900


def test_gold_document_jsonl_round_trip():
    text = "A 50-year-old female patient underwent total thyroidectomy."
    transcript = Transcript(id="d1", text=text)
    spans = (EntitySpan(2, 19, "PAT", text[2:19]),)
    record = OperationRecord(age=50, sex=Sex.FEMALE)
    doc = GoldDocument(transcript, spans, record)
    line = gold_to_json(doc)
    loaded = gold_from_json(line)
    assert loaded.transcript.id == "d1"
    assert loaded.transcript.text == text
    assert loaded.gold_spans == spans
    assert loaded.gold_record == record
