"""Shared domain model: tag schema, operation-record schema, spans, and validation.

Everything here is an immutable value type. The 18 entity tags and the 22
record classes are the two fixed vocabularies of the system; every other
module imports them from this one place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable

# ---------------------------------------------------------------------------
# Tag schema
# ---------------------------------------------------------------------------

#: The 18 entity tags, in canonical report order, with their descriptions.
TAG_SET: tuple[tuple[str, str], ...] = (
    ("PAT", "Patient demographics (age and gender)"),
    ("TMR", "Tumor location and size before surgery"),
    ("ATM", "Tumor location and size after surgery"),
    ("DXN", "Diagnosis name"),
    ("LNT", "Lymph node transfer, or not"),
    ("SGM", "Surgery method and resection range information"),
    ("LNR", "Lymph node removal, or not"),
    ("ETI", "Invasion information"),
    ("LNE", "Lymph node enlargement, or not"),
    ("NEM", "Using the neural monitor, or not"),
    ("RLN", "Recurrent laryngeal nerve information (preservation, or not and level of difficulty)"),
    ("SLN", "Superior laryngeal nerve information (visual confirmation and preservation, or not)"),
    ("PRT", "Parathyroid information (preservation, or not)"),
    ("RNS", "During resection of lateral cervical lymph node, nerve preservation, or not"),
    ("COM", "Bleeding and damage information"),
    ("DNT", "Drainage tube insertion, or not"),
    ("FZS", "During surgery, frozen section biopsy information"),
    ("ETC", "Other information to record"),
)

TAG_CODES: tuple[str, ...] = tuple(code for code, _ in TAG_SET)
TAG_DESCRIPTIONS: dict[str, str] = dict(TAG_SET)

#: Tags whose content has no dedicated record class; their surfaces are kept
#: as free-text notes on the record instead of being dropped.
NOTE_TAGS: tuple[str, ...] = ("FZS", "LNT", "RNS", "ETC")


# ---------------------------------------------------------------------------
# Field value sentinel
# ---------------------------------------------------------------------------

class NotMentioned:
    """Singleton sentinel for a record class absent from the narrative."""

    _instance: "NotMentioned | None" = None

    def __new__(cls) -> "NotMentioned":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NOT_MENTIONED"

    def __copy__(self) -> "NotMentioned":
        return self

    def __deepcopy__(self, memo: dict) -> "NotMentioned":
        return self


NOT_MENTIONED = NotMentioned()

#: Serialized form of the sentinel.
NOT_MENTIONED_TEXT = "not mentioned"


def mentioned(value: Any) -> bool:
    return value is not NOT_MENTIONED


# ---------------------------------------------------------------------------
# Enumerations (enum values are the canonical JSON strings)
# ---------------------------------------------------------------------------

class LanguageMode(Enum):
    MONOLINGUAL = "monolingual"
    MIXED = "mixed"


class Sex(Enum):
    MALE = "Male"
    FEMALE = "Female"


class Laterality(Enum):
    LEFT = "Left"
    RIGHT = "Right"
    ISTHMUS = "Isthmus"


class RemovalStatus(Enum):
    PERFORMED = "Performed"
    NOT_PERFORMED = "Not performed"


class Finding(Enum):
    PRESENT = "Present"
    ABSENT = "Absent"


class Preservation(Enum):
    PRESERVED = "Preserved"
    NOT_PRESERVED = "Not preserved"
    NOT_IDENTIFIED = "Not identified"


class MonitorUse(Enum):
    USED = "Used"
    NOT_USED = "Not used"


class DrainStatus(Enum):
    INSERTED = "Inserted"
    NOT_INSERTED = "Not inserted"


class ResectionKind(Enum):
    TOTAL = "Total thyroidectomy"
    LOBECTOMY_LEFT = "Left lobectomy"
    LOBECTOMY_RIGHT = "Right lobectomy"
    ISTHMUSECTOMY = "Isthmusectomy"
    OTHER = "Other"


_RESECTION_BY_NAME = {
    kind.value.casefold(): kind for kind in ResectionKind if kind is not ResectionKind.OTHER
}


@dataclass(frozen=True)
class ResectionRange:
    """Extent of thyroid removal; OTHER carries the verbatim phrase."""

    kind: ResectionKind
    detail: str | None = None

    def __post_init__(self) -> None:
        if self.kind is ResectionKind.OTHER:
            if not self.detail or not self.detail.strip():
                raise ValueError("OTHER resection range requires detail text")
        elif self.detail is not None:
            raise ValueError("detail is only allowed with OTHER resection range")

    def json_value(self) -> str:
        if self.kind is ResectionKind.OTHER:
            return self.detail or ""
        return self.kind.value

    @classmethod
    def from_text(cls, text: str) -> "ResectionRange":
        kind = _RESECTION_BY_NAME.get(text.strip().casefold())
        if kind is not None:
            return cls(kind)
        return cls(ResectionKind.OTHER, text.strip())


# ---------------------------------------------------------------------------
# Transcript and spans
# ---------------------------------------------------------------------------

def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class Transcript:
    """A raw narrative plus language-mode and provenance metadata."""

    id: str
    text: str
    language_mode: LanguageMode = LanguageMode.MONOLINGUAL
    source: str = ""
    created_at: datetime = field(default_factory=_utc_now, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValueError("transcript text must be non-empty")
        if not isinstance(self.language_mode, LanguageMode):
            raise ValueError("language_mode must be a LanguageMode")


@dataclass(frozen=True, order=True)
class EntitySpan:
    """A tagged character-offset span; `surface` is the covered text."""

    start: int
    end: int
    tag: str
    surface: str

    def __post_init__(self) -> None:
        if self.tag not in TAG_CODES:
            raise ValueError(f"unknown tag {self.tag!r}")
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad span offsets [{self.start}, {self.end})")


def check_spans(spans: Iterable[EntitySpan], text: str) -> None:
    """Raise ValueError unless spans are valid against `text`:
    in-bounds, surface == slice, sorted by start, non-overlapping."""
    prev_end = 0
    prev_start = -1
    for span in spans:
        if span.end > len(text):
            raise ValueError(f"span [{span.start}, {span.end}) beyond text of length {len(text)}")
        if text[span.start:span.end] != span.surface:
            raise ValueError(
                f"span surface {span.surface!r} != text slice {text[span.start:span.end]!r}"
            )
        if span.start < prev_start:
            raise ValueError("spans not sorted by start")
        if span.start < prev_end:
            raise ValueError(f"span [{span.start}, {span.end}) overlaps previous span")
        prev_start, prev_end = span.start, span.end


# ---------------------------------------------------------------------------
# Token-level label sequences
# ---------------------------------------------------------------------------

_VALID_PREFIXES = ("B-", "I-")


def label_alphabet() -> tuple[str, ...]:
    """All valid labels: O plus B-/I- per tag."""
    labels = ["O"]
    for code in TAG_CODES:
        labels.append(f"B-{code}")
        labels.append(f"I-{code}")
    return tuple(labels)


_LABEL_ALPHABET = frozenset(label_alphabet())


@dataclass(frozen=True)
class LabelSequence:
    """Token offsets paired with their B/I/O labels."""

    tokens: tuple[tuple[int, int], ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        tokens = tuple((int(s), int(e)) for s, e in self.tokens)
        labels = tuple(self.labels)
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "labels", labels)
        if len(tokens) != len(labels):
            raise ValueError(f"{len(tokens)} tokens but {len(labels)} labels")
        prev_end = -1
        for s, e in tokens:
            if not (0 <= s < e):
                raise ValueError(f"bad token offsets [{s}, {e})")
            if s < prev_end:
                raise ValueError("token offsets overlap or are out of order")
            prev_end = e
        for lab in labels:
            if lab not in _LABEL_ALPHABET:
                raise ValueError(f"label {lab!r} not in alphabet")


# ---------------------------------------------------------------------------
# Operation record
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Note:
    """Extracted content with no dedicated record class."""

    tag: str
    text: str
    flag: str | None = None


@dataclass(frozen=True)
class AuditEntry:
    """A write that lost conflict resolution; kept for review, never serialized."""

    field: str
    value: Any
    span: EntitySpan | None
    reason: str


@dataclass(frozen=True)
class FieldSpec:
    name: str
    key: str
    kind: str


#: The 22 record classes in canonical report order. `key` is the JSON name.
RECORD_FIELDS: tuple[FieldSpec, ...] = (
    FieldSpec("age", "Age", "age"),
    FieldSpec("sex", "Sex", "sex"),
    FieldSpec("tumor_location", "Tumor location", "laterality_list"),
    FieldSpec("tumor_size", "Tumor size", "size_list"),
    FieldSpec("diagnosis_name", "Diagnosis name", "text"),
    FieldSpec("surgery_method", "Surgery method", "text"),
    FieldSpec("thyroid_resection_range", "Thyroid resection range", "resection"),
    FieldSpec("lymph_node_removal", "Lymph node removal, or not", "removal"),
    FieldSpec("capsular_invasion", "Capsular invasion, or not", "finding"),
    FieldSpec("extrathyroidal_invasion", "Extrathyroidal invasion, or not", "finding"),
    FieldSpec("lymph_node_enlargement", "Lymph node enlargement", "finding"),
    FieldSpec("parathyroid_upper_right", "Parathyroid preservation status (upper right)", "preservation3"),
    FieldSpec("parathyroid_lower_right", "Parathyroid preservation status (lower right)", "preservation3"),
    FieldSpec("parathyroid_upper_left", "Parathyroid preservation status (upper left)", "preservation3"),
    FieldSpec("parathyroid_lower_left", "Parathyroid preservation status (lower left)", "preservation3"),
    FieldSpec("neural_monitor_use", "Use of neural monitor", "monitor"),
    FieldSpec("rln_right", "Right recurrent laryngeal nerve preservation, or not", "preservation2"),
    FieldSpec("rln_left", "Left recurrent laryngeal nerve preservation, or not", "preservation2"),
    FieldSpec("sln_right", "Superior laryngeal nerve (right)", "preservation3"),
    FieldSpec("sln_left", "Superior laryngeal nerve (left)", "preservation3"),
    FieldSpec("bleeding_on_cleanup", "Bleeding when cleaning the surgical site", "text"),
    FieldSpec("drain_insertion", "Drainage tube insertion, or not", "drain"),
)

FIELD_NAMES: tuple[str, ...] = tuple(f.name for f in RECORD_FIELDS)
FIELD_KEYS: tuple[str, ...] = tuple(f.key for f in RECORD_FIELDS)
FIELD_BY_NAME: dict[str, FieldSpec] = {f.name: f for f in RECORD_FIELDS}

#: Additional accepted spellings on input (the upstream prompt-style keys).
KEY_ALIASES: dict[str, str] = {
    "Gender": "Sex",
    "Tumor Location": "Tumor location",
    "Tumor Size": "Tumor size",
    "Diagnosis Name": "Diagnosis name",
    "Surgery Method": "Surgery method",
    "Drain Insertion": "Drainage tube insertion, or not",
}

NOTES_KEY = "Notes"


@dataclass(frozen=True)
class OperationRecord:
    """The 22-class structured record. Every class defaults to NOT_MENTIONED.

    `notes` holds surfaces of tags with no class home plus anything a parser
    could not interpret; `audit` holds overridden writes and is excluded from
    both equality and serialization.
    """

    age: int | NotMentioned = NOT_MENTIONED
    sex: Sex | NotMentioned = NOT_MENTIONED
    tumor_location: tuple[Laterality, ...] | NotMentioned = NOT_MENTIONED
    tumor_size: tuple[float, ...] | NotMentioned = NOT_MENTIONED
    diagnosis_name: str | NotMentioned = NOT_MENTIONED
    surgery_method: str | NotMentioned = NOT_MENTIONED
    thyroid_resection_range: ResectionRange | NotMentioned = NOT_MENTIONED
    lymph_node_removal: RemovalStatus | NotMentioned = NOT_MENTIONED
    capsular_invasion: Finding | NotMentioned = NOT_MENTIONED
    extrathyroidal_invasion: Finding | NotMentioned = NOT_MENTIONED
    lymph_node_enlargement: Finding | NotMentioned = NOT_MENTIONED
    parathyroid_upper_right: Preservation | NotMentioned = NOT_MENTIONED
    parathyroid_lower_right: Preservation | NotMentioned = NOT_MENTIONED
    parathyroid_upper_left: Preservation | NotMentioned = NOT_MENTIONED
    parathyroid_lower_left: Preservation | NotMentioned = NOT_MENTIONED
    neural_monitor_use: MonitorUse | NotMentioned = NOT_MENTIONED
    rln_right: Preservation | NotMentioned = NOT_MENTIONED
    rln_left: Preservation | NotMentioned = NOT_MENTIONED
    sln_right: Preservation | NotMentioned = NOT_MENTIONED
    sln_left: Preservation | NotMentioned = NOT_MENTIONED
    bleeding_on_cleanup: str | NotMentioned = NOT_MENTIONED
    drain_insertion: DrainStatus | NotMentioned = NOT_MENTIONED
    notes: tuple[Note, ...] = ()
    audit: tuple[AuditEntry, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        for name in ("tumor_location", "tumor_size", "notes", "audit"):
            value = getattr(self, name)
            if isinstance(value, list):
                object.__setattr__(self, name, tuple(value))


def empty_record() -> OperationRecord:
    return OperationRecord()


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

Violation = tuple[str, str]


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_enum(value: Any, enum_cls: type, name: str, out: list[Violation]) -> None:
    if not isinstance(value, enum_cls):
        out.append((name, f"expected {enum_cls.__name__}, got {type(value).__name__}"))


def validate_record(record: OperationRecord) -> list[Violation]:
    """Return all invariant violations as (field, message) pairs.

    An empty list means the record is schema-valid. Absence (NOT_MENTIONED)
    is always valid for any class.
    """
    out: list[Violation] = []
    for spec in RECORD_FIELDS:
        value = getattr(record, spec.name)
        if value is NOT_MENTIONED:
            continue
        if spec.kind == "age":
            if not isinstance(value, int) or isinstance(value, bool):
                out.append((spec.name, f"expected integer age, got {type(value).__name__}"))
            elif value <= 0:
                out.append((spec.name, f"age must be positive, got {value}"))
        elif spec.kind == "sex":
            _check_enum(value, Sex, spec.name, out)
        elif spec.kind == "laterality_list":
            if not isinstance(value, tuple) or not value:
                out.append((spec.name, "expected non-empty list of lateralities"))
            else:
                for item in value:
                    if not isinstance(item, Laterality):
                        out.append((spec.name, f"bad laterality entry {item!r}"))
        elif spec.kind == "size_list":
            if not isinstance(value, tuple) or not value:
                out.append((spec.name, "expected non-empty list of sizes"))
            else:
                for item in value:
                    if not _is_number(item):
                        out.append((spec.name, f"bad size entry {item!r}"))
                    elif item <= 0:
                        out.append((spec.name, f"size must be positive, got {item}"))
        elif spec.kind == "text":
            if not isinstance(value, str) or not value.strip():
                out.append((spec.name, "expected non-empty text"))
        elif spec.kind == "resection":
            if not isinstance(value, ResectionRange):
                out.append((spec.name, f"expected ResectionRange, got {type(value).__name__}"))
            elif value.kind is ResectionKind.OTHER and value.detail is not None \
                    and value.detail.strip().casefold() in _RESECTION_BY_NAME:
                out.append((spec.name, f"OTHER detail {value.detail!r} shadows a canonical range"))
        elif spec.kind == "removal":
            _check_enum(value, RemovalStatus, spec.name, out)
        elif spec.kind == "finding":
            _check_enum(value, Finding, spec.name, out)
        elif spec.kind == "preservation3":
            _check_enum(value, Preservation, spec.name, out)
        elif spec.kind == "preservation2":
            _check_enum(value, Preservation, spec.name, out)
            if value is Preservation.NOT_IDENTIFIED:
                out.append((spec.name, "NOT_IDENTIFIED is not allowed for this nerve"))
        elif spec.kind == "monitor":
            _check_enum(value, MonitorUse, spec.name, out)
        elif spec.kind == "drain":
            _check_enum(value, DrainStatus, spec.name, out)

    loc, size = record.tumor_location, record.tumor_size
    if mentioned(loc) and mentioned(size):
        if isinstance(loc, tuple) and isinstance(size, tuple) and len(loc) != len(size):
            out.append((
                "tumor_location",
                f"location list ({len(loc)}) and size list ({len(size)}) must align",
            ))

    if not isinstance(record.notes, tuple):
        out.append(("notes", "expected a list of notes"))
    else:
        for note in record.notes:
            if not isinstance(note, Note):
                out.append(("notes", f"bad note entry {note!r}"))
            elif note.tag not in TAG_CODES:
                out.append(("notes", f"note tag {note.tag!r} unknown"))
            elif not isinstance(note.text, str) or not note.text.strip():
                out.append(("notes", "note text must be non-empty"))
    return out


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

class RecordParseError(ValueError):
    """Raised when the record payload is not well-formed JSON."""


class RecordSchemaError(ValueError):
    """Raised for unknown or ill-typed keys; `.problems` lists (key, message)."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = list(problems)
        detail = "; ".join(f"{key}: {msg}" for key, msg in self.problems)
        super().__init__(f"record schema error: {detail}")


def _value_to_json(spec: FieldSpec, value: Any) -> Any:
    if value is NOT_MENTIONED:
        return NOT_MENTIONED_TEXT
    if spec.kind == "age":
        return value
    if spec.kind in ("sex", "removal", "finding", "preservation3", "preservation2",
                     "monitor", "drain"):
        return value.value
    if spec.kind == "laterality_list":
        return [item.value for item in value]
    if spec.kind == "size_list":
        return list(value)
    if spec.kind == "text":
        return value
    if spec.kind == "resection":
        return value.json_value()
    raise AssertionError(f"unhandled kind {spec.kind}")


def record_to_json(record: OperationRecord, indent: int | None = None) -> str:
    """Serialize to the canonical 22-key JSON object (plus "Notes").

    Deterministic: fixed key order, fixed value spellings, UTF-8 friendly.
    """
    obj: dict[str, Any] = {}
    for spec in RECORD_FIELDS:
        obj[spec.key] = _value_to_json(spec, getattr(record, spec.name))
    notes = []
    for note in record.notes:
        entry: dict[str, Any] = {"tag": note.tag, "text": note.text}
        if note.flag is not None:
            entry["flag"] = note.flag
        notes.append(entry)
    obj[NOTES_KEY] = notes
    return json.dumps(obj, ensure_ascii=False, indent=indent)


def _parse_enum(enum_cls: type, raw: Any, key: str, problems: list) -> Any:
    if not isinstance(raw, str):
        problems.append((key, f"expected string, got {type(raw).__name__}"))
        return NOT_MENTIONED
    folded = raw.strip().casefold()
    for member in enum_cls:
        if member.value.casefold() == folded:
            return member
    problems.append((key, f"unrecognized value {raw!r}"))
    return NOT_MENTIONED


def _value_from_json(spec: FieldSpec, raw: Any, problems: list) -> Any:
    if isinstance(raw, str) and raw.strip().casefold() == NOT_MENTIONED_TEXT:
        return NOT_MENTIONED
    key = spec.key
    if spec.kind == "age":
        if not isinstance(raw, int) or isinstance(raw, bool):
            problems.append((key, f"expected integer, got {raw!r}"))
            return NOT_MENTIONED
        return raw
    if spec.kind == "sex":
        return _parse_enum(Sex, raw, key, problems)
    if spec.kind == "laterality_list":
        if not isinstance(raw, list):
            problems.append((key, f"expected list, got {type(raw).__name__}"))
            return NOT_MENTIONED
        items = [_parse_enum(Laterality, item, key, problems) for item in raw]
        return tuple(i for i in items if i is not NOT_MENTIONED)
    if spec.kind == "size_list":
        if not isinstance(raw, list):
            problems.append((key, f"expected list, got {type(raw).__name__}"))
            return NOT_MENTIONED
        for item in raw:
            if not _is_number(item):
                problems.append((key, f"bad size entry {item!r}"))
                return NOT_MENTIONED
        return tuple(float(item) if isinstance(item, float) else item for item in raw)
    if spec.kind == "text":
        if not isinstance(raw, str):
            problems.append((key, f"expected string, got {type(raw).__name__}"))
            return NOT_MENTIONED
        return raw
    if spec.kind == "resection":
        if not isinstance(raw, str) or not raw.strip():
            problems.append((key, f"expected non-empty string, got {raw!r}"))
            return NOT_MENTIONED
        return ResectionRange.from_text(raw)
    if spec.kind == "removal":
        return _parse_enum(RemovalStatus, raw, key, problems)
    if spec.kind == "finding":
        return _parse_enum(Finding, raw, key, problems)
    if spec.kind in ("preservation3", "preservation2"):
        return _parse_enum(Preservation, raw, key, problems)
    if spec.kind == "monitor":
        return _parse_enum(MonitorUse, raw, key, problems)
    if spec.kind == "drain":
        return _parse_enum(DrainStatus, raw, key, problems)
    raise AssertionError(f"unhandled kind {spec.kind}")


def _build_key_lookup() -> dict[str, str]:
    lookup: dict[str, str] = {}
    for spec in RECORD_FIELDS:
        lookup[spec.key.casefold()] = spec.key
    for alias, canonical in KEY_ALIASES.items():
        lookup[alias.casefold()] = canonical
    return lookup


_KEY_LOOKUP = _build_key_lookup()
_FIELD_BY_KEY = {spec.key: spec for spec in RECORD_FIELDS}


def record_from_json(text: str) -> OperationRecord:
    """Parse a record object. Keys absent or "not mentioned" become NOT_MENTIONED.

    Raises RecordParseError on malformed JSON and RecordSchemaError listing
    every unknown or ill-typed key.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecordParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise RecordParseError("record payload must be a JSON object")

    problems: list[tuple[str, str]] = []
    values: dict[str, Any] = {}
    notes: list[Note] = []
    seen: set[str] = set()
    for raw_key, raw_value in obj.items():
        canonical = _KEY_LOOKUP.get(str(raw_key).casefold())
        if canonical is None:
            if str(raw_key).casefold() == NOTES_KEY.casefold():
                canonical = NOTES_KEY
            else:
                problems.append((str(raw_key), "unknown key"))
                continue
        if canonical in seen:
            problems.append((str(raw_key), "duplicate key"))
            continue
        seen.add(canonical)
        if canonical == NOTES_KEY:
            if not isinstance(raw_value, list):
                problems.append((NOTES_KEY, "expected a list"))
                continue
            for entry in raw_value:
                if (not isinstance(entry, dict) or "tag" not in entry or "text" not in entry
                        or entry["tag"] not in TAG_CODES or not isinstance(entry["text"], str)):
                    problems.append((NOTES_KEY, f"bad note entry {entry!r}"))
                    continue
                notes.append(Note(entry["tag"], entry["text"], entry.get("flag")))
            continue
        spec = _FIELD_BY_KEY[canonical]
        values[spec.name] = _value_from_json(spec, raw_value, problems)

    if problems:
        raise RecordSchemaError(problems)
    return OperationRecord(notes=tuple(notes), **values)


# ---------------------------------------------------------------------------
# Gold documents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GoldDocument:
    """An annotated narrative: transcript, gold spans, and the gold record."""

    transcript: Transcript
    gold_spans: tuple[EntitySpan, ...]
    gold_record: OperationRecord

    def __post_init__(self) -> None:
        if isinstance(self.gold_spans, list):
            object.__setattr__(self, "gold_spans", tuple(self.gold_spans))
        check_spans(self.gold_spans, self.transcript.text)


def gold_to_json(doc: GoldDocument) -> str:
    """One JSONL line per document, spans in standoff form."""
    obj = {
        "id": doc.transcript.id,
        "text": doc.transcript.text,
        "language_mode": doc.transcript.language_mode.value,
        "source": doc.transcript.source,
        "created_at": doc.transcript.created_at.isoformat(),
        "spans": [{"tag": s.tag, "start": s.start, "end": s.end} for s in doc.gold_spans],
        "record": json.loads(record_to_json(doc.gold_record)),
    }
    return json.dumps(obj, ensure_ascii=False)


def gold_from_json(line: str) -> GoldDocument:
    obj = json.loads(line)
    transcript = Transcript(
        id=obj["id"],
        text=obj["text"],
        language_mode=LanguageMode(obj.get("language_mode", "monolingual")),
        source=obj.get("source", ""),
        created_at=datetime.fromisoformat(obj["created_at"]) if obj.get("created_at")
        else _utc_now(),
    )
    spans = tuple(
        EntitySpan(s["start"], s["end"], s["tag"], obj["text"][s["start"]:s["end"]])
        for s in obj["spans"]
    )
    record = record_from_json(json.dumps(obj["record"]))
    return GoldDocument(transcript, spans, record)


def record_fields(record: OperationRecord) -> dict[str, Any]:
    """The 22 classed values keyed by field name (no notes, no audit)."""
    return {spec.name: getattr(record, spec.name) for spec in RECORD_FIELDS}


def replace_record(record: OperationRecord, **changes: Any) -> OperationRecord:
    from dataclasses import replace as _replace
    return _replace(record, **changes)
