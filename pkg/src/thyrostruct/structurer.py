"""Post-processing: tagged spans -> the 22-class operation record.

The bridge is data, not code: a mapping table says which classes each tag may
write and which parser reads the span surface, and a language pack supplies
the parser vocabularies and regexes. Everything here is total — a surface the
parsers cannot interpret lands in the record's notes instead of failing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from .model import (
    NOT_MENTIONED,
    AuditEntry,
    DrainStatus,
    EntitySpan,
    Finding,
    Laterality,
    MonitorUse,
    Note,
    OperationRecord,
    Preservation,
    RemovalStatus,
    ResectionRange,
    Sex,
    TAG_CODES,
    Transcript,
    check_spans,
    FIELD_NAMES,
)

# ---------------------------------------------------------------------------
# Language packs
# ---------------------------------------------------------------------------


def _read_pack_file(name_or_path: str) -> dict:
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    ref = resources.files("thyrostruct.packs") / f"{name_or_path}.json"
    try:
        return json.loads(ref.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FileNotFoundError(f"language pack {name_or_path!r} not found") from None


def _alternation(phrases: Iterable[str]) -> str:
    ordered = sorted(set(phrases), key=len, reverse=True)
    return "|".join(re.escape(p) for p in ordered)


@dataclass(frozen=True)
class TagPattern:
    tag: str
    regex: re.Pattern


class LanguagePack:
    """Per-language resource bundle: tagger patterns plus parser vocabularies."""

    def __init__(self, data: dict):
        self.name: str = data["name"]
        self.negators: list[str] = list(data["negators"])
        self.not_identified_cues: list[str] = list(data["not_identified_cues"])
        self.vocab: dict[str, Any] = dict(data["vocab"])
        self.patterns: list[TagPattern] = []
        for entry in data["patterns"]:
            if entry["tag"] not in TAG_CODES:
                raise ValueError(f"pattern for unknown tag {entry['tag']!r}")
            regex = self._expand_macros(entry["regex"])
            self.patterns.append(TagPattern(entry["tag"], re.compile(regex, re.IGNORECASE)))

    @classmethod
    def load(cls, name_or_path: str = "en") -> "LanguagePack":
        return cls(_read_pack_file(name_or_path))

    # macro placeholders in pattern strings expand to escaped alternations of
    # the corresponding vocab lists, longest phrase first
    def _expand_macros(self, regex: str) -> str:
        def sub(match: re.Match) -> str:
            key = match.group(1)
            return "(?:" + _alternation(self._macro_phrases(key)) + ")"

        return re.sub(r"\{(\w+)\}", sub, regex)

    def _macro_phrases(self, key: str) -> list[str]:
        if key == "diagnoses":
            phrases = list(self.vocab["diagnoses"])
            phrases += list(self.vocab.get("diagnosis_variants", {}).values())
            return phrases
        if key == "sgm_surfaces":
            phrases = list(self.vocab["resection_surfaces"].keys())
            phrases += list(self.vocab["methods"])
            phrases += list(self.vocab.get("method_variants", {}).values())
            return phrases
        value = self.vocab.get(key)
        if not isinstance(value, list):
            raise ValueError(f"unknown pattern macro {{{key}}}")
        return list(value)

    def method_surfaces(self) -> list[str]:
        phrases = list(self.vocab["methods"])
        phrases += list(self.vocab.get("method_variants", {}).values())
        phrases += list(self.vocab.get("combined_method_resection", []))
        return phrases


DEFAULT_PACK = "en"


# ---------------------------------------------------------------------------
# Mapping table
# ---------------------------------------------------------------------------

#: The required tag -> class targets; the loaded table must match exactly.
EXPECTED_TARGETS: dict[str, set[str]] = {
    "PAT": {"age", "sex"},
    "TMR": {"tumor_location", "tumor_size"},
    "ATM": {"tumor_location", "tumor_size"},
    "DXN": {"diagnosis_name"},
    "SGM": {"surgery_method", "thyroid_resection_range"},
    "LNR": {"lymph_node_removal"},
    "ETI": {"capsular_invasion", "extrathyroidal_invasion"},
    "LNE": {"lymph_node_enlargement"},
    "NEM": {"neural_monitor_use"},
    "RLN": {"rln_right", "rln_left"},
    "SLN": {"sln_right", "sln_left"},
    "PRT": {
        "parathyroid_upper_right",
        "parathyroid_lower_right",
        "parathyroid_upper_left",
        "parathyroid_lower_left",
    },
    "COM": {"bleeding_on_cleanup"},
    "DNT": {"drain_insertion"},
    "FZS": set(),
    "LNT": set(),
    "RNS": set(),
    "ETC": set(),
}


@dataclass(frozen=True)
class MappingRow:
    tag: str
    targets: tuple[str, ...]
    parser: str


class MappingTable:
    """Loads and validates the tag->class bridge."""

    def __init__(self, rows: list[MappingRow]):
        self.rows = rows
        self.by_tag = {row.tag: row for row in rows}
        self._validate()

    @classmethod
    def load(cls, path: str | Path | None = None) -> "MappingTable":
        if path is None:
            ref = resources.files("thyrostruct.packs") / "mapping.json"
            data = json.loads(ref.read_text(encoding="utf-8"))
        else:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        rows = [MappingRow(r["tag"], tuple(r["targets"]), r["parser"]) for r in data["rows"]]
        return cls(rows)

    def _validate(self) -> None:
        tags = [row.tag for row in self.rows]
        if sorted(tags) != sorted(TAG_CODES):
            raise ValueError("mapping table must contain every tag exactly once")
        for row in self.rows:
            expected = EXPECTED_TARGETS[row.tag]
            if set(row.targets) != expected:
                raise ValueError(f"tag {row.tag} targets {set(row.targets)} != {expected}")
            for target in row.targets:
                if target not in FIELD_NAMES:
                    raise ValueError(f"unknown target class {target!r}")
        covered = {t for row in self.rows for t in row.targets}
        missing = set(FIELD_NAMES) - covered
        if missing:
            raise ValueError(f"classes never targeted: {sorted(missing)}")


# ---------------------------------------------------------------------------
# Surface parsers
# ---------------------------------------------------------------------------

_AGE_RE = re.compile(r"\b(\d{1,3})[- ]year[- ]old\b", re.IGNORECASE)
_SIZE_RE = re.compile(r"\b(\d+(?:\.\d+)?)\s*(cm|mm)\b", re.IGNORECASE)


def _word_positions(surface: str, words: Iterable[str]) -> list[tuple[int, str]]:
    hits = []
    for word in words:
        for m in re.finditer(r"\b" + re.escape(word) + r"\b", surface, re.IGNORECASE):
            hits.append((m.start(), word))
    hits.sort()
    return hits


def _has_word(surface: str, words: Iterable[str]) -> bool:
    return bool(_word_positions(surface, words))


def parse_demographics(surface: str, pack: LanguagePack) -> tuple[int | None, Sex | None]:
    """Age in years and sex, either possibly absent from the surface."""
    if not surface.strip():
        raise ValueError("empty surface")
    age = None
    m = _AGE_RE.search(surface)
    if m:
        age = int(m.group(1))
    sex = None
    for value, words in pack.vocab["sex_words"].items():
        if _has_word(surface, words):
            sex = Sex(value)
            break
    return age, sex


def parse_size(surface: str) -> float | None:
    """First size mention in centimeters; mm values are divided by 10."""
    if not surface.strip():
        raise ValueError("empty surface")
    m = _SIZE_RE.search(surface)
    if not m:
        return None
    value = float(m.group(1))
    if m.group(2).lower() == "mm":
        value = value / 10.0
    return value


def parse_laterality(surface: str, pack: LanguagePack) -> set[Laterality]:
    """All sides named on the surface; bilateral words mean both lobes."""
    if not surface.strip():
        raise ValueError("empty surface")
    found: set[Laterality] = set()
    if _has_word(surface, pack.vocab["bilateral_words"]):
        found.update({Laterality.LEFT, Laterality.RIGHT})
    for value, words in pack.vocab["laterality_words"].items():
        if _has_word(surface, words):
            found.add(Laterality(value))
    return found


def _has_negator(surface: str, pack: LanguagePack) -> bool:
    return _has_word(surface, pack.negators)


def _has_not_identified(surface: str, pack: LanguagePack) -> bool:
    low = surface.casefold()
    return any(cue in low for cue in pack.not_identified_cues)


def parse_status(surface: str, vocabulary: dict[str, Any]) -> Any:
    """Generic negation-aware status resolver.

    `vocabulary` keys: stems (words that must appear), positive / negative
    (values to return), optional not_identified value with ni_cues, negators,
    and optional absent_words that force the negative reading.
    """
    if not surface.strip():
        raise ValueError("empty surface")
    low = surface.casefold()
    if not any(stem in low for stem in vocabulary["stems"]):
        return None
    ni_value = vocabulary.get("not_identified")
    if ni_value is not None and any(cue in low for cue in vocabulary.get("ni_cues", [])):
        return ni_value
    if _has_word(surface, vocabulary.get("negators", [])):
        return vocabulary["negative"]
    if _has_word(surface, vocabulary.get("absent_words", [])):
        return vocabulary["negative"]
    return vocabulary["positive"]


# ---------------------------------------------------------------------------
# Conflict resolution
# ---------------------------------------------------------------------------

#: Classes that accumulate in document order instead of last-mention-wins.
LIST_FIELDS = ("tumor_location", "tumor_size")


@dataclass(frozen=True)
class Write:
    field: str
    value: Any
    span: EntitySpan | None = None


def resolve_conflicts(
    writes: Iterable[Write], notes: Iterable[Note] = ()
) -> OperationRecord:
    """Fold field writes into a record.

    Scalar classes take the last mention in document order (the write order),
    with every overridden write kept in the audit trail; list classes append.
    Misaligned tumor lists are trimmed to their common length and the
    leftovers audited, so the result is always schema-valid.
    """
    scalars: dict[str, Write] = {}
    lists: dict[str, list[Write]] = {name: [] for name in LIST_FIELDS}
    audit: list[AuditEntry] = []
    for write in writes:
        if write.field in LIST_FIELDS:
            lists[write.field].append(write)
        else:
            prev = scalars.get(write.field)
            if prev is not None:
                audit.append(AuditEntry(prev.field, prev.value, prev.span,
                                        "overridden by later mention"))
            scalars[write.field] = write

    loc_writes = lists["tumor_location"]
    size_writes = lists["tumor_size"]
    if loc_writes and size_writes and len(loc_writes) != len(size_writes):
        keep = min(len(loc_writes), len(size_writes))
        for extra in loc_writes[keep:] + size_writes[keep:]:
            audit.append(AuditEntry(extra.field, extra.value, extra.span,
                                    "dropped to keep location/size lists aligned"))
        loc_writes = loc_writes[:keep]
        size_writes = size_writes[:keep]

    values: dict[str, Any] = {name: w.value for name, w in scalars.items()}
    if loc_writes:
        values["tumor_location"] = tuple(w.value for w in loc_writes)
    if size_writes:
        values["tumor_size"] = tuple(w.value for w in size_writes)
    return OperationRecord(notes=tuple(notes), audit=tuple(audit), **values)


# ---------------------------------------------------------------------------
# The structurer
# ---------------------------------------------------------------------------

class Structurer:
    """Maps entity spans onto the operation record via the mapping table.

    Total on valid spans: surfaces the parsers cannot read become notes
    flagged "unparsed". When `postop_overrides_preop` is set (default), any
    post-surgery tumor measurement supersedes the pre-surgery one.
    """

    def __init__(
        self,
        pack: LanguagePack | None = None,
        mapping: MappingTable | None = None,
        postop_overrides_preop: bool = True,
    ):
        self.pack = pack or LanguagePack.load(DEFAULT_PACK)
        self.mapping = mapping or MappingTable.load()
        self.postop_overrides_preop = postop_overrides_preop

    # -- per-tag parsers ---------------------------------------------------

    def _parse_pat(self, span: EntitySpan) -> tuple[list[Write], list[Note]]:
        age, sex = parse_demographics(span.surface, self.pack)
        writes = []
        if age is not None:
            writes.append(Write("age", age, span))
        if sex is not None:
            writes.append(Write("sex", sex, span))
        if not writes:
            return [], [Note(span.tag, span.surface, "unparsed")]
        return writes, []

    def _parse_tumor(self, span: EntitySpan) -> tuple[list[Write], list[Note]]:
        pack = self.pack
        sizes = [
            (m.start(), float(m.group(1)) / (10.0 if m.group(2).lower() == "mm" else 1.0))
            for m in _SIZE_RE.finditer(span.surface)
        ]
        side_words = {
            word: Laterality(value)
            for value, words in pack.vocab["laterality_words"].items()
            for word in words
        }
        locs: list[tuple[int, list[Laterality]]] = []
        for pos, word in _word_positions(span.surface, side_words.keys()):
            locs.append((pos, [side_words[word]]))
        for pos, _ in _word_positions(span.surface, pack.vocab["bilateral_words"]):
            locs.append((pos, [Laterality.LEFT, Laterality.RIGHT]))
        locs.sort(key=lambda item: item[0])
        locations = [lat for _, group in locs for lat in group]

        writes: list[Write] = []
        for lat in locations:
            writes.append(Write("tumor_location", lat, span))
        for _, size in sizes:
            writes.append(Write("tumor_size", size, span))
        if not writes:
            return [], [Note(span.tag, span.surface, "unparsed")]
        return writes, []

    def _parse_surgery(self, span: EntitySpan) -> tuple[list[Write], list[Note]]:
        surface = span.surface
        low = surface.casefold()
        writes: list[Write] = []
        resection_surfaces = self.pack.vocab["resection_surfaces"]
        matched_resection = None
        for phrase in sorted(resection_surfaces, key=len, reverse=True):
            if phrase in low:
                matched_resection = phrase
                break
        if matched_resection:
            canonical = resection_surfaces[matched_resection]
            writes.append(Write(
                "thyroid_resection_range", ResectionRange.from_text(canonical), span,
            ))
        method = None
        for phrase in sorted(self.pack.method_surfaces(), key=len, reverse=True):
            if phrase.casefold() in low:
                method = phrase
                break
        if method is not None:
            writes.append(Write("surgery_method", method, span))
        if not writes:
            return [], [Note(span.tag, span.surface, "unparsed")]
        return writes, []

    def _status_writes(
        self, span: EntitySpan, field_name: str, vocabulary: dict[str, Any]
    ) -> tuple[list[Write], list[Note]]:
        value = parse_status(span.surface, vocabulary)
        if value is None:
            return [], [Note(span.tag, span.surface, "unparsed")]
        return [Write(field_name, value, span)], []

    def _parse_removal(self, span: EntitySpan) -> tuple[list[Write], list[Note]]:
        return self._status_writes(span, "lymph_node_removal", {
            "stems": ["dissection", "removal"],
            "positive": RemovalStatus.PERFORMED,
            "negative": RemovalStatus.NOT_PERFORMED,
            "negators": self.pack.negators,
        })

    def _parse_invasion(self, span: EntitySpan) -> tuple[list[Write], list[Note]]:
        low = span.surface.casefold()
        writes: list[Write] = []
        negated = _has_negator(span.surface, self.pack) or _has_word(span.surface, ["absent"])
        value = Finding.ABSENT if negated else Finding.PRESENT
        if "capsular" in low:
            writes.append(Write("capsular_invasion", value, span))
        if "extrathyroidal" in low:
            writes.append(Write("extrathyroidal_invasion", value, span))
        if not writes:
            return [], [Note(span.tag, span.surface, "unparsed")]
        return writes, []

    def _parse_enlargement(self, span: EntitySpan) -> tuple[list[Write], list[Note]]:
        return self._status_writes(span, "lymph_node_enlargement", {
            "stems": ["enlarg"],
            "positive": Finding.PRESENT,
            "negative": Finding.ABSENT,
            "negators": self.pack.negators,
        })

    def _parse_monitor(self, span: EntitySpan) -> tuple[list[Write], list[Note]]:
        return self._status_writes(span, "neural_monitor_use", {
            "stems": ["monitor"],
            "positive": MonitorUse.USED,
            "negative": MonitorUse.NOT_USED,
            "negators": self.pack.negators,
        })

    def _parse_nerve_side(
        self, span: EntitySpan, targets: tuple[str, ...]
    ) -> tuple[list[Write], list[Note]]:
        right_field, left_field = targets
        allow_ni = span.tag == "SLN"
        vocabulary = {
            "stems": ["nerve"],
            "positive": Preservation.PRESERVED,
            "negative": Preservation.NOT_PRESERVED,
            "negators": self.pack.negators,
        }
        if allow_ni:
            vocabulary["not_identified"] = Preservation.NOT_IDENTIFIED
            vocabulary["ni_cues"] = self.pack.not_identified_cues
        elif _has_not_identified(span.surface, self.pack):
            # the record has no "not identified" state for this nerve
            return [], [Note(span.tag, span.surface, "unparsed")]
        status = parse_status(span.surface, vocabulary)
        if status is None:
            return [], [Note(span.tag, span.surface, "unparsed")]
        sides = parse_laterality(span.surface, self.pack)
        # a side-less nerve mention cannot be filed on either field
        if not sides or Laterality.ISTHMUS in sides:
            return [], [Note(span.tag, span.surface, "unparsed")]
        writes = []
        if Laterality.RIGHT in sides:
            writes.append(Write(right_field, status, span))
        if Laterality.LEFT in sides:
            writes.append(Write(left_field, status, span))
        return writes, []

    _PRT_POSITIONS = (
        ("upper right", "parathyroid_upper_right"),
        ("lower right", "parathyroid_lower_right"),
        ("upper left", "parathyroid_upper_left"),
        ("lower left", "parathyroid_lower_left"),
    )

    def _parse_parathyroid(self, span: EntitySpan) -> tuple[list[Write], list[Note]]:
        status = parse_status(span.surface, {
            "stems": ["parathyroid"],
            "positive": Preservation.PRESERVED,
            "negative": Preservation.NOT_PRESERVED,
            "negators": self.pack.negators,
            "not_identified": Preservation.NOT_IDENTIFIED,
            "ni_cues": self.pack.not_identified_cues,
        })
        if status is None:
            return [], [Note(span.tag, span.surface, "unparsed")]
        low = span.surface.casefold()
        fields = [name for phrase, name in self._PRT_POSITIONS if phrase in low]
        if not fields:
            if "all four" in low or "all 4" in low:
                fields = [name for _, name in self._PRT_POSITIONS]
            else:
                return [], [Note(span.tag, span.surface, "unparsed")]
        return [Write(name, status, span) for name in fields], []

    def _parse_drain(self, span: EntitySpan) -> tuple[list[Write], list[Note]]:
        return self._status_writes(span, "drain_insertion", {
            "stems": ["drain"],
            "positive": DrainStatus.INSERTED,
            "negative": DrainStatus.NOT_INSERTED,
            "negators": self.pack.negators,
        })

    # -- main entry point ----------------------------------------------------

    def structure(
        self, spans: Iterable[EntitySpan], transcript: Transcript
    ) -> OperationRecord:
        """Build the record. Classes never written stay NOT_MENTIONED."""
        spans = sorted(spans)
        check_spans(spans, transcript.text)

        writes: list[tuple[str, Write]] = []  # (source tag, write)
        notes: list[Note] = []
        for span in spans:
            row = self.mapping.by_tag[span.tag]
            if row.parser == "note":
                notes.append(Note(span.tag, span.surface))
                continue
            if row.parser == "verbatim":
                span_writes = [Write(row.targets[0], span.surface, span)]
                span_notes: list[Note] = []
            elif row.parser == "demographics":
                span_writes, span_notes = self._parse_pat(span)
            elif row.parser == "tumor":
                span_writes, span_notes = self._parse_tumor(span)
            elif row.parser == "surgery":
                span_writes, span_notes = self._parse_surgery(span)
            elif row.parser == "removal":
                span_writes, span_notes = self._parse_removal(span)
            elif row.parser == "invasion":
                span_writes, span_notes = self._parse_invasion(span)
            elif row.parser == "enlargement":
                span_writes, span_notes = self._parse_enlargement(span)
            elif row.parser == "monitor":
                span_writes, span_notes = self._parse_monitor(span)
            elif row.parser == "nerve_side":
                span_writes, span_notes = self._parse_nerve_side(span, row.targets)
            elif row.parser == "parathyroid":
                span_writes, span_notes = self._parse_parathyroid(span)
            elif row.parser == "drain":
                span_writes, span_notes = self._parse_drain(span)
            else:
                raise ValueError(f"unknown parser {row.parser!r} for tag {span.tag}")
            writes.extend((span.tag, w) for w in span_writes)
            notes.extend(span_notes)

        audit_head: list[AuditEntry] = []
        if self.postop_overrides_preop:
            has_postop_tumor = any(
                tag == "ATM" and w.field in LIST_FIELDS for tag, w in writes
            )
            if has_postop_tumor:
                kept = []
                for tag, w in writes:
                    if tag == "TMR" and w.field in LIST_FIELDS:
                        audit_head.append(AuditEntry(
                            w.field, w.value, w.span,
                            "preoperative measurement overridden by postoperative",
                        ))
                    else:
                        kept.append((tag, w))
                writes = kept

        record = resolve_conflicts([w for _, w in writes], notes)
        if audit_head:
            record = OperationRecord(
                **{f: getattr(record, f) for f in FIELD_NAMES},
                notes=record.notes,
                audit=tuple(audit_head) + record.audit,
            )
        return record


def structure(
    spans: Iterable[EntitySpan],
    transcript: Transcript,
    pack: LanguagePack | None = None,
) -> OperationRecord:
    """One-shot convenience over a default Structurer."""
    return Structurer(pack=pack).structure(spans, transcript)
