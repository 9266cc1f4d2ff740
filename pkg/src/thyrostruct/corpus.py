"""Synthetic narrative corpus with gold spans and gold records.

Documents are 6-8 sentences assembled from the language pack's phrase
inventory, so the native rule tagger recognizes every fact the generator
writes. The gold record is derived by running the shared structurer over the
gold spans; generator and structurer can therefore never drift apart, and any
disagreement found later is a real bug in one of them.

Noise modes inject the documented failure shapes: resection-phrase synonym
swaps, negated dissection statements, dropped enlargement descriptors, and
mixed-language term substitution.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .model import (
    EntitySpan,
    FIELD_NAMES,
    GoldDocument,
    LanguageMode,
    Transcript,
    gold_from_json,
    gold_to_json,
    record_to_json,
)
from .structurer import LanguagePack, Structurer

# fixed timestamp so corpora serialize byte-identically across runs
_EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)

_FILLERS = (
    "The operative field was irrigated and closed in layers.",
    "The patient was transferred to the recovery room in stable condition.",
    "Standard perioperative antibiotics were administered.",
    "The patient remained hemodynamically stable throughout the procedure.",
    "The wound was closed over the strap muscles with subcuticular sutures.",
)


@dataclass(frozen=True)
class NoiseProfile:
    """Per-document trigger probabilities for the failure-shape injections."""

    transliteration_mix: float = 0.0
    descriptor_grouping_loss: float = 0.0
    negated_dissection: float = 0.0
    synonym_swap: float = 0.0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"noise probability {name} out of [0, 1]: {value}")


@dataclass(frozen=True)
class GeneratorProfile:
    seed: int = 0
    n_documents: int = 1
    language_pack: str = "en"
    noise: NoiseProfile = field(default_factory=NoiseProfile)
    #: field name -> inclusion probability; fields absent from the map are
    #: always included
    class_coverage: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_documents <= 0:
            raise ValueError("n_documents must be positive")
        for name, prob in self.class_coverage.items():
            if name not in FIELD_NAMES:
                raise ValueError(f"unknown record class {name!r} in class_coverage")
            if not (0.0 <= prob <= 1.0):
                raise ValueError(f"coverage probability for {name} out of [0, 1]")


#: Ready-made profiles mirroring the reference dataset shapes: a 741-document
#: annotation corpus and a 65-case evaluation set.
PROFILE_PRESETS: dict[str, GeneratorProfile] = {
    "ner-741": GeneratorProfile(seed=7, n_documents=741),
    "eval-65": GeneratorProfile(
        seed=65,
        n_documents=65,
        noise=NoiseProfile(
            transliteration_mix=0.15,
            descriptor_grouping_loss=0.1,
            negated_dissection=0.1,
            synonym_swap=0.15,
        ),
    ),
}


class _SentenceBuffer:
    """Accumulates document text while recording span offsets."""

    def __init__(self) -> None:
        self._parts: list[str] = []
        self._length = 0
        self.spans: list[EntitySpan] = []

    def add(self, text: str) -> None:
        self._parts.append(text)
        self._length += len(text)

    def add_span(self, tag: str, surface: str) -> None:
        start = self._length
        self.add(surface)
        self.spans.append(EntitySpan(start, start + len(surface), tag, surface))

    def text(self) -> str:
        return "".join(self._parts)


class _DocPlan:
    """All random choices for one document, drawn up front."""

    def __init__(self, rng: random.Random, profile: GeneratorProfile, pack: LanguagePack):
        cov = profile.class_coverage

        def on(name: str) -> bool:
            return rng.random() < cov.get(name, 1.0)

        noise = profile.noise
        self.noise_translit = rng.random() < noise.transliteration_mix
        self.noise_desc_loss = rng.random() < noise.descriptor_grouping_loss
        self.noise_negated = rng.random() < noise.negated_dissection
        self.noise_synonym = rng.random() < noise.synonym_swap

        self.age = rng.randint(19, 88) if on("age") else None
        self.sex_word = rng.choice(["female", "male"]) if on("sex") else None

        self.resection = (
            rng.choice(["total", "left", "right", "isthmus"])
            if on("thyroid_resection_range") else None
        )
        self.method = rng.choice(pack.vocab["methods"]) if on("surgery_method") else None
        # the synonym swap replaces "total thyroidectomy ... using a skin
        # incision" with the combined phrase
        self.synonym_applies = (
            self.noise_synonym and self.resection == "total" and self.method == "skin incision"
        )

        self.diagnosis = rng.choice(pack.vocab["diagnoses"]) if on("diagnosis_name") else None
        variants = pack.vocab.get("diagnosis_variants", {})
        self.translit_applies = (
            self.noise_translit and self.diagnosis in variants
        )
        if self.translit_applies:
            self.diagnosis = variants[self.diagnosis]

        self.lnr = None
        if on("lymph_node_removal"):
            self.lnr = "negated" if self.noise_negated else rng.choice(
                ["bilateral", "left", "right", "plain"]
            )

        lobe_pool = {
            "total": ["left", "right", "isthmus"],
            "left": ["left"],
            "right": ["right"],
            "isthmus": ["isthmus"],
            None: ["left", "right", "isthmus"],
        }[self.resection]
        want_loc = on("tumor_location")
        want_size = on("tumor_size")
        self.tumors: list[tuple[str | None, str | None]] = []
        if want_loc or want_size:
            n_tumors = rng.choice([1, 1, 2]) if (want_loc and want_size) else 1
            locs = rng.sample(lobe_pool, k=min(n_tumors, len(lobe_pool)))
            for loc in locs:
                size_text: str | None = None
                if want_size:
                    if rng.random() < 0.25:
                        size_text = f"{rng.randint(4, 45)} mm"
                    else:
                        size_text = f"{rng.randint(4, 45) / 10:.1f} cm"
                self.tumors.append((loc if want_loc else None, size_text))

        self.postop_tumor = (
            want_loc and want_size and rng.random() < 0.3
        )
        self.postop_loc = rng.choice(lobe_pool)
        self.postop_size = f"{rng.randint(4, 45) / 10:.1f} cm"

        self.capsular = rng.choice(["present", "absent"]) if on("capsular_invasion") else None
        self.extrathyroidal = (
            rng.choice(["present", "absent"]) if on("extrathyroidal_invasion") else None
        )
        self.enlargement = None
        if on("lymph_node_enlargement") and not self.noise_desc_loss:
            self.enlargement = rng.choice(["present", "absent"])

        self.monitor = rng.choice(["used", "not used"]) if on("neural_monitor_use") else None
        self.rln = {
            side: rng.choice(["preserved", "not preserved"])
            for side in ("right", "left") if on(f"rln_{side}")
        }
        self.sln = {
            side: rng.choice(["preserved", "preserved", "not preserved", "not identified"])
            for side in ("right", "left") if on(f"sln_{side}")
        }
        self.parathyroid = {
            pos: rng.choice(["preserved", "preserved", "not preserved", "not identified"])
            for pos in ("upper right", "lower right", "upper left", "lower left")
            if on(f"parathyroid_{pos.replace(' ', '_')}")
        }
        self.bleeding = (
            rng.choice(pack.vocab["bleeding_phrases"]) if on("bleeding_on_cleanup") else None
        )
        self.drain = None
        if on("drain_insertion"):
            self.drain = rng.choice(
                ["a drain was inserted", "a drain was not inserted", "no drain was inserted"]
            )

        self.fzs = rng.choice(pack.vocab["fzs_phrases"]) if rng.random() < 0.5 else None
        self.lnt = rng.choice(pack.vocab["lnt_phrases"]) if rng.random() < 0.25 else None
        self.rns = None
        if rng.random() < 0.35:
            self.rns = (
                f"the spinal accessory nerve was {rng.choice(['preserved', 'not preserved'])}"
                f" during {rng.choice(['left', 'right'])} lateral neck dissection"
            )
        self.etc = rng.choice(pack.vocab["etc_phrases"]) if rng.random() < 0.5 else None
        self.fillers = rng.sample(_FILLERS, k=len(_FILLERS))
        self.sln_confirm = rng.random() < 0.5


def _capitalize(text: str) -> str:
    return text[0].upper() + text[1:] if text else text


def _build_sentences(plan: _DocPlan, buf: _SentenceBuffer) -> int:
    filler_iter = iter(plan.fillers)
    count = 0

    def filler() -> None:
        nonlocal count
        buf.add(next(filler_iter))
        count += 1

    def end_sentence() -> None:
        nonlocal count
        buf.add(".")
        count += 1

    # 1: demographics, resection + method, dissection, diagnosis
    if plan.age is not None and plan.sex_word:
        buf.add("A ")
        buf.add_span("PAT", f"{plan.age}-year-old {plan.sex_word}")
    elif plan.age is not None:
        buf.add("A ")
        buf.add_span("PAT", f"{plan.age}-year-old")
    elif plan.sex_word:
        buf.add("A ")
        buf.add_span("PAT", plan.sex_word)
    else:
        buf.add("The")
    buf.add(" patient underwent ")
    resection_surface = {
        "total": "total thyroidectomy",
        "left": "left lobectomy",
        "right": "right lobectomy",
        "isthmus": "isthmusectomy",
    }
    if plan.synonym_applies:
        buf.add_span("SGM", "open total thyroidectomy")
    elif plan.resection:
        buf.add_span("SGM", resection_surface[plan.resection])
    else:
        buf.add("thyroid surgery")
    if plan.lnr and plan.lnr != "negated":
        buf.add(" and ")
        phrase = "central lymph node dissection"
        if plan.lnr in ("bilateral", "left", "right"):
            phrase = f"{plan.lnr} {phrase}"
        buf.add_span("LNR", phrase)
    if plan.method and not plan.synonym_applies:
        buf.add(" using a ")
        buf.add_span("SGM", plan.method)
    if plan.diagnosis:
        buf.add(" for ")
        buf.add_span("DXN", plan.diagnosis)
    if plan.lnr == "negated":
        buf.add(", and ")
        buf.add_span("LNR", "lymph node dissection was not performed")
    end_sentence()

    # 2: pre-surgery tumor
    if plan.tumors:
        buf.add(" Preoperative ultrasonography showed ")
        for i, (loc, size_text) in enumerate(plan.tumors):
            if i:
                buf.add(" and ")
            place = "in the isthmus" if loc == "isthmus" else f"in the {loc} lobe"
            if loc and size_text:
                buf.add_span("TMR", f"a tumor measuring {size_text} {place}")
            elif loc:
                buf.add_span("TMR", f"a tumor was seen {place}")
            else:
                buf.add_span("TMR", f"a tumor measuring {size_text} was seen")
        end_sentence()
    else:
        buf.add(" ")
        filler()

    # 3: invasion and node enlargement
    clauses: list[tuple[str | None, str]] = []
    if plan.capsular == "present":
        clauses.append(("ETI", "capsular invasion was present"))
    elif plan.capsular == "absent":
        clauses.append(("ETI", "no capsular invasion was seen"))
    if plan.extrathyroidal == "present":
        clauses.append(("ETI", "extrathyroidal extension was present"))
    elif plan.extrathyroidal == "absent":
        clauses.append(("ETI", "extrathyroidal extension was absent"))
    if plan.enlargement == "present":
        clauses.append(("LNE", "several enlarged lymph nodes were noted in the central compartment"))
    elif plan.enlargement == "absent":
        clauses.append(("LNE", "no lymph node enlargement was observed"))
    if clauses:
        buf.add(" On exploration, ")
        for i, (tag, clause) in enumerate(clauses):
            if i:
                buf.add(", and " if i == len(clauses) - 1 else ", ")
            buf.add_span(tag, clause)
        end_sentence()
    else:
        buf.add(" ")
        filler()

    # 4: neural monitor and nerves
    nerve_clauses: list[tuple[str, str]] = []
    if plan.rln.get("right") == plan.rln.get("left") == "preserved":
        nerve_clauses.append(("RLN", "both recurrent laryngeal nerves were identified and preserved"))
    else:
        for side in ("right", "left"):
            status = plan.rln.get(side)
            if status:
                nerve_clauses.append(
                    ("RLN", f"the {side} recurrent laryngeal nerve was {status}")
                )
    if plan.sln.get("right") == plan.sln.get("left") == "preserved" and not plan.sln_confirm:
        nerve_clauses.append(("SLN", "both superior laryngeal nerves were preserved"))
    else:
        for side in ("right", "left"):
            status = plan.sln.get(side)
            if status:
                if status == "preserved" and plan.sln_confirm:
                    status = "visually confirmed and preserved"
                nerve_clauses.append(
                    ("SLN", f"the {side} superior laryngeal nerve was {status}")
                )
    if plan.monitor == "used":
        buf.add(" Under ")
        buf.add_span("NEM", "neural monitoring")
        if nerve_clauses:
            buf.add(", ")
        else:
            buf.add(", the dissection proceeded without incident")
    elif plan.monitor == "not used":
        buf.add(" ")
        buf.add_span("NEM", "The neural monitor was not used")
        if nerve_clauses:
            buf.add("; ")
        else:
            buf.add(" during this procedure")
    elif nerve_clauses:
        buf.add(" During dissection, ")
    if nerve_clauses:
        for i, (tag, clause) in enumerate(nerve_clauses):
            if i:
                buf.add(", and " if i == len(nerve_clauses) - 1 else ", ")
            buf.add_span(tag, clause)
        end_sentence()
    elif plan.monitor:
        end_sentence()
    else:
        buf.add(" ")
        filler()

    # 5: parathyroid glands
    if plan.parathyroid:
        statuses = set(plan.parathyroid.values())
        buf.add(" ")
        if len(plan.parathyroid) == 4 and statuses == {"preserved"}:
            buf.add_span("PRT", "All four parathyroid glands were preserved in situ")
        else:
            for i, (pos, status) in enumerate(plan.parathyroid.items()):
                if i:
                    buf.add(", and " if i == len(plan.parathyroid) - 1 else ", ")
                clause = f"the {pos} parathyroid gland was {status}"
                buf.add_span("PRT", _capitalize(clause) if i == 0 else clause)
        end_sentence()
    else:
        buf.add(" ")
        filler()

    # 6: bleeding and drain
    if plan.bleeding and plan.drain:
        buf.add(" ")
        buf.add_span("COM", _capitalize(plan.bleeding))
        buf.add(", and ")
        buf.add_span("DNT", plan.drain)
        end_sentence()
    elif plan.bleeding:
        buf.add(" ")
        buf.add_span("COM", _capitalize(plan.bleeding))
        end_sentence()
    elif plan.drain:
        buf.add(" ")
        buf.add_span("DNT", _capitalize(plan.drain))
        end_sentence()
    else:
        buf.add(" ")
        filler()

    # 7 (optional): post-surgery specimen measurement
    if plan.postop_tumor:
        place = (
            "in the isthmus" if plan.postop_loc == "isthmus"
            else f"in the {plan.postop_loc} lobe"
        )
        buf.add(" The ")
        buf.add_span(
            "ATM", f"resected specimen showed a tumor measuring {plan.postop_size} {place}"
        )
        end_sentence()

    # 8 (optional): additional note-worthy findings
    note_clauses: list[tuple[str, str]] = []
    if plan.fzs:
        note_clauses.append(("FZS", plan.fzs))
    if plan.lnt:
        note_clauses.append(("LNT", plan.lnt))
    if plan.rns:
        note_clauses.append(("RNS", plan.rns))
    if plan.etc:
        note_clauses.append(("ETC", plan.etc))
    if note_clauses:
        buf.add(" Additionally, ")
        for i, (tag, clause) in enumerate(note_clauses):
            if i:
                buf.add("; ")
            buf.add_span(tag, clause)
        end_sentence()
    return count


def generate(profile: GeneratorProfile) -> list[GoldDocument]:
    """Generate `n_documents` gold documents, fully determined by the seed."""
    pack = LanguagePack.load(profile.language_pack)
    structurer = Structurer(pack=pack)
    documents: list[GoldDocument] = []
    for index in range(profile.n_documents):
        rng = random.Random(f"{profile.seed}:{index}")
        plan = _DocPlan(rng, profile, pack)
        buf = _SentenceBuffer()
        n_sentences = _build_sentences(plan, buf)
        assert 6 <= n_sentences <= 8, f"document has {n_sentences} sentences"
        mode = LanguageMode.MIXED if plan.translit_applies else LanguageMode.MONOLINGUAL
        transcript = Transcript(
            id=f"doc-{index:04d}",
            text=buf.text(),
            language_mode=mode,
            source=f"synthetic:{profile.language_pack}:seed={profile.seed}",
            created_at=_EPOCH,
        )
        record = structurer.structure(buf.spans, transcript)
        documents.append(GoldDocument(transcript, tuple(buf.spans), record))
    return documents


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


def split(
    documents: Sequence[GoldDocument],
    ratios: tuple[float, float, float],
    seed: int | None = None,
) -> tuple[list[GoldDocument], list[GoldDocument], list[GoldDocument]]:
    """Partition into train/valid/test.

    Sizes are floor(n*train), floor(n*valid), remainder. With a seed the
    documents are shuffled deterministically first; otherwise input order is
    kept.
    """
    train_r, valid_r, _ = ratios
    if any(r < 0 for r in ratios):
        raise ValueError("ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    n = len(documents)
    if n < 3:
        raise ValueError("need at least 3 documents to split")
    docs = list(documents)
    if seed is not None:
        random.Random(seed).shuffle(docs)
    n_train = math.floor(n * train_r + 1e-9)
    n_valid = math.floor(n * valid_r + 1e-9)
    return docs[:n_train], docs[n_train:n_train + n_valid], docs[n_train + n_valid:]


# ---------------------------------------------------------------------------
# On-disk corpus layout
# ---------------------------------------------------------------------------


def save_corpus(
    documents: Iterable[GoldDocument],
    out_dir: str | Path,
    profile: GeneratorProfile | None = None,
) -> Path:
    """Write transcripts/, gold/, records/ plus a manifest; returns the root."""
    root = Path(out_dir)
    for sub in ("transcripts", "gold", "records"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    ids = []
    for doc in documents:
        doc_id = doc.transcript.id
        ids.append(doc_id)
        (root / "transcripts" / f"{doc_id}.txt").write_text(
            doc.transcript.text, encoding="utf-8"
        )
        (root / "gold" / f"{doc_id}.jsonl").write_text(
            gold_to_json(doc) + "\n", encoding="utf-8"
        )
        (root / "records" / f"{doc_id}.json").write_text(
            record_to_json(doc.gold_record, indent=2) + "\n", encoding="utf-8"
        )
    manifest = {
        "schema_version": 1,
        "ids": ids,
        "profile": asdict(profile) if profile else None,
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return root


def load_corpus(corpus_dir: str | Path) -> list[GoldDocument]:
    root = Path(corpus_dir)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    documents = []
    for doc_id in manifest["ids"]:
        line = (root / "gold" / f"{doc_id}.jsonl").read_text(encoding="utf-8").strip()
        documents.append(gold_from_json(line))
    return documents
