import re

import pytest

from thyrostruct.backends import rule_tag
from thyrostruct.corpus import (
    PROFILE_PRESETS,
    GeneratorProfile,
    NoiseProfile,
    generate,
    load_corpus,
    save_corpus,
    split,
)
from thyrostruct.model import (
    NOT_MENTIONED,
    LanguageMode,
    RECORD_FIELDS,
    RemovalStatus,
    TAG_CODES,
    check_spans,
    validate_record,
)

_SENTENCE_END = re.compile(r"\.(?= |$)")


def test_profile_validation():
    with pytest.raises(ValueError):
        GeneratorProfile(n_documents=0)
    with pytest.raises(ValueError):
        GeneratorProfile(class_coverage={"nope": 0.5})
    with pytest.raises(ValueError):
        GeneratorProfile(class_coverage={"age": 1.5})
    with pytest.raises(ValueError):
        NoiseProfile(synonym_swap=-0.1)


def test_single_document_contract(structurer):
    (doc,) = generate(GeneratorProfile(seed=3, n_documents=1))
    check_spans(doc.gold_spans, doc.transcript.text)
    assert validate_record(doc.gold_record) == []
    assert structurer.structure(doc.gold_spans, doc.transcript) == doc.gold_record
    assert 6 <= len(_SENTENCE_END.findall(doc.transcript.text)) <= 8


def test_generation_is_deterministic():
    profile = GeneratorProfile(seed=11, n_documents=40,
                               noise=NoiseProfile(0.2, 0.2, 0.2, 0.2))
    first = generate(profile)
    second = generate(profile)
    assert [d.transcript.text for d in first] == [d.transcript.text for d in second]
    assert [d.gold_spans for d in first] == [d.gold_spans for d in second]
    assert [d.gold_record for d in first] == [d.gold_record for d in second]


def test_different_seeds_differ():
    a = generate(GeneratorProfile(seed=1, n_documents=5))
    b = generate(GeneratorProfile(seed=2, n_documents=5))
    assert [d.transcript.text for d in a] != [d.transcript.text for d in b]


def test_rule_tagger_recovers_gold_spans_exactly(pack):
    docs = generate(GeneratorProfile(seed=99, n_documents=150,
                                     noise=NoiseProfile(0.25, 0.25, 0.25, 0.25)))
    for doc in docs:
        assert rule_tag(doc.transcript, pack) == list(doc.gold_spans), doc.transcript.text


def test_sentence_count_always_6_to_8():
    docs = generate(GeneratorProfile(
        seed=5, n_documents=120,
        noise=NoiseProfile(0.3, 0.3, 0.3, 0.3),
        class_coverage={spec.name: 0.4 for spec in RECORD_FIELDS},
    ))
    for doc in docs:
        n = len(_SENTENCE_END.findall(doc.transcript.text))
        assert 6 <= n <= 8, doc.transcript.text


def test_negated_dissection_noise_maps_to_not_performed():
    docs = generate(GeneratorProfile(seed=21, n_documents=120,
                                     noise=NoiseProfile(0, 0, 0.5, 0)))
    negated = [d for d in docs
               if "lymph node dissection was not performed" in d.transcript.text.lower()]
    assert len(negated) > 20
    for doc in negated:
        assert doc.gold_record.lymph_node_removal is RemovalStatus.NOT_PERFORMED


def test_descriptor_loss_noise_drops_enlargement():
    lossless = generate(GeneratorProfile(seed=77, n_documents=60))
    lossy = generate(GeneratorProfile(seed=77, n_documents=60,
                                      noise=NoiseProfile(0, 1.0, 0, 0)))
    assert all(d.gold_record.lymph_node_enlargement is NOT_MENTIONED for d in lossy)
    assert any(d.gold_record.lymph_node_enlargement is not NOT_MENTIONED for d in lossless)


def test_synonym_swap_noise_uses_combined_phrase():
    docs = generate(GeneratorProfile(seed=13, n_documents=200,
                                     noise=NoiseProfile(0, 0, 0, 1.0)))
    swapped = [d for d in docs if "open total thyroidectomy" in d.transcript.text]
    assert len(swapped) > 10
    for doc in swapped:
        assert doc.gold_record.surgery_method == "open total thyroidectomy"
        assert "skin incision" not in doc.transcript.text


def test_transliteration_noise_sets_mixed_mode():
    docs = generate(GeneratorProfile(seed=17, n_documents=200,
                                     noise=NoiseProfile(1.0, 0, 0, 0)))
    mixed = [d for d in docs if d.transcript.language_mode is LanguageMode.MIXED]
    assert len(mixed) > 30
    for doc in mixed:
        assert any(
            variant in doc.transcript.text
            for variant in ("PTC", "FTC", "MTC", "MNG")
        )


def test_statistical_coverage_all_tags_and_classes():
    docs = generate(GeneratorProfile(seed=200, n_documents=200))
    tags = {span.tag for doc in docs for span in doc.gold_spans}
    assert tags == set(TAG_CODES)
    for spec in RECORD_FIELDS:
        assert any(
            getattr(doc.gold_record, spec.name) is not NOT_MENTIONED for doc in docs
        ), spec.name


def test_presets_exist():
    assert PROFILE_PRESETS["ner-741"].n_documents == 741
    assert PROFILE_PRESETS["eval-65"].n_documents == 65


# ---------------------------------------------------------------------------
# split
# ---------------------------------------------------------------------------


def test_split_reference_sizes():
    docs = generate(GeneratorProfile(seed=1, n_documents=741))
    train, valid, test = split(docs, (0.8, 0.1, 0.1))
    assert (len(train), len(valid), len(test)) == (592, 74, 75)


def test_split_small_floor_rule():
    docs = generate(GeneratorProfile(seed=1, n_documents=10))
    train, valid, test = split(docs, (0.8, 0.1, 0.1))
    assert (len(train), len(valid), len(test)) == (8, 1, 1)


def test_split_all_train():
    docs = generate(GeneratorProfile(seed=1, n_documents=5))
    train, valid, test = split(docs, (1.0, 0.0, 0.0))
    assert (len(train), len(valid), len(test)) == (5, 0, 0)


def test_split_rejects_bad_inputs():
    docs = generate(GeneratorProfile(seed=1, n_documents=4))
    with pytest.raises(ValueError):
        split(docs, (0.5, 0.2, 0.2))
    with pytest.raises(ValueError):
        split(docs[:2], (0.8, 0.1, 0.1))
    with pytest.raises(ValueError):
        split(docs, (1.2, -0.1, -0.1))


def test_split_partitions_and_seed_determinism():
    docs = generate(GeneratorProfile(seed=4, n_documents=50))
    a = split(docs, (0.8, 0.1, 0.1), seed=9)
    b = split(docs, (0.8, 0.1, 0.1), seed=9)
    assert [d.transcript.id for part in a for d in part] == \
           [d.transcript.id for part in b for d in part]
    ids = [d.transcript.id for part in a for d in part]
    assert sorted(ids) == sorted(d.transcript.id for d in docs)
    shuffled = split(docs, (0.8, 0.1, 0.1), seed=10)
    assert [d.transcript.id for d in shuffled[0]] != [d.transcript.id for d in a[0]]


# ---------------------------------------------------------------------------
# disk layout
# ---------------------------------------------------------------------------


def test_save_load_round_trip(tmp_path):
    profile = GeneratorProfile(seed=31, n_documents=12,
                               noise=NoiseProfile(0.2, 0.2, 0.2, 0.2))
    docs = generate(profile)
    root = save_corpus(docs, tmp_path / "corpus", profile)
    assert (root / "manifest.json").exists()
    assert len(list((root / "transcripts").glob("*.txt"))) == 12
    assert len(list((root / "gold").glob("*.jsonl"))) == 12
    assert len(list((root / "records").glob("*.json"))) == 12
    loaded = load_corpus(root)
    assert [d.transcript.text for d in loaded] == [d.transcript.text for d in docs]
    assert [d.gold_spans for d in loaded] == [d.gold_spans for d in docs]
    assert [d.gold_record for d in loaded] == [d.gold_record for d in docs]


def test_save_twice_identical_bytes(tmp_path):
    profile = GeneratorProfile(seed=8, n_documents=5)
    a_root = save_corpus(generate(profile), tmp_path / "a", profile)
    b_root = save_corpus(generate(profile), tmp_path / "b", profile)
    for rel in ["manifest.json", "gold/doc-0000.jsonl", "records/doc-0000.json",
                "transcripts/doc-0000.txt"]:
        assert (a_root / rel).read_bytes() == (b_root / rel).read_bytes()
