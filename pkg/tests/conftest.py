from __future__ import annotations

import pytest

from thyrostruct.structurer import LanguagePack, MappingTable, Structurer

# ---------------------------------------------------------------------------
# Published reference scores, used to pin aggregation behavior.
# Per-tag (precision, recall, f1, support) for the 18 tags.
# ---------------------------------------------------------------------------

REFERENCE_TAG_SCORES: list[tuple[str, float, float, float, int]] = [
    ("PAT", 1.00, 1.00, 1.00, 592),
    ("TMR", 0.97, 1.00, 0.99, 567),
    ("ATM", 0.98, 0.98, 0.98, 282),
    ("DXN", 0.98, 0.98, 0.98, 651),
    ("LNT", 0.40, 0.67, 0.50, 31),
    ("SGM", 0.92, 0.94, 0.93, 787),
    ("LNR", 0.96, 0.97, 0.97, 545),
    ("ETI", 0.97, 0.98, 0.98, 513),
    ("LNE", 0.95, 0.97, 0.96, 438),
    ("NEM", 1.00, 1.00, 1.00, 537),
    ("RLN", 0.99, 1.00, 0.99, 704),
    ("SLN", 1.00, 0.92, 0.96, 117),
    ("PRT", 0.95, 0.98, 0.97, 724),
    ("RNS", 0.67, 1.00, 0.80, 11),
    ("COM", 0.97, 0.97, 0.97, 580),
    ("DNT", 0.97, 0.99, 0.98, 577),
    ("FZS", 0.95, 0.95, 0.95, 367),
    ("ETC", 0.46, 0.55, 0.50, 72),
]

REFERENCE_MACRO = (0.89, 0.94, 0.91)

# Per-class accuracy (%) for the four experiment settings, in canonical class
# order (the 22 record fields).
REFERENCE_CLASS_ACCURACY: dict[str, list[float]] = {
    "korean_koelectra": [
        100, 100, 100, 96.92, 98.46, 98.46, 100, 83.08, 100, 96.92, 100,
        98.46, 98.46, 98.46, 98.46, 98.46, 100, 95.38, 100, 100, 96.92, 98.46,
    ],
    "mixed_koelectra": [
        100, 100, 98.39, 98.39, 95.16, 66.13, 98.39, 72.58, 100, 98.39, 62.90,
        98.39, 96.77, 93.55, 93.55, 98.39, 98.39, 98.39, 98.39, 96.77, 98.39, 100,
    ],
    "korean_gpt4": [
        100, 100, 98.46, 100, 100, 100, 100, 98.46, 96.92, 100, 100,
        100, 98.46, 100, 100, 100, 100, 100, 100, 100, 100, 100,
    ],
    "mixed_gpt4": [
        100, 100, 100, 96.92, 83.08, 100, 98.46, 93.85, 100, 95.38, 61.54,
        100, 100, 98.46, 98.46, 100, 100, 100, 100, 100, 100, 100,
    ],
}

REFERENCE_MEAN_ACCURACY = {
    "korean_koelectra": 98.04,
    "mixed_koelectra": 93.70,
    "korean_gpt4": 99.65,
    "mixed_gpt4": 96.64,
}

# The worked upload example: a demographic phrase, total resection, bilateral
# dissection, incision method, diagnosis, and a drain statement.
SAMPLE_DOCUMENT = (
    "Case 33 A 50-year-old female patient underwent total thyroidectomy and "
    "bilateral central lymph node dissection using a skin incision for "
    "bilateral thyroid papillary cancer. A drain was inserted."
)

SAMPLE_STRUCTURED_OUTPUT = {
    "Age": 50,
    "Gender": "Female",
    "Tumor Location": ["Left", "Right"],
    "Tumor Size": [1.3, 1.1],
    "Drain Insertion": "Inserted",
}


@pytest.fixture(scope="session")
def pack() -> LanguagePack:
    return LanguagePack.load("en")


@pytest.fixture(scope="session")
def mapping() -> MappingTable:
    return MappingTable.load()


@pytest.fixture(scope="session")
def structurer(pack: LanguagePack, mapping: MappingTable) -> Structurer:
    return Structurer(pack=pack, mapping=mapping)
