"""Bridging token-level B/I/O labels and character-offset entity spans.

Any tokenizer can feed this module as long as it reports character offsets;
`tokenize` is the whitespace+punctuation baseline used by the native tagger
and the corpus tools.
"""

from __future__ import annotations

import re

from .model import EntitySpan, LabelSequence

# Decimals stay whole tokens so size mentions survive tokenization.
_TOKEN_RE = re.compile(r"\d+(?:\.\d+)?|\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[tuple[int, int]]:
    """Split into (start, end) offsets on whitespace and punctuation."""
    return [m.span() for m in _TOKEN_RE.finditer(text)]


def repair_labels(seq: LabelSequence) -> LabelSequence:
    """Rewrite any orphan I-X (no same-tag B-X/I-X directly before it) to B-X.

    Idempotent; output always decodes cleanly.
    """
    repaired: list[str] = []
    prev_tag: str | None = None
    for label in seq.labels:
        if label.startswith("I-"):
            tag = label[2:]
            if prev_tag != tag:
                label = "B-" + tag
            prev_tag = tag
        elif label.startswith("B-"):
            prev_tag = label[2:]
        else:
            prev_tag = None
        repaired.append(label)
    return LabelSequence(seq.tokens, tuple(repaired))


def decode_spans(seq: LabelSequence, text: str) -> list[EntitySpan]:
    """Turn maximal B-X (I-X)* runs into spans covering first-token start to
    last-token end. Input is repaired first, so malformed runs never fail."""
    seq = repair_labels(seq)
    spans: list[EntitySpan] = []
    run_tag: str | None = None
    run_start = 0
    run_end = 0

    def flush() -> None:
        nonlocal run_tag
        if run_tag is not None:
            spans.append(EntitySpan(run_start, run_end, run_tag, text[run_start:run_end]))
            run_tag = None

    for (tok_start, tok_end), label in zip(seq.tokens, seq.labels):
        if label.startswith("B-"):
            flush()
            run_tag = label[2:]
            run_start, run_end = tok_start, tok_end
        elif label.startswith("I-"):
            # after repair an I- always continues the current run
            run_end = tok_end
        else:
            flush()
    flush()
    return spans


def encode_labels(spans: list[EntitySpan], tokens: list[tuple[int, int]]) -> LabelSequence:
    """Inverse of decode_spans for token-aligned spans.

    Raises ValueError if a span boundary falls inside a token or a span
    covers no token.
    """
    labels = ["O"] * len(tokens)
    starts = {s: i for i, (s, _) in enumerate(tokens)}
    ends = {e: i for i, (_, e) in enumerate(tokens)}
    for span in spans:
        first = starts.get(span.start)
        last = ends.get(span.end)
        if first is None or last is None:
            raise ValueError(
                f"span [{span.start}, {span.end}) is not aligned to token boundaries"
            )
        if last < first:
            raise ValueError(f"span [{span.start}, {span.end}) covers no token")
        labels[first] = "B-" + span.tag
        for i in range(first + 1, last + 1):
            labels[i] = "I-" + span.tag
    return LabelSequence(tuple(tokens), tuple(labels))


def labels_to_jsonl(seq: LabelSequence) -> str:
    import json

    return json.dumps({"tokens": [list(t) for t in seq.tokens], "labels": list(seq.labels)})


def labels_from_jsonl(line: str) -> LabelSequence:
    import json

    obj = json.loads(line)
    return LabelSequence(tuple((s, e) for s, e in obj["tokens"]), tuple(obj["labels"]))
