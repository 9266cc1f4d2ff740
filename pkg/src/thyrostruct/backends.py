"""Pluggable extraction strategies.

Three ways to get from a transcript to structured content:

* `rule_tag` — deterministic pattern/gazetteer tagger, the in-process
  stand-in for a served token classifier; runs anywhere, needs no network.
* `remote_tag` — client for an out-of-process token-classification service.
* `llm_structure` — client for a hosted-completion endpoint that emits the
  structured record directly from a few-shot prompt.

Plus `normalize_language`, which rewrites mixed-language transcripts into a
single language before tagging.
"""

from __future__ import annotations

import json
import os
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import requests

from .bio import repair_labels
from .model import (
    EntitySpan,
    LabelSequence,
    LanguageMode,
    OperationRecord,
    RecordParseError,
    RecordSchemaError,
    Transcript,
    record_from_json,
    validate_record,
    FIELD_KEYS,
)
from .structurer import LanguagePack

# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class BackendError(Exception):
    """Base for extraction-backend failures."""


class TransportError(BackendError):
    """Endpoint unreachable, timed out, or HTTP-level failure after retries."""


class ProtocolError(BackendError):
    """Endpoint answered, but not with the agreed wire shape."""


class StructuringError(BackendError):
    """Model output could not be turned into a valid record.

    Carries the raw model text for audit.
    """

    def __init__(self, message: str, raw_text: str):
        super().__init__(message)
        self.raw_text = raw_text


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


class Backend(Enum):
    RULE = "rule"
    REMOTE = "remote"
    LLM = "llm"


@dataclass(frozen=True)
class TaggerConfig:
    backend: Backend = Backend.RULE
    endpoint_url: str | None = None
    timeout_ms: int = 5000
    max_retries: int = 2
    lang_pack: str = "en"

    def __post_init__(self) -> None:
        if self.backend not in (Backend.RULE, Backend.REMOTE):
            raise ValueError("tagger backend must be RULE or REMOTE")
        if self.backend is Backend.REMOTE and not self.endpoint_url:
            raise ValueError("REMOTE backend requires endpoint_url")
        if self.backend is Backend.RULE and self.endpoint_url:
            raise ValueError("RULE backend takes no endpoint_url")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class FewShotCase:
    transcript_text: str
    record_json: str


def default_few_shot_cases() -> tuple[FewShotCase, ...]:
    ref = resources.files("thyrostruct.packs") / "shots_en.json"
    data = json.loads(ref.read_text(encoding="utf-8"))
    return tuple(FewShotCase(c["transcript"], json.dumps(c["record"], ensure_ascii=False))
                 for c in data["cases"])


def _load_template(name: str) -> str:
    ref = resources.files("thyrostruct.packs") / name
    return ref.read_text(encoding="utf-8")


@dataclass(frozen=True)
class LlmConfig:
    endpoint_url: str
    api_key_env: str = ""
    model_name: str = "gpt-4"
    few_shot_cases: tuple[FewShotCase, ...] | None = None
    temperature: float = 0.0
    timeout_ms: int = 30000
    max_retries: int = 2
    # one re-ask with the violation list; an extension, off by default so
    # a single request stays a single request during fidelity runs
    repair_retry: bool = False
    prompt_template: str | None = None
    normalize_template: str | None = None

    def __post_init__(self) -> None:
        if not self.endpoint_url:
            raise ValueError("endpoint_url is required")
        if not (0.0 <= self.temperature <= 1.0):
            raise ValueError("temperature must be in [0, 1]")
        if self.few_shot_cases is None:
            object.__setattr__(self, "few_shot_cases", default_few_shot_cases())
        if len(self.few_shot_cases) != 5:
            raise ValueError("exactly 5 few-shot cases are required")
        if self.prompt_template is None:
            object.__setattr__(self, "prompt_template", _load_template("prompt_structure_en.txt"))
        if "not mentioned" not in self.prompt_template.casefold():
            raise ValueError('prompt template must state the "not mentioned" rule')
        if self.normalize_template is None:
            object.__setattr__(self, "normalize_template", _load_template("prompt_normalize_en.txt"))

    def api_key(self) -> str | None:
        if not self.api_key_env:
            return None
        return os.environ.get(self.api_key_env) or None


# ---------------------------------------------------------------------------
# Native rule tagger
# ---------------------------------------------------------------------------


def rule_tag(transcript: Transcript, pack: LanguagePack | None = None) -> list[EntitySpan]:
    """Deterministic pattern tagger over the language pack.

    All pattern matches are collected, then resolved leftmost-longest so the
    output is sorted and non-overlapping. Same text + same pack => same spans.
    """
    pack = pack or LanguagePack.load()
    text = transcript.text
    candidates: list[tuple[int, int, int, str]] = []
    for index, pattern in enumerate(pack.patterns):
        for m in pattern.regex.finditer(text):
            candidates.append((m.start(), -(m.end() - m.start()), index, pattern.tag))
    candidates.sort()
    spans: list[EntitySpan] = []
    last_end = 0
    for start, neg_length, _, tag in candidates:
        end = start - neg_length
        if start >= last_end:
            spans.append(EntitySpan(start, end, tag, text[start:end]))
            last_end = end
    return spans


# ---------------------------------------------------------------------------
# HTTP plumbing
# ---------------------------------------------------------------------------

REQUEST_ID_HEADER = "X-Request-Id"


def _post_json(
    url: str,
    payload: dict,
    timeout_ms: int,
    max_retries: int,
    api_key: str | None = None,
    session: requests.Session | None = None,
) -> dict:
    """POST with retries and exponential backoff.

    Retried attempts reuse one request id so the server can deduplicate.
    Connection problems and timeouts retry; a malformed answer does not.
    """
    headers = {REQUEST_ID_HEADER: uuid.uuid4().hex}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    post = (session or requests).post
    delay = 0.05
    attempts = max_retries + 1
    for attempt in range(attempts):
        try:
            response = post(url, json=payload, timeout=timeout_ms / 1000.0, headers=headers)
        except requests.RequestException as exc:
            if attempt + 1 < attempts:
                time.sleep(delay)
                delay *= 2
                continue
            raise TransportError(
                f"POST {url} failed after {attempts} attempts: {exc}"
            ) from exc
        if response.status_code != 200:
            raise ProtocolError(f"POST {url} returned HTTP {response.status_code}")
        try:
            data = response.json()
        except ValueError as exc:
            raise ProtocolError(f"POST {url} returned non-JSON body") from exc
        if not isinstance(data, dict):
            raise ProtocolError(f"POST {url} returned a non-object body")
        return data
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# Remote token-classifier client
# ---------------------------------------------------------------------------


def remote_tag(transcript: Transcript, config: TaggerConfig) -> LabelSequence:
    """Fetch token offsets + labels from the serving endpoint and repair them.

    Wire contract: POST {endpoint}/tag with {"text": ...}; the answer carries
    "tokens" ([[start, end], ...]), "labels", and optional "scores".
    """
    if config.backend is not Backend.REMOTE:
        raise ValueError("remote_tag requires a REMOTE tagger config")
    url = config.endpoint_url.rstrip("/") + "/tag"
    data = _post_json(url, {"text": transcript.text}, config.timeout_ms, config.max_retries)
    if "tokens" not in data or "labels" not in data:
        raise ProtocolError(f"{url} answer lacks tokens/labels")
    try:
        seq = LabelSequence(
            tuple((int(s), int(e)) for s, e in data["tokens"]),
            tuple(str(label) for label in data["labels"]),
        )
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"{url} returned an invalid label sequence: {exc}") from exc
    if seq.tokens and seq.tokens[-1][1] > len(transcript.text):
        raise ProtocolError(f"{url} returned token offsets beyond the text")
    return repair_labels(seq)


# ---------------------------------------------------------------------------
# LLM few-shot structurer client
# ---------------------------------------------------------------------------


def extract_json_object(text: str) -> str:
    """The first balanced JSON object in `text` (string-literal aware).

    Models often wrap their JSON in prose; this peels it out.
    """
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
            else:
                if ch == '"':
                    in_string = True
                elif ch == "{":
                    depth += 1
                elif ch == "}":
                    depth -= 1
                    if depth == 0:
                        return text[start:i + 1]
        start = text.find("{", start + 1)
    raise RecordParseError("no balanced JSON object in completion")


def build_structuring_prompt(document: str, config: LlmConfig) -> str:
    shots = ""
    for case in config.few_shot_cases:
        shots += f'Document: """{case.transcript_text}"""\n'
        shots += f"Structured Output: {case.record_json}\n\n"
    return config.prompt_template.format(
        keys="\n".join(f"- {key}" for key in FIELD_KEYS),
        shots=shots,
        document=document,
    )


def _complete(config: LlmConfig, prompt: str) -> str:
    payload = {
        "model": config.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": config.temperature,
    }
    data = _post_json(
        config.endpoint_url, payload, config.timeout_ms, config.max_retries,
        api_key=config.api_key(),
    )
    if "text" not in data or not isinstance(data["text"], str):
        raise ProtocolError("completion answer lacks a text field")
    return data["text"]


def _completion_to_record(raw: str) -> OperationRecord:
    return record_from_json(extract_json_object(raw))


def llm_structure(transcript: Transcript, config: LlmConfig) -> OperationRecord:
    """One prompt, one record.

    Keys the model omits or marks "not mentioned" stay NOT_MENTIONED. When
    `repair_retry` is on, an invalid answer earns exactly one re-ask carrying
    the violation list; after that the raw text surfaces in StructuringError.
    """
    prompt = build_structuring_prompt(transcript.text, config)
    raw = _complete(config, prompt)
    problems: list[str]
    try:
        record = _completion_to_record(raw)
        violations = validate_record(record)
        if not violations:
            return record
        problems = [f"{fname}: {msg}" for fname, msg in violations]
    except (RecordParseError, RecordSchemaError) as exc:
        problems = [str(exc)]

    if config.repair_retry:
        retry_prompt = (
            prompt
            + "\n\nYour previous answer was rejected for these problems:\n"
            + "\n".join(f"- {p}" for p in problems)
            + "\nReturn one corrected JSON object."
        )
        raw = _complete(config, retry_prompt)
        try:
            record = _completion_to_record(raw)
            if not validate_record(record):
                return record
        except (RecordParseError, RecordSchemaError):
            pass
    raise StructuringError(
        "completion did not yield a valid record: " + "; ".join(problems), raw_text=raw
    )


# ---------------------------------------------------------------------------
# Mixed-language normalization
# ---------------------------------------------------------------------------


def normalize_language(
    transcript: Transcript,
    config: LlmConfig,
    pass_through_on_error: bool = False,
) -> Transcript:
    """Rewrite a MIXED transcript into a single-language form via the LLM.

    On transport failure with `pass_through_on_error`, the original text is
    returned unchanged with the failure flagged in provenance.
    """
    if transcript.language_mode is not LanguageMode.MIXED:
        raise ValueError("normalize_language requires a MIXED transcript")
    prompt = config.normalize_template.format(document=transcript.text)
    try:
        text = _complete(config, prompt).strip()
        if not text:
            raise ProtocolError("normalization returned empty text")
    except BackendError:
        if not pass_through_on_error:
            raise
        return Transcript(
            id=transcript.id,
            text=transcript.text,
            language_mode=transcript.language_mode,
            source=(transcript.source + " | normalization failed, passed through").strip(" |"),
            created_at=transcript.created_at,
        )
    return Transcript(
        id=transcript.id + "-normalized",
        text=text,
        language_mode=LanguageMode.MONOLINGUAL,
        source=(transcript.source + f" | normalized via {config.model_name}").strip(" |"),
        created_at=transcript.created_at,
    )
