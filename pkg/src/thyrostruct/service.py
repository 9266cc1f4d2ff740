"""HTTP service: transcript upload, extraction, record review, images, eval.

The service is a thin composition of the library stages. Extraction runs one
of the three backends and persists the result with a per-stage trace (the
tagged spans ride along in the trace so a review UI can highlight them).
Record corrections go through optimistic versioning: a PUT carrying a stale
version gets 409 and must reload.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from . import corpus as corpus_mod
from .backends import (
    Backend,
    LlmConfig,
    ProtocolError,
    StructuringError,
    TaggerConfig,
    TransportError,
    llm_structure,
    normalize_language,
    remote_tag,
    rule_tag,
)
from .bio import decode_spans
from .evaluator import AlignmentError, EvalReport, ReportFormat, emit_report
from .model import (
    LanguageMode,
    OperationRecord,
    RecordParseError,
    RecordSchemaError,
    Transcript,
    record_from_json,
    validate_record,
)
from .renderer import render_record
from .store import (
    DocumentStore,
    NotFoundError,
    StoredRecord,
    TraceStage,
    VersionConflictError,
)
from .structurer import LanguagePack, Structurer

import os


@dataclass(frozen=True)
class ServiceConfig:
    storage_path: str
    host: str = "127.0.0.1"
    port: int = 8400
    max_upload_bytes: int = 1_000_000
    #: name of the env var holding the static bearer token; empty disables auth
    token_env: str = ""
    lang_pack: str = "en"
    remote_endpoint: str | None = None
    llm_endpoint: str | None = None
    llm_api_key_env: str = ""
    llm_model: str = "gpt-4"

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**data)


class _ConfigProblem(Exception):
    pass


def _error(status: int, detail: str, **extra: Any) -> JSONResponse:
    return JSONResponse({"detail": detail, **extra}, status_code=status)


def create_app(config: ServiceConfig) -> FastAPI:
    store = DocumentStore(config.storage_path)
    pack = LanguagePack.load(config.lang_pack)
    structurer = Structurer(pack=pack)

    app = FastAPI(title="thyrostruct service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.config = config

    def _auth_token() -> str | None:
        if not config.token_env:
            return None
        return os.environ.get(config.token_env) or None

    @app.middleware("http")
    async def require_token(request: Request, call_next):
        token = _auth_token()
        if token and request.url.path.startswith("/api"):
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {token}":
                return _error(401, "missing or invalid bearer token")
        return await call_next(request)

    # -- transcripts --------------------------------------------------------

    @app.post("/api/transcripts", status_code=201)
    async def upload_transcript(request: Request):
        body = await request.body()
        if len(body) > config.max_upload_bytes:
            return _error(
                400,
                f"body of {len(body)} bytes exceeds the {config.max_upload_bytes}-byte limit",
            )
        content_type = request.headers.get("content-type", "").split(";")[0].strip().lower()
        source = ""
        if content_type == "application/json":
            try:
                payload = json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                return _error(400, f"invalid JSON body: {exc}")
            if not isinstance(payload, dict) or "text" not in payload:
                return _error(400, 'JSON body must be an object with a "text" key')
            text = payload["text"]
            if not isinstance(text, str):
                return _error(400, '"text" must be a string')
            mode_raw = payload.get("language_mode", "monolingual")
            try:
                mode = LanguageMode(mode_raw)
            except ValueError:
                return _error(400, f"unknown language_mode {mode_raw!r}")
            source = str(payload.get("source", ""))
        elif content_type in ("text/plain", ""):
            try:
                text = body.decode("utf-8")
            except UnicodeDecodeError:
                return _error(400, "body is not valid UTF-8")
            mode = LanguageMode.MONOLINGUAL
        else:
            return _error(415, f"unsupported content type {content_type!r}")
        if not text.strip():
            return _error(400, "empty transcript")
        transcript_id = store.put_transcript(text, mode, source)
        return JSONResponse({"transcript_id": transcript_id}, status_code=201)

    @app.get("/api/transcripts/{transcript_id}")
    def get_transcript(transcript_id: str):
        try:
            transcript = store.get_transcript(transcript_id)
        except NotFoundError:
            return _error(404, f"unknown transcript {transcript_id}")
        return {
            "transcript_id": transcript.id,
            "text": transcript.text,
            "language_mode": transcript.language_mode.value,
            "source": transcript.source,
        }

    # -- extraction ------------------------------------------------------------

    def _llm_config() -> LlmConfig:
        if not config.llm_endpoint:
            raise _ConfigProblem("llm backend is not configured")
        return LlmConfig(
            endpoint_url=config.llm_endpoint,
            api_key_env=config.llm_api_key_env,
            model_name=config.llm_model,
        )

    def _remote_config() -> TaggerConfig:
        if not config.remote_endpoint:
            raise _ConfigProblem("remote backend is not configured")
        return TaggerConfig(
            backend=Backend.REMOTE, endpoint_url=config.remote_endpoint,
            lang_pack=config.lang_pack,
        )

    def _spans_detail(spans) -> dict[str, Any]:
        return {
            "spans": [
                {"tag": s.tag, "start": s.start, "end": s.end, "surface": s.surface}
                for s in spans
            ]
        }

    @app.post("/api/records:extract")
    async def extract_record(request: Request):
        try:
            payload = json.loads((await request.body()).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return _error(400, f"invalid JSON body: {exc}")
        transcript_id = payload.get("transcript_id")
        backend = str(payload.get("backend", "rule")).lower()
        normalize = bool(payload.get("normalize", False))
        if backend not in ("rule", "remote", "llm"):
            return _error(422, f"unknown backend {backend!r}")
        try:
            transcript = store.get_transcript(transcript_id)
        except NotFoundError:
            return _error(404, f"unknown transcript {transcript_id}")

        trace: list[TraceStage] = []

        def timed(stage: str, fn, detail: dict[str, Any] | None = None):
            start = time.perf_counter()
            result = fn()
            trace.append(TraceStage(stage, round((time.perf_counter() - start) * 1000, 3), detail))
            return result

        stage = "setup"
        try:
            working = transcript
            if normalize and transcript.language_mode is LanguageMode.MIXED:
                stage = "normalize"
                llm = _llm_config()
                working = timed("normalize", lambda: normalize_language(transcript, llm))
            if backend == "rule":
                stage = "tag"
                spans = timed("tag", lambda: rule_tag(working, pack))
                trace[-1] = TraceStage(trace[-1].stage, trace[-1].duration_ms, _spans_detail(spans))
                stage = "structure"
                record = timed("structure", lambda: structurer.structure(spans, working))
            elif backend == "remote":
                remote = _remote_config()
                stage = "tag"
                seq = timed("tag", lambda: remote_tag(working, remote))
                stage = "decode"
                spans = timed("decode", lambda: decode_spans(seq, working.text))
                trace[-1] = TraceStage(trace[-1].stage, trace[-1].duration_ms, _spans_detail(spans))
                stage = "structure"
                record = timed("structure", lambda: structurer.structure(spans, working))
            else:
                stage = "llm-structure"
                llm = _llm_config()
                record = timed("llm-structure", lambda: llm_structure(working, llm))
        except _ConfigProblem as exc:
            return _error(422, str(exc))
        except (TransportError, ProtocolError) as exc:
            return _error(502, str(exc), stage=stage)
        except StructuringError as exc:
            return _error(422, str(exc), stage=stage, raw_text=exc.raw_text)

        stored = store.create_record(transcript.id, record, backend, tuple(trace))
        return stored.to_obj()

    # -- records ----------------------------------------------------------------

    @app.get("/api/records")
    def list_records():
        return {"record_ids": store.list_records()}

    @app.get("/api/records/{record_id}")
    def get_record(record_id: str):
        try:
            return store.get_record(record_id).to_obj()
        except NotFoundError:
            return _error(404, f"unknown record {record_id}")

    @app.put("/api/records/{record_id}")
    async def put_record(record_id: str, request: Request):
        try:
            payload = json.loads((await request.body()).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return _error(400, f"invalid JSON body: {exc}")
        if not isinstance(payload, dict) or "record" not in payload or "version" not in payload:
            return _error(422, 'body must carry "record" and "version"')
        try:
            record = record_from_json(json.dumps(payload["record"]))
        except RecordSchemaError as exc:
            return _error(422, str(exc), problems=exc.problems)
        except RecordParseError as exc:
            return _error(422, str(exc))
        violations = validate_record(record)
        if violations:
            return _error(422, "record is not schema-valid",
                          problems=[list(v) for v in violations])
        try:
            stored = store.update_record(record_id, record, int(payload["version"]))
        except NotFoundError:
            return _error(404, f"unknown record {record_id}")
        except VersionConflictError as exc:
            return _error(409, str(exc), current_version=exc.actual)
        return stored.to_obj()

    @app.get("/api/records/{record_id}/image.svg")
    def get_record_image(record_id: str):
        try:
            stored = store.get_record(record_id)
        except NotFoundError:
            return _error(404, f"unknown record {record_id}")
        svg = render_record(stored.record)
        return Response(content=svg, media_type="image/svg+xml")

    # -- evaluation ---------------------------------------------------------------

    def _records_from_ids(ids: list[str]) -> list[OperationRecord]:
        return [store.get_record(record_id).record for record_id in ids]

    def _records_from_objs(objs: list[dict]) -> list[OperationRecord]:
        return [record_from_json(json.dumps(obj)) for obj in objs]

    @app.post("/api/eval")
    async def run_eval(request: Request):
        try:
            payload = json.loads((await request.body()).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return _error(400, f"invalid JSON body: {exc}")
        try:
            if "manifest_path" in payload:
                corpus_dir = Path(payload["manifest_path"])
                if corpus_dir.suffix == ".json":
                    corpus_dir = corpus_dir.parent
                if not (corpus_dir / "manifest.json").exists():
                    return _error(404, f"no corpus manifest under {corpus_dir}")
                documents = corpus_mod.load_corpus(corpus_dir)
                gold = [doc.gold_record for doc in documents]
                pred = [
                    structurer.structure(rule_tag(doc.transcript, pack), doc.transcript)
                    for doc in documents
                ]
            elif "gold_record_ids" in payload:
                gold = _records_from_ids(payload["gold_record_ids"])
                pred = _records_from_ids(payload.get("pred_record_ids", []))
            elif "gold_records" in payload:
                gold = _records_from_objs(payload["gold_records"])
                pred = _records_from_objs(payload.get("pred_records", []))
            else:
                return _error(422, "body must carry manifest_path, *_record_ids, or *_records")
            report = EvalReport.from_records(gold, pred)
        except NotFoundError as exc:
            return _error(404, f"unknown record {exc}")
        except (RecordSchemaError, RecordParseError) as exc:
            return _error(422, str(exc))
        except AlignmentError as exc:
            return _error(422, str(exc))
        report_json = emit_report(report, ReportFormat.JSON)
        report_id = store.put_report(report_json)
        return {"report_id": report_id, "report": json.loads(report_json)}

    @app.get("/api/reports")
    def list_reports():
        return {"report_ids": store.list_reports()}

    @app.get("/api/reports/{report_id}")
    def get_report(report_id: str):
        try:
            return json.loads(store.get_report(report_id))
        except NotFoundError:
            return _error(404, f"unknown report {report_id}")

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    return app


def run(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
