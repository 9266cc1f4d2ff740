"""Embedded document store: JSON files under one root, committed via manifest.

Single writer, optimistic readers. Every mutation writes its data file
atomically (tmp + fsync + rename) and then commits by rewriting the manifest;
files that never made it into the manifest are invisible after a crash.
Record versions are immutable files, so concurrent readers always see a
consistent snapshot and PUTs race only on the version counter.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from hashlib import sha256
from pathlib import Path
from typing import Any

from .model import (
    LanguageMode,
    OperationRecord,
    Transcript,
    record_from_json,
    record_to_json,
)


class NotFoundError(KeyError):
    """No such transcript, record, or report."""


class VersionConflictError(Exception):
    """A PUT carried a stale version; the caller must reload and retry."""

    def __init__(self, record_id: str, expected: int, actual: int):
        super().__init__(
            f"record {record_id}: stale version {expected}, current is {actual}"
        )
        self.record_id = record_id
        self.expected = expected
        self.actual = actual


@dataclass(frozen=True)
class TraceStage:
    """One pipeline stage with its wall time; `detail` may carry stage output
    such as the tagged spans (used by the review UI for highlighting)."""

    stage: str
    duration_ms: float
    detail: dict[str, Any] | None = None

    def to_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"stage": self.stage, "duration_ms": self.duration_ms}
        if self.detail is not None:
            obj["detail"] = self.detail
        return obj

    @classmethod
    def from_obj(cls, obj: dict[str, Any]) -> "TraceStage":
        return cls(obj["stage"], obj["duration_ms"], obj.get("detail"))


@dataclass(frozen=True)
class StoredRecord:
    record_id: str
    transcript_id: str
    record: OperationRecord
    backend_used: str
    pipeline_trace: tuple[TraceStage, ...]
    version: int
    edited_by_human: bool = False

    def to_obj(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "transcript_id": self.transcript_id,
            "backend_used": self.backend_used,
            "version": self.version,
            "edited_by_human": self.edited_by_human,
            "pipeline_trace": [stage.to_obj() for stage in self.pipeline_trace],
            "record": json.loads(record_to_json(self.record)),
        }

    @classmethod
    def from_obj(cls, obj: dict[str, Any]) -> "StoredRecord":
        return cls(
            record_id=obj["record_id"],
            transcript_id=obj["transcript_id"],
            record=record_from_json(json.dumps(obj["record"])),
            backend_used=obj["backend_used"],
            pipeline_trace=tuple(TraceStage.from_obj(s) for s in obj["pipeline_trace"]),
            version=obj["version"],
            edited_by_human=obj["edited_by_human"],
        )


def transcript_id_for(text: str, language_mode: LanguageMode) -> str:
    """Content address: identical text + mode always map to one id."""
    digest = sha256((language_mode.value + "\n" + text).encode("utf-8")).hexdigest()
    return "t" + digest[:16]


def _write_atomic(path: Path, data: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.write(data)
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(tmp, path)


class DocumentStore:
    """All state lives under `root`; safe for concurrent use in one process."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("transcripts", "records", "reports"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._manifest_path = self.root / "manifest.json"
        if self._manifest_path.exists():
            self._manifest = json.loads(self._manifest_path.read_text(encoding="utf-8"))
        else:
            self._manifest = {
                "schema_version": 1,
                "transcripts": [],
                "records": {},
                "reports": [],
            }
            self._commit()

    def _commit(self) -> None:
        _write_atomic(
            self._manifest_path,
            json.dumps(self._manifest, ensure_ascii=False, indent=2) + "\n",
        )

    # -- transcripts --------------------------------------------------------

    def put_transcript(
        self,
        text: str,
        language_mode: LanguageMode = LanguageMode.MONOLINGUAL,
        source: str = "",
    ) -> str:
        transcript_id = transcript_id_for(text, language_mode)
        with self._lock:
            if transcript_id in self._manifest["transcripts"]:
                return transcript_id
            obj = {
                "id": transcript_id,
                "text": text,
                "language_mode": language_mode.value,
                "source": source,
                "created_at": datetime.now(timezone.utc).isoformat(),
            }
            _write_atomic(
                self.root / "transcripts" / f"{transcript_id}.json",
                json.dumps(obj, ensure_ascii=False) + "\n",
            )
            self._manifest["transcripts"].append(transcript_id)
            self._commit()
        return transcript_id

    def get_transcript(self, transcript_id: str) -> Transcript:
        if transcript_id not in self._manifest["transcripts"]:
            raise NotFoundError(transcript_id)
        obj = json.loads(
            (self.root / "transcripts" / f"{transcript_id}.json").read_text(encoding="utf-8")
        )
        return Transcript(
            id=obj["id"],
            text=obj["text"],
            language_mode=LanguageMode(obj["language_mode"]),
            source=obj.get("source", ""),
            created_at=datetime.fromisoformat(obj["created_at"]),
        )

    # -- records -------------------------------------------------------------

    def _record_dir(self, record_id: str) -> Path:
        return self.root / "records" / record_id

    def _write_version(self, stored: StoredRecord) -> None:
        directory = self._record_dir(stored.record_id)
        directory.mkdir(parents=True, exist_ok=True)
        _write_atomic(
            directory / f"v{stored.version}.json",
            json.dumps(stored.to_obj(), ensure_ascii=False, indent=2) + "\n",
        )

    def create_record(
        self,
        transcript_id: str,
        record: OperationRecord,
        backend_used: str,
        pipeline_trace: tuple[TraceStage, ...],
    ) -> StoredRecord:
        with self._lock:
            record_id = "r" + uuid.uuid4().hex[:12]
            stored = StoredRecord(
                record_id=record_id,
                transcript_id=transcript_id,
                record=record,
                backend_used=backend_used,
                pipeline_trace=pipeline_trace,
                version=1,
                edited_by_human=False,
            )
            self._write_version(stored)
            self._manifest["records"][record_id] = 1
            self._commit()
            return stored

    def get_record(self, record_id: str, version: int | None = None) -> StoredRecord:
        latest = self._manifest["records"].get(record_id)
        if latest is None:
            raise NotFoundError(record_id)
        wanted = latest if version is None else version
        path = self._record_dir(record_id) / f"v{wanted}.json"
        if not path.exists():
            raise NotFoundError(f"{record_id} v{wanted}")
        return StoredRecord.from_obj(json.loads(path.read_text(encoding="utf-8")))

    def update_record(
        self, record_id: str, record: OperationRecord, expected_version: int
    ) -> StoredRecord:
        """Optimistic write: succeeds only when `expected_version` is current."""
        with self._lock:
            latest = self._manifest["records"].get(record_id)
            if latest is None:
                raise NotFoundError(record_id)
            if expected_version != latest:
                raise VersionConflictError(record_id, expected_version, latest)
            current = self.get_record(record_id)
            stored = StoredRecord(
                record_id=record_id,
                transcript_id=current.transcript_id,
                record=record,
                backend_used=current.backend_used,
                pipeline_trace=current.pipeline_trace,
                version=latest + 1,
                edited_by_human=True,
            )
            self._write_version(stored)
            self._manifest["records"][record_id] = stored.version
            self._commit()
            return stored

    def list_records(self) -> list[str]:
        return sorted(self._manifest["records"])

    # -- evaluation reports ---------------------------------------------------

    def put_report(self, report_json: str) -> str:
        with self._lock:
            report_id = f"report-{len(self._manifest['reports']) + 1:04d}"
            _write_atomic(self.root / "reports" / f"{report_id}.json", report_json + "\n")
            self._manifest["reports"].append(report_id)
            self._commit()
            return report_id

    def get_report(self, report_id: str) -> str:
        if report_id not in self._manifest["reports"]:
            raise NotFoundError(report_id)
        return (self.root / "reports" / f"{report_id}.json").read_text(encoding="utf-8")

    def list_reports(self) -> list[str]:
        return list(self._manifest["reports"])
