// Client-side review session: the single place that tracks the loaded record,
// which fields the reviewer touched, and the version to carry on save.
// Records are never mutated locally without a PUT round trip; the service is
// the single source of truth.

import { ApiClient, ApiError } from "./api.js";
import { recordProblems } from "./schema.js";
import type {
  BackendName,
  RecordObject,
  RecordValue,
  SpanOut,
  StoredRecord,
} from "./types.js";

export interface ConflictState {
  currentVersion: number;
  message: string;
}

export class ReviewSession {
  transcriptText = "";
  backend: BackendName = "rule";
  normalize = false;

  stored: StoredRecord | null = null;
  draft: RecordObject = {};
  private dirty = new Set<string>();
  conflict: ConflictState | null = null;

  constructor(private api: ApiClient) {}

  get dirtyFields(): ReadonlySet<string> {
    return this.dirty;
  }

  /** Save stays disabled until at least one field was edited. */
  get canSave(): boolean {
    return this.stored !== null && this.dirty.size > 0 && this.problems().size === 0;
  }

  get version(): number {
    return this.stored?.version ?? 0;
  }

  spans(): SpanOut[] {
    for (const stage of this.stored?.pipeline_trace ?? []) {
      if (stage.detail?.spans) {
        return stage.detail.spans;
      }
    }
    return [];
  }

  problems(): Map<string, string> {
    return recordProblems(this.draft);
  }

  async uploadAndExtract(text: string): Promise<StoredRecord> {
    this.transcriptText = text;
    const { transcript_id } = await this.api.uploadTranscript(text);
    const stored = await this.api.extract(transcript_id, this.backend, this.normalize);
    this.loadStored(stored);
    return stored;
  }

  loadStored(stored: StoredRecord): void {
    this.stored = stored;
    this.draft = { ...stored.record };
    this.dirty.clear();
    this.conflict = null;
  }

  setField(key: string, value: RecordValue): void {
    if (!this.stored) {
      throw new Error("no record loaded");
    }
    this.draft[key] = value;
    if (JSON.stringify(value) === JSON.stringify(this.stored.record[key])) {
      this.dirty.delete(key);
    } else {
      this.dirty.add(key);
    }
  }

  fieldValue(key: string): RecordValue {
    return this.draft[key];
  }

  /** PUT the full draft with the loaded version; 409 becomes a merge prompt. */
  async save(): Promise<StoredRecord | null> {
    if (!this.stored) {
      throw new Error("no record loaded");
    }
    try {
      const updated = await this.api.putRecord(
        this.stored.record_id,
        this.draft,
        this.stored.version,
      );
      this.loadStored(updated);
      return updated;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.conflict = {
          currentVersion: (error.body.current_version as number) ?? -1,
          message:
            "This record was changed elsewhere. Reload the latest version, " +
            "then re-apply your edits.",
        };
        return null;
      }
      throw error;
    }
  }

  /** Conflict resolution: fetch latest, re-apply the dirty fields on top. */
  async reloadAndMerge(): Promise<void> {
    if (!this.stored) {
      throw new Error("no record loaded");
    }
    const latest = await this.api.getRecord(this.stored.record_id);
    const edits = new Map<string, RecordValue>();
    for (const key of this.dirty) {
      edits.set(key, this.draft[key]);
    }
    this.loadStored(latest);
    for (const [key, value] of edits) {
      this.setField(key, value);
    }
  }

  async currentImage(): Promise<string> {
    if (!this.stored) {
      throw new Error("no record loaded");
    }
    return this.api.fetchImage(this.stored.record_id, this.stored.version);
  }

  imageUrl(): string {
    if (!this.stored) {
      return "";
    }
    return this.api.imageUrl(this.stored.record_id, this.stored.version);
  }
}
