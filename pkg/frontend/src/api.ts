// Thin typed client over the service's JSON API. The fetch implementation is
// injectable so tests run against a scripted service.

import type {
  BackendName,
  EvalReportOut,
  LanguageModeName,
  RecordObject,
  StoredRecord,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: { detail?: string; current_version?: number; [key: string]: unknown },
  ) {
    super(body.detail ?? `HTTP ${status}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    let body: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        body = JSON.parse(text);
      } catch {
        body = { detail: text };
      }
    }
    if (!response.ok) {
      throw new ApiError(response.status, (body ?? {}) as ApiError["body"]);
    }
    return body as T;
  }

  async health(): Promise<boolean> {
    try {
      await this.request<{ status: string }>("/api/health");
      return true;
    } catch {
      return false;
    }
  }

  uploadTranscript(
    text: string,
    languageMode: LanguageModeName = "monolingual",
  ): Promise<{ transcript_id: string }> {
    return this.request("/api/transcripts", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text, language_mode: languageMode }),
    });
  }

  getTranscript(transcriptId: string): Promise<{ transcript_id: string; text: string }> {
    return this.request(`/api/transcripts/${transcriptId}`);
  }

  extract(
    transcriptId: string,
    backend: BackendName,
    normalize: boolean,
  ): Promise<StoredRecord> {
    return this.request("/api/records:extract", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ transcript_id: transcriptId, backend, normalize }),
    });
  }

  getRecord(recordId: string): Promise<StoredRecord> {
    return this.request(`/api/records/${recordId}`);
  }

  putRecord(
    recordId: string,
    record: RecordObject,
    version: number,
  ): Promise<StoredRecord> {
    return this.request(`/api/records/${recordId}`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ record, version }),
    });
  }

  /** Versioned so a refreshed <img> always bypasses stale caches. */
  imageUrl(recordId: string, version: number): string {
    return `${this.baseUrl}/api/records/${recordId}/image.svg?v=${version}`;
  }

  async fetchImage(recordId: string, version: number): Promise<string> {
    const response = await this.fetchImpl(this.imageUrl(recordId, version));
    if (!response.ok) {
      throw new ApiError(response.status, { detail: `image fetch failed` });
    }
    return response.text();
  }

  evalRecords(gold: RecordObject[], pred: RecordObject[]): Promise<{
    report_id: string;
    report: EvalReportOut;
  }> {
    return this.request("/api/eval", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ gold_records: gold, pred_records: pred }),
    });
  }
}
