// Shapes of the service's JSON answers (see docs/openapi.json server-side).

export type RecordValue = number | string | string[] | number[] | NoteEntry[];

/** One record object: 22 canonical class keys plus "Notes". Absent classes
 * carry the literal string "not mentioned". */
export type RecordObject = { [key: string]: RecordValue };

export interface NoteEntry {
  tag: string;
  text: string;
  flag?: string;
}

export interface SpanOut {
  tag: string;
  start: number;
  end: number;
  surface: string;
}

export interface TraceStage {
  stage: string;
  duration_ms: number;
  detail?: { spans?: SpanOut[] };
}

export interface StoredRecord {
  record_id: string;
  transcript_id: string;
  backend_used: string;
  version: number;
  edited_by_human: boolean;
  pipeline_trace: TraceStage[];
  record: RecordObject;
}

export interface EvalReportOut {
  schema_version: number;
  case_count: number;
  record?: {
    per_class: { [key: string]: number };
    mean_accuracy: number;
  };
}

export type BackendName = "rule" | "remote" | "llm";
export type LanguageModeName = "monolingual" | "mixed";
