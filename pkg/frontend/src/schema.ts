// The 22-class form schema, mirroring the server's canonical record keys.
// Every class can always be set back to the explicit "not mentioned" state.

import type { NoteEntry, RecordObject, RecordValue } from "./types.js";

export const NOT_MENTIONED = "not mentioned";

export type FieldKind =
  | "int"
  | "text"
  | "enum"
  | "laterality-list"
  | "size-list";

export interface FieldSpec {
  key: string;
  kind: FieldKind;
  options?: string[];
}

const PRESERVATION3 = ["Preserved", "Not preserved", "Not identified"];
const PRESERVATION2 = ["Preserved", "Not preserved"];

export const RECORD_FIELDS: FieldSpec[] = [
  { key: "Age", kind: "int" },
  { key: "Sex", kind: "enum", options: ["Male", "Female"] },
  { key: "Tumor location", kind: "laterality-list", options: ["Left", "Right", "Isthmus"] },
  { key: "Tumor size", kind: "size-list" },
  { key: "Diagnosis name", kind: "text" },
  { key: "Surgery method", kind: "text" },
  {
    key: "Thyroid resection range",
    kind: "enum",
    options: ["Total thyroidectomy", "Left lobectomy", "Right lobectomy", "Isthmusectomy"],
  },
  { key: "Lymph node removal, or not", kind: "enum", options: ["Performed", "Not performed"] },
  { key: "Capsular invasion, or not", kind: "enum", options: ["Present", "Absent"] },
  { key: "Extrathyroidal invasion, or not", kind: "enum", options: ["Present", "Absent"] },
  { key: "Lymph node enlargement", kind: "enum", options: ["Present", "Absent"] },
  { key: "Parathyroid preservation status (upper right)", kind: "enum", options: PRESERVATION3 },
  { key: "Parathyroid preservation status (lower right)", kind: "enum", options: PRESERVATION3 },
  { key: "Parathyroid preservation status (upper left)", kind: "enum", options: PRESERVATION3 },
  { key: "Parathyroid preservation status (lower left)", kind: "enum", options: PRESERVATION3 },
  { key: "Use of neural monitor", kind: "enum", options: ["Used", "Not used"] },
  { key: "Right recurrent laryngeal nerve preservation, or not", kind: "enum", options: PRESERVATION2 },
  { key: "Left recurrent laryngeal nerve preservation, or not", kind: "enum", options: PRESERVATION2 },
  { key: "Superior laryngeal nerve (right)", kind: "enum", options: PRESERVATION3 },
  { key: "Superior laryngeal nerve (left)", kind: "enum", options: PRESERVATION3 },
  { key: "Bleeding when cleaning the surgical site", kind: "text" },
  { key: "Drainage tube insertion, or not", kind: "enum", options: ["Inserted", "Not inserted"] },
];

export const NOTES_KEY = "Notes";

export const FIELD_KEYS = RECORD_FIELDS.map((spec) => spec.key);

export function isNotMentioned(value: RecordValue | undefined): boolean {
  return (
    value === undefined ||
    (typeof value === "string" && value.trim().toLowerCase() === NOT_MENTIONED)
  );
}

export function emptyRecord(): RecordObject {
  const record: RecordObject = {};
  for (const spec of RECORD_FIELDS) {
    record[spec.key] = NOT_MENTIONED;
  }
  record[NOTES_KEY] = [] as NoteEntry[];
  return record;
}

/** Client-side sanity check before a save; the server re-validates. */
export function fieldProblem(spec: FieldSpec, value: RecordValue): string | null {
  if (isNotMentioned(value)) {
    return null;
  }
  switch (spec.kind) {
    case "int": {
      if (typeof value !== "number" || !Number.isInteger(value) || value <= 0) {
        return "must be a positive integer";
      }
      return null;
    }
    case "text": {
      if (typeof value !== "string" || value.trim() === "") {
        return "must be non-empty text";
      }
      return null;
    }
    case "enum": {
      if (typeof value !== "string") {
        return "must be one of the listed options";
      }
      // free text is allowed where the server models an OTHER(text) escape
      return null;
    }
    case "laterality-list": {
      if (!Array.isArray(value) || value.length === 0) {
        return "must list at least one side";
      }
      return null;
    }
    case "size-list": {
      if (
        !Array.isArray(value) ||
        value.length === 0 ||
        !value.every((item) => typeof item === "number" && item > 0)
      ) {
        return "must list positive sizes in cm";
      }
      return null;
    }
  }
}

/** Paired-list constraint shared with the server schema. */
export function recordProblems(record: RecordObject): Map<string, string> {
  const problems = new Map<string, string>();
  for (const spec of RECORD_FIELDS) {
    const problem = fieldProblem(spec, record[spec.key]);
    if (problem) {
      problems.set(spec.key, problem);
    }
  }
  const loc = record["Tumor location"];
  const size = record["Tumor size"];
  if (!isNotMentioned(loc) && !isNotMentioned(size)) {
    if (Array.isArray(loc) && Array.isArray(size) && loc.length !== size.length) {
      problems.set("Tumor location", "location and size lists must have equal length");
    }
  }
  return problems;
}
