import { describe, expect, it } from "vitest";

import { segments } from "../src/highlight.js";
import {
  FIELD_KEYS,
  NOT_MENTIONED,
  RECORD_FIELDS,
  emptyRecord,
  isNotMentioned,
  recordProblems,
} from "../src/schema.js";

describe("schema", () => {
  it("models all 22 classes with unique keys", () => {
    expect(RECORD_FIELDS).toHaveLength(22);
    expect(new Set(FIELD_KEYS).size).toBe(22);
  });

  it("empty record is entirely not mentioned and valid", () => {
    const record = emptyRecord();
    for (const key of FIELD_KEYS) {
      expect(isNotMentioned(record[key])).toBe(true);
    }
    expect(recordProblems(record).size).toBe(0);
  });

  it("treats the sentinel case-insensitively", () => {
    expect(isNotMentioned("Not Mentioned")).toBe(true);
    expect(isNotMentioned(NOT_MENTIONED)).toBe(true);
    expect(isNotMentioned("Inserted")).toBe(false);
  });

  it("flags bad values per kind", () => {
    const record = emptyRecord();
    record["Age"] = 0;
    record["Tumor size"] = [];
    record["Diagnosis name"] = "   ";
    const problems = recordProblems(record);
    expect(problems.has("Age")).toBe(true);
    expect(problems.has("Tumor size")).toBe(true);
    expect(problems.has("Diagnosis name")).toBe(true);
  });
});

describe("highlight segmentation", () => {
  const text = "A 50-year-old female patient was seen.";

  it("splits around spans and preserves the full text", () => {
    const spans = [{ tag: "PAT", start: 2, end: 20, surface: "50-year-old female" }];
    const parts = segments(text, spans);
    expect(parts.map((p) => p.text).join("")).toBe(text);
    expect(parts.filter((p) => p.tag === "PAT")).toHaveLength(1);
  });

  it("ignores malformed spans instead of throwing", () => {
    const spans = [
      { tag: "PAT", start: 2, end: 20, surface: "x" },
      { tag: "DXN", start: 10, end: 15, surface: "overlap" },
      { tag: "DNT", start: 900, end: 1000, surface: "beyond" },
    ];
    const parts = segments(text, spans);
    expect(parts.map((p) => p.text).join("")).toBe(text);
    expect(parts.filter((p) => p.tag !== null)).toHaveLength(1);
  });

  it("handles empty span lists", () => {
    expect(segments(text, [])).toEqual([{ text, tag: null }]);
  });
});
