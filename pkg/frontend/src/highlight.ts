// Splits transcript text into plain and tagged segments for span highlighting.

import type { SpanOut } from "./types.js";

export interface Segment {
  text: string;
  tag: string | null;
}

export function segments(text: string, spans: SpanOut[]): Segment[] {
  const ordered = [...spans].sort((a, b) => a.start - b.start);
  const out: Segment[] = [];
  let pos = 0;
  for (const span of ordered) {
    if (span.start < pos || span.end > text.length) {
      continue; // overlapping or out-of-range spans are skipped, never thrown
    }
    if (span.start > pos) {
      out.push({ text: text.slice(pos, span.start), tag: null });
    }
    out.push({ text: text.slice(span.start, span.end), tag: span.tag });
    pos = span.end;
  }
  if (pos < text.length) {
    out.push({ text: text.slice(pos), tag: null });
  }
  return out;
}
