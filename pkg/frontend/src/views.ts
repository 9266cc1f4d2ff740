// DOM layer. Deliberately thin: all state lives in ReviewSession, all
// decisions in schema.ts, so the logic is testable without a browser.

import { ApiError } from "./api.js";
import { segments } from "./highlight.js";
import {
  FIELD_KEYS,
  NOT_MENTIONED,
  RECORD_FIELDS,
  isNotMentioned,
  type FieldSpec,
} from "./schema.js";
import { ReviewSession } from "./session.js";
import type { RecordValue } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  node.append(...children);
  return node;
}

export class App {
  private root: HTMLElement;

  constructor(private session: ReviewSession, rootId = "app") {
    const root = document.getElementById(rootId);
    if (!root) {
      throw new Error(`no #${rootId} element`);
    }
    this.root = root;
  }

  start(): void {
    this.renderUpload();
  }

  private clear(): void {
    this.root.replaceChildren();
  }

  private banner(text: string, kind: "error" | "info" = "error"): HTMLElement {
    return el("div", { class: `banner ${kind}` }, text);
  }

  // -- upload view ----------------------------------------------------------

  renderUpload(message?: string): void {
    this.clear();
    const textarea = el("textarea", {
      rows: "10",
      placeholder: "Paste the operative narrative, or choose a file below.",
    });
    const fileInput = el("input", { type: "file", accept: ".txt,text/plain" });
    fileInput.addEventListener("change", async () => {
      const file = fileInput.files?.[0];
      if (file) {
        textarea.value = await file.text();
      }
    });

    const backendPicker = el("select", { "data-role": "backend" });
    for (const backend of ["rule", "remote", "llm"]) {
      backendPicker.append(el("option", { value: backend }, backend));
    }
    backendPicker.value = this.session.backend;
    const normalizeToggle = el("input", { type: "checkbox", "data-role": "normalize" });

    const status = el("ul", { class: "stages" });
    const submit = el("button", {}, "Upload and extract");
    submit.addEventListener("click", async () => {
      const text = textarea.value;
      if (!text.trim()) {
        status.replaceChildren(el("li", { class: "error" }, "The transcript is empty."));
        return;
      }
      this.session.backend = backendPicker.value as never;
      this.session.normalize = normalizeToggle.checked;
      submit.setAttribute("disabled", "disabled");
      status.replaceChildren(el("li", {}, "uploading…"));
      try {
        const stored = await this.session.uploadAndExtract(text);
        for (const stage of stored.pipeline_trace) {
          status.append(el("li", {}, `${stage.stage}: ${stage.duration_ms.toFixed(1)} ms`));
        }
        this.renderReview();
      } catch (error) {
        submit.removeAttribute("disabled");
        const detail =
          error instanceof ApiError
            ? `${error.status}: ${JSON.stringify(error.body)}`
            : String(error);
        status.replaceChildren(
          el("li", { class: "error" }, `Extraction failed — ${detail}`),
          el("li", {}, "Fix the problem and retry."),
        );
      }
    });

    this.root.append(
      el("h1", {}, "Operation record review"),
      message ? this.banner(message, "info") : "",
      el("section", { class: "card" },
        el("h2", {}, "1. Transcript"),
        textarea,
        el("div", { class: "row" }, "or upload a file: ", fileInput),
        el("div", { class: "row" },
          el("label", {}, "backend: ", backendPicker),
          el("label", {}, " normalize mixed-language text ", normalizeToggle),
        ),
        submit,
        status,
      ),
    );
  }

  // -- review view -----------------------------------------------------------

  renderReview(): void {
    this.clear();
    const session = this.session;
    if (!session.stored) {
      this.renderUpload("Nothing loaded yet.");
      return;
    }

    const header = el("div", { class: "row" },
      el("h1", {}, "2. Review extracted record"),
      el("span", { class: "meta", "data-role": "version" },
        `record ${session.stored.record_id} · version ${session.version}` +
        `${session.stored.edited_by_human ? " · edited" : ""}`),
    );

    const transcript = el("p", { class: "transcript" });
    for (const segment of segments(session.transcriptText, session.spans())) {
      transcript.append(
        segment.tag
          ? el("mark", { class: "tag", title: segment.tag, "data-tag": segment.tag }, segment.text)
          : segment.text,
      );
    }

    const form = el("div", { class: "form" });
    for (const spec of RECORD_FIELDS) {
      form.append(this.fieldRow(spec));
    }

    const conflictBox = el("div", { "data-role": "conflict" });
    const saveButton = el("button", { "data-role": "save" }, "Save");
    const refreshSave = () => {
      if (session.canSave) {
        saveButton.removeAttribute("disabled");
      } else {
        saveButton.setAttribute("disabled", "disabled");
      }
    };
    refreshSave();
    form.addEventListener("change", refreshSave);
    form.addEventListener("input", refreshSave);

    saveButton.addEventListener("click", async () => {
      const updated = await session.save();
      if (updated) {
        this.renderReview();
        return;
      }
      if (session.conflict) {
        const reload = el("button", {}, "Reload latest and merge my edits");
        reload.addEventListener("click", async () => {
          await session.reloadAndMerge();
          this.renderReview();
        });
        conflictBox.replaceChildren(
          this.banner(session.conflict.message),
          reload,
        );
      }
    });

    this.root.append(
      header,
      el("section", { class: "card" }, el("h2", {}, "Transcript"), transcript),
      el("section", { class: "card" }, el("h2", {}, "Record"), form, saveButton, conflictBox),
      this.imageSection(),
      el("button", { "data-role": "back" }, "Start over"),
    );
    this.root.querySelector('[data-role="back"]')!
      .addEventListener("click", () => this.renderUpload());
  }

  private fieldRow(spec: FieldSpec): HTMLElement {
    const session = this.session;
    const value = session.fieldValue(spec.key);
    const mentioned = !isNotMentioned(value);

    const toggle = el("input", { type: "checkbox", "data-role": `mention:${spec.key}` });
    toggle.checked = mentioned;

    const editor = this.editorFor(spec, value, mentioned);
    toggle.addEventListener("change", () => {
      if (!toggle.checked) {
        session.setField(spec.key, NOT_MENTIONED);
      } else {
        session.setField(spec.key, this.defaultFor(spec));
      }
      this.swapRow(spec);
    });

    const problems = session.problems();
    const row = el("div", { class: "field", "data-field": spec.key },
      el("label", { class: "field-name" }, toggle, ` ${spec.key}`),
      editor,
    );
    const problem = problems.get(spec.key);
    if (problem) {
      row.append(el("span", { class: "error" }, problem));
    }
    return row;
  }

  private swapRow(spec: FieldSpec): void {
    const old = this.root.querySelector(`[data-field="${CSS.escape(spec.key)}"]`);
    if (old) {
      old.replaceWith(this.fieldRow(spec));
    }
  }

  private defaultFor(spec: FieldSpec): RecordValue {
    switch (spec.kind) {
      case "int":
        return 1;
      case "text":
        return "";
      case "enum":
        return spec.options?.[0] ?? "";
      case "laterality-list":
        return [spec.options?.[0] ?? "Left"];
      case "size-list":
        return [1.0];
    }
  }

  private editorFor(spec: FieldSpec, value: RecordValue, mentioned: boolean): HTMLElement {
    const session = this.session;
    if (!mentioned) {
      return el("span", { class: "not-mentioned" }, NOT_MENTIONED);
    }
    switch (spec.kind) {
      case "int": {
        const input = el("input", { type: "number", min: "1", "data-role": `edit:${spec.key}` });
        input.value = String(value ?? "");
        input.addEventListener("input", () =>
          session.setField(spec.key, input.valueAsNumber));
        return input;
      }
      case "text": {
        const input = el("input", { type: "text", "data-role": `edit:${spec.key}` });
        input.value = typeof value === "string" ? value : "";
        input.addEventListener("input", () => session.setField(spec.key, input.value));
        return input;
      }
      case "enum": {
        const select = el("select", { "data-role": `edit:${spec.key}` });
        for (const option of spec.options ?? []) {
          select.append(el("option", { value: option }, option));
        }
        if (typeof value === "string" && spec.options?.includes(value) === false) {
          select.append(el("option", { value }, value)); // OTHER(text) escape
        }
        select.value = typeof value === "string" ? value : spec.options?.[0] ?? "";
        select.addEventListener("change", () => session.setField(spec.key, select.value));
        return select;
      }
      case "laterality-list":
      case "size-list": {
        const wrap = el("div", { class: "list-editor", "data-role": `edit:${spec.key}` });
        const items = Array.isArray(value) ? [...value] : [];
        const renderItems = () => {
          wrap.replaceChildren();
          items.forEach((item, index) => {
            let input: HTMLInputElement | HTMLSelectElement;
            if (spec.kind === "laterality-list") {
              input = el("select", {});
              for (const option of spec.options ?? []) {
                input.append(el("option", { value: option }, option));
              }
              input.value = String(item);
              input.addEventListener("change", () => {
                items[index] = input.value;
                session.setField(spec.key, [...items] as RecordValue);
              });
            } else {
              input = el("input", { type: "number", step: "0.1", min: "0.1" });
              input.value = String(item);
              input.addEventListener("input", () => {
                items[index] = (input as HTMLInputElement).valueAsNumber;
                session.setField(spec.key, [...items] as RecordValue);
              });
            }
            const remove = el("button", { class: "mini" }, "−");
            remove.addEventListener("click", () => {
              items.splice(index, 1);
              session.setField(spec.key, [...items] as RecordValue);
              renderItems();
            });
            wrap.append(el("div", { class: "list-row" }, input, remove));
          });
          const add = el("button", { class: "mini" }, "+");
          add.addEventListener("click", () => {
            items.push(spec.kind === "laterality-list" ? (spec.options?.[0] ?? "Left") : 1.0);
            session.setField(spec.key, [...items] as RecordValue);
            renderItems();
          });
          wrap.append(add);
        };
        renderItems();
        return wrap;
      }
    }
  }

  // -- image view --------------------------------------------------------------

  private imageSection(): HTMLElement {
    const session = this.session;
    const holder = el("div", { class: "image-holder", "data-role": "image" });
    const section = el("section", { class: "card" },
      el("h2", {}, "3. Anatomy figure"),
      holder,
    );
    const load = async () => {
      try {
        holder.innerHTML = await session.currentImage();
      } catch {
        const retry = el("button", {}, "Retry");
        retry.addEventListener("click", load);
        holder.replaceChildren(this.banner("The figure could not be loaded."), retry);
      }
    };
    void load();
    const download = el("a", {
      href: session.imageUrl(),
      download: `record-${session.stored?.record_id ?? "unknown"}.svg`,
    }, "Download SVG");
    section.append(el("div", { class: "row" }, download));
    return section;
  }
}

export function fieldCount(): number {
  return FIELD_KEYS.length;
}
