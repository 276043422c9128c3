/** DOM glue: reads the form, drives ApiClient, assigns rendered HTML. */

import { ApiClient, ApiError } from "./api.js";
import {
  initialForm,
  toQueryBody,
  validateForm,
  type QueryFormState,
} from "./state.js";
import {
  bannerFor,
  renderBanner,
  renderKnowledgePanel,
  renderPager,
  renderTimingBadge,
  renderVariantTable,
  type Banner,
} from "./render.js";

const client = new ApiClient("..");
const form: QueryFormState = initialForm();
let banner: Banner | null = null;
let lastTotal = 0;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el;
}

function input(id: string): HTMLInputElement {
  return $(id) as HTMLInputElement;
}

function readForm(): void {
  form.array = input("f-array").value;
  form.contig = input("f-contig").value;
  form.start = input("f-start").value;
  form.end = input("f-end").value;
  form.samples = input("f-samples").value;
  for (const a of ["gt", "pl", "ad", "dp"] as const) {
    form.attrs[a] = input(`f-attr-${a}`).checked;
  }
  form.limit = Number(input("f-limit").value) || 100;
}

function paintBanner(): void {
  $("banner-slot").innerHTML = renderBanner(banner);
  const dismiss = document.querySelector(".banner .dismiss");
  dismiss?.addEventListener("click", () => {
    banner = null;
    paintBanner();
  });
  const tokenInput = document.getElementById("token-input");
  tokenInput?.addEventListener("change", (ev) => {
    client.setToken((ev.target as HTMLInputElement).value || null);
    banner = null;
    paintBanner();
  });
}

function fail(err: unknown): void {
  if (err instanceof ApiError) {
    banner = bannerFor(err.status, err.code, err.message);
  } else if ((err as Error).name === "AbortError") {
    return; // superseded by a newer query
  } else {
    banner = bannerFor(0, "NetworkError", String(err));
  }
  $("timing-slot").innerHTML = renderTimingBadge(null, null);
  paintBanner();
}

async function runQuery(): Promise<void> {
  readForm();
  const problems = validateForm(form);
  if (problems.length > 0) {
    banner = bannerFor(0, "InvalidForm", problems.join("; "));
    paintBanner();
    return;
  }
  banner = null;
  paintBanner();
  const t0 = performance.now();
  try {
    const result = await client.queryArray(form.array, toQueryBody(form));
    const t1 = performance.now();
    lastTotal = result.total;
    $("table-slot").innerHTML = renderVariantTable(result.cells);
    $("pager-slot").innerHTML = renderPager(form.offset, form.limit, result.total);
    const t2 = performance.now();
    $("timing-slot").innerHTML = renderTimingBadge(t1 - t0, t2 - t1);
    wirePager();
  } catch (err) {
    fail(err);
  }
}

function wirePager(): void {
  document.getElementById("page-prev")?.addEventListener("click", () => {
    form.offset = Math.max(0, form.offset - form.limit);
    void runQuery();
  });
  document.getElementById("page-next")?.addEventListener("click", () => {
    if (form.offset + form.limit < lastTotal) form.offset += form.limit;
    void runQuery();
  });
}

async function runKnowledge(): Promise<void> {
  readForm();
  const problems = validateForm(form);
  if (problems.length > 0) {
    banner = bannerFor(0, "InvalidForm", problems.join("; "));
    paintBanner();
    return;
  }
  try {
    const records = await client.queryKnowledge(
      form.contig.trim(),
      Number(form.start),
      Number(form.end),
    );
    $("knowledge-slot").innerHTML = renderKnowledgePanel(records);
  } catch (err) {
    fail(err);
  }
}

$("query-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  form.offset = 0;
  void runQuery();
});
$("knowledge-toggle").addEventListener("click", () => {
  const slot = $("knowledge-slot");
  if (slot.hidden) {
    slot.hidden = false;
    void runKnowledge();
  } else {
    slot.hidden = true; // variant table is left untouched
  }
});
