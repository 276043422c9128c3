/** Pure rendering: data in, HTML string out. The DOM glue in main.ts only
 * assigns these strings, which keeps every visual decision testable. */

import type { CellDoc, KnowledgeRecord } from "./api.js";

export const TABLE_COLUMNS = [
  "chr",
  "interval",
  "REF",
  "ALT",
  "GT",
  "PL",
  "AD",
  "DP",
] as const;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function cellRow(cell: CellDoc): string[] {
  return [
    cell.chr,
    `[${cell.start}, ${cell.end}]`,
    cell.ref,
    cell.alt.join(", "),
    cell.gt ?? ".",
    cell.pl ? cell.pl.join(", ") : ".",
    cell.ad ? cell.ad.join(", ") : ".",
    cell.dp !== undefined ? `[${cell.dp}]` : ".",
  ];
}

export function renderVariantTable(cells: CellDoc[]): string {
  if (cells.length === 0) {
    return `<p class="placeholder">no variants in region</p>`;
  }
  const head = TABLE_COLUMNS.map((c) => `<th>${c}</th>`).join("");
  const rows = cells
    .map(
      (cell) =>
        `<tr title="${esc(cell.sample)}">` +
        cellRow(cell)
          .map((v) => `<td>${esc(v)}</td>`)
          .join("") +
        `</tr>`,
    )
    .join("\n");
  return `<table class="variants"><thead><tr>${head}</tr></thead><tbody>\n${rows}\n</tbody></table>`;
}

export function renderKnowledgePanel(records: KnowledgeRecord[]): string {
  if (records.length === 0) {
    return `<p class="placeholder">knowledge store has no keys in region</p>`;
  }
  const rows = records
    .map(
      (r) =>
        `<tr><td>${esc(r.chr)}:${r.pos}</td><td>${esc(r.ref)}&gt;${esc(r.alt)}</td>` +
        `<td>${r.ac}</td><td>${r.an}</td><td>${r.af.toFixed(4)}</td><td>${r.sites}</td></tr>`,
    )
    .join("\n");
  return (
    `<table class="knowledge"><thead><tr><th>position</th><th>allele</th>` +
    `<th>AC</th><th>AN</th><th>AF</th><th>sites</th></tr></thead><tbody>\n${rows}\n</tbody></table>`
  );
}

export interface Banner {
  kind: "error" | "token";
  code: string;
  message: string;
}

export function bannerFor(status: number, code: string, message: string): Banner {
  if (status === 401 || status === 403) {
    return {
      kind: "token",
      code,
      message: "access denied: enter an API token to continue",
    };
  }
  return { kind: "error", code, message };
}

export function renderBanner(banner: Banner | null): string {
  if (banner === null) return "";
  const body =
    banner.kind === "token"
      ? `${esc(banner.message)} <input id="token-input" type="password" placeholder="API token">`
      : esc(banner.message);
  return (
    `<div class="banner banner-${banner.kind}"><strong>${esc(banner.code)}</strong> ` +
    `${body} <button class="dismiss">dismiss</button></div>`
  );
}

export function renderTimingBadge(
  roundTripMs: number | null,
  renderMs: number | null,
): string {
  if (roundTripMs === null || renderMs === null) return "";
  return (
    `<span class="timing">round trip ${roundTripMs.toFixed(1)} ms, ` +
    `render ${renderMs.toFixed(1)} ms</span>`
  );
}

export function renderPager(
  offset: number,
  limit: number,
  total: number,
): string {
  if (total <= limit && offset === 0) return "";
  const page = Math.floor(offset / limit) + 1;
  const pages = Math.max(1, Math.ceil(total / limit));
  const prev = offset > 0 ? "" : "disabled";
  const next = offset + limit < total ? "" : "disabled";
  return (
    `<button id="page-prev" ${prev}>prev</button>` +
    `<span>page ${page} of ${pages} (${total} cells)</span>` +
    `<button id="page-next" ${next}>next</button>`
  );
}
