/** Form state and client-side validation mirroring the server's 400 rules,
 * so the console never sends a request the API would reject for syntax. */

import type { QueryBody } from "./api.js";

export interface QueryFormState {
  array: string;
  contig: string;
  start: string; // raw field text; validated before submission
  end: string;
  samples: string; // comma separated, blank = all
  attrs: { gt: boolean; pl: boolean; ad: boolean; dp: boolean };
  offset: number;
  limit: number;
}

export const SERVER_LIMIT_CAP = 1000;

export function initialForm(): QueryFormState {
  return {
    array: "console",
    contig: "",
    start: "",
    end: "",
    samples: "",
    attrs: { gt: true, pl: true, ad: true, dp: true },
    offset: 0,
    limit: 100,
  };
}

export function validateForm(form: QueryFormState): string[] {
  const problems: string[] = [];
  if (form.array.trim() === "") problems.push("array name is required");
  if (form.contig.trim() === "") problems.push("contig is required");
  const start = Number(form.start);
  const end = Number(form.end);
  if (!Number.isInteger(start) || start < 1) {
    problems.push("start must be a positive integer (1-based)");
  }
  if (!Number.isInteger(end) || end < 1) {
    problems.push("end must be a positive integer (1-based)");
  }
  if (Number.isInteger(start) && Number.isInteger(end) && start > end) {
    problems.push("start must not exceed end");
  }
  if (!Number.isInteger(form.offset) || form.offset < 0) {
    problems.push("page offset must be a non-negative integer");
  }
  if (
    !Number.isInteger(form.limit) ||
    form.limit < 1 ||
    form.limit > SERVER_LIMIT_CAP
  ) {
    problems.push(`page limit must be in 1..${SERVER_LIMIT_CAP}`);
  }
  return problems;
}

export function toQueryBody(form: QueryFormState): QueryBody {
  const body: QueryBody = {
    contig: form.contig.trim(),
    start: Number(form.start),
    end: Number(form.end),
    page: { offset: form.offset, limit: form.limit },
  };
  const samples = form.samples
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s !== "");
  if (samples.length > 0) body.samples = samples;
  const attrs = (["gt", "pl", "ad", "dp"] as const).filter(
    (a) => form.attrs[a],
  );
  if (attrs.length < 4) body.attrs = attrs.map((a) => a.toUpperCase());
  return body;
}
