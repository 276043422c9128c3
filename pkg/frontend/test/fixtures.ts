import type { CellDoc } from "../src/api.js";

/** The 11 reference rows for sample S0 on contig 1, sorted by position. */
export const CONSOLE_CELLS: CellDoc[] = [
  { pos: 100000222, ref: "C", alt: "T", pl: [641, 0, 480], ad: [19, 23], dp: 43 },
  { pos: 100000722, ref: "G", alt: "A", pl: [225, 0, 303], ad: [12, 9], dp: 21 },
  { pos: 100000873, ref: "G", alt: "GT", pl: [204, 0, 194], ad: [10, 9], dp: 22 },
  { pos: 100001395, ref: "G", alt: "C", pl: [244, 0, 287], ad: [12, 10], dp: 22 },
  { pos: 100002781, ref: "A", alt: "AT", pl: [124, 0, 40], ad: [3, 6], dp: 13 },
  { pos: 100003003, ref: "A", alt: "G", pl: [226, 0, 173], ad: [7, 9], dp: 16 },
  { pos: 100003059, ref: "C", alt: "T", pl: [247, 0, 138], ad: [6, 9], dp: 15 },
  { pos: 100003415, ref: "C", alt: "CAA", pl: [58, 0, 75], ad: [2, 2], dp: 7 },
  { pos: 100003455, ref: "G", alt: "A", pl: [41, 0, 391], ad: [12, 2], dp: 15 },
  { pos: 100005167, ref: "T", alt: "G", pl: [100, 0, 141], ad: [5, 4], dp: 9 },
  { pos: 100005774, ref: "G", alt: "A", pl: [446, 0, 496], ad: [19, 17], dp: 36 },
].map((r) => ({
  chr: "1",
  start: r.pos,
  end: r.pos + r.ref.length - 1,
  ref: r.ref,
  alt: [r.alt],
  sample: "S0",
  gt: "0/1",
  pl: r.pl,
  ad: r.ad,
  dp: r.dp,
}));

export function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: async () => body,
  } as unknown as Response;
}
