/** Pure state reducer for a session stream: transcript, gate, and status. */

import type { InteractionRecord, SessionStreamLine } from "./types.js";

export interface SessionView {
  records: InteractionRecord[];
  gate: boolean;
  status: string;
}

export function initialView(): SessionView {
  return { records: [], gate: false, status: "running" };
}

/**
 * Apply one stream line. Records are kept in ascending seq order regardless
 * of arrival order, and a seq seen twice (stream replay after a reconnect)
 * is ignored.
 */
export function applyLine(view: SessionView, line: SessionStreamLine): SessionView {
  switch (line.type) {
    case "record": {
      const rec = line.record;
      if (view.records.some((r) => r.seq === rec.seq)) {
        return view;
      }
      const records = [...view.records];
      let at = records.length;
      while (at > 0 && records[at - 1].seq > rec.seq) {
        at -= 1;
      }
      records.splice(at, 0, rec);
      return { ...view, records };
    }
    case "gate":
      return { ...view, gate: line.open };
    case "status":
      // A final status also closes the gate: nothing is awaiting input.
      return { ...view, status: line.status, gate: false };
  }
}

export function isSessionLine(value: unknown): value is SessionStreamLine {
  if (typeof value !== "object" || value === null) return false;
  const t = (value as { type?: unknown }).type;
  return t === "record" || t === "gate" || t === "status";
}
