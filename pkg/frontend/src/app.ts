/** Session attachment: wires the two server streams to the view panes. */

import type { EventsStreamLine, PlanDocument, SessionStreamLine } from "./types.js";
import { applyLine, initialView, isSessionLine, type SessionView } from "./transcript.js";
import { isEventsLine, toRobotView } from "./robot.js";
import { FeedbackControls } from "./controls.js";
import { streamJsonLines, type FetchLike, type StreamHandle } from "./stream.js";
import {
  renderBanner,
  renderGate,
  renderPlan,
  renderRobot,
  renderTranscript,
} from "./render.js";

export interface ConsolePanes {
  transcript: HTMLElement;
  plan: HTMLElement;
  robot: HTMLElement;
  controls: HTMLElement;
  banner: HTMLElement;
}

export interface AttachOptions {
  baseUrl?: string;
  fetchFn?: FetchLike;
}

export interface Attachment {
  controls: FeedbackControls;
  view(): SessionView;
  detach(): void;
  done: Promise<void>;
}

/**
 * Subscribe to `/sessions/{id}/stream` and `/events`, render records as they
 * arrive, and keep the feedback controls in sync with the gate.
 */
export async function attach(
  sessionId: string,
  panes: ConsolePanes,
  options: AttachOptions = {},
): Promise<Attachment> {
  const baseUrl = options.baseUrl ?? "";
  const fetchFn = options.fetchFn ?? fetch;
  const controls = new FeedbackControls(sessionId, { baseUrl, fetchFn });

  // A missing session is an immediate error banner rather than a retry loop.
  const probe = await fetchFn(`${baseUrl}/sessions/${sessionId}/transcript`);
  if (probe.status === 404) {
    renderBanner(panes.banner, `no such session: ${sessionId}`);
    throw new Error(`no such session: ${sessionId}`);
  }

  let view = initialView();
  let planShown = false;

  const maybeRenderPlan = async (): Promise<void> => {
    if (planShown) return;
    const resp = await fetchFn(`${baseUrl}/sessions/${sessionId}/plan`);
    if (resp.ok) {
      renderPlan(panes.plan, (await resp.json()) as PlanDocument);
      planShown = true;
    }
  };

  const onSessionLine = (raw: unknown): void => {
    if (!isSessionLine(raw)) return;
    const line = raw as SessionStreamLine;
    view = applyLine(view, line);
    if (line.type === "record") {
      renderTranscript(panes.transcript, view.records);
      if (line.record.content.startsWith("plan: ")) {
        void maybeRenderPlan();
      }
    } else {
      controls.setGate(view.gate);
      renderGate(panes.controls, view.gate);
      if (line.type === "status") {
        renderBanner(panes.banner, `session ${line.status}`);
      }
    }
  };

  const onEventsLine = (raw: unknown): void => {
    if (!isEventsLine(raw)) return;
    const line = raw as EventsStreamLine;
    if (line.type === "state") {
      renderRobot(panes.robot, toRobotView(line.state));
    }
  };

  const sessionStream: StreamHandle = streamJsonLines(
    `${baseUrl}/sessions/${sessionId}/stream`,
    onSessionLine,
    {
      fetchFn,
      onConnectionChange: (state) =>
        renderBanner(panes.banner, state === "reconnecting" ? "reconnecting…" : null),
    },
  );
  const eventsStream: StreamHandle = streamJsonLines(
    `${baseUrl}/events`,
    onEventsLine,
    { fetchFn, endIsFinal: false },
  );

  return {
    controls,
    view: () => view,
    detach() {
      sessionStream.stop();
      eventsStream.stop();
    },
    done: sessionStream.done,
  };
}
