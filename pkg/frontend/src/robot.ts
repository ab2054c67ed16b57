/** View model for the robot visualization pane. */

import type { RobotState } from "./types.js";

export interface RobotView {
  led: [number, number, number];
  head: { pitch: number; roll: number; yaw: number };
  arms: { left: number; right: number };
  expression: string;
  speechTail: string[];
  recording: boolean;
  photoCount: number;
}

const SPEECH_TAIL = 5;

export function toRobotView(state: RobotState): RobotView {
  return {
    led: [state.led[0], state.led[1], state.led[2]],
    head: { ...state.head },
    arms: { ...state.arms },
    expression: state.expression,
    speechTail: state.speech_log.slice(-SPEECH_TAIL),
    recording: state.recording.video,
    photoCount: state.recording.photo_count,
  };
}

export function ledCss(led: [number, number, number]): string {
  return `rgb(${led[0]}, ${led[1]}, ${led[2]})`;
}

export function isEventsLine(
  value: unknown,
): value is { type: "event" | "state" } {
  if (typeof value !== "object" || value === null) return false;
  const t = (value as { type?: unknown }).type;
  return t === "event" || t === "state";
}
