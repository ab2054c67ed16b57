/** Wire shapes of the session service and robot event stream. */

export interface InteractionRecord {
  seq: number;
  actor: string;
  kind: string;
  content: string;
  misunderstood_flag: boolean;
}

export type SessionStreamLine =
  | { type: "record"; record: InteractionRecord }
  | { type: "gate"; open: boolean }
  | { type: "status"; status: string };

export interface RobotEvent {
  kind: string;
  payload: string;
  seq: number;
  timestamp: number;
}

export interface RobotState {
  led: [number, number, number];
  head: { pitch: number; roll: number; yaw: number };
  arms: { left: number; right: number };
  expression: string;
  speech_log: string[];
  recording: { video: boolean; photo_count: number };
  [extra: string]: unknown;
}

export type EventsStreamLine =
  | { type: "event"; event: RobotEvent }
  | { type: "state"; state: RobotState };

export interface PlanNode {
  id: string;
  description: string;
  agent: string;
  deps: string[];
}

export interface PlanDocument {
  subtasks: PlanNode[];
}

export type FeedbackKind = "preference" | "technical";
