/** Gate-aware feedback submission: approve, save, and typed feedback. */

import type { FeedbackKind } from "./types.js";
import type { FetchLike } from "./stream.js";

export interface ControlsOptions {
  baseUrl?: string;
  fetchFn?: FetchLike;
}

/**
 * Serializes operator input to `POST /sessions/{id}/input`. At most one
 * submission is sent per gate opening: after a post, the controls lock until
 * the server reports the gate open again.
 */
export class FeedbackControls {
  private gateOpen = false;
  private pending = false;
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly sessionId: string,
    options: ControlsOptions = {},
  ) {
    this.baseUrl = options.baseUrl ?? "";
    this.fetchFn = options.fetchFn ?? fetch;
  }

  setGate(open: boolean): void {
    this.gateOpen = open;
    if (open) {
      this.pending = false;
    }
  }

  /** True when a submission would actually be sent. */
  get enabled(): boolean {
    return this.gateOpen && !this.pending;
  }

  approve(): Promise<boolean> {
    return this.post({ text: "approve" });
  }

  save(preferences?: string): Promise<boolean> {
    const text = preferences ? `save: ${preferences}` : "save";
    return this.post({ text });
  }

  submitFeedback(text: string, kind: FeedbackKind): Promise<boolean> {
    if (text.trim().length === 0) {
      return Promise.resolve(false);
    }
    return this.post({ text, kind });
  }

  private async post(body: { text: string; kind?: string }): Promise<boolean> {
    if (!this.enabled) {
      return false;
    }
    this.pending = true;
    const resp = await this.fetchFn(
      `${this.baseUrl}/sessions/${this.sessionId}/input`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      },
    );
    if (!resp.ok) {
      // Let the operator retry: the gate is still open server-side.
      this.pending = false;
      return false;
    }
    this.gateOpen = false;
    return true;
  }
}
