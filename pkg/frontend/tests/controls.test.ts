import { describe, expect, it } from "vitest";

import { FeedbackControls } from "../src/controls.js";
import { jsonResponse, mockFetch } from "./support.js";

function inputPosts(requests: { url: string; method: string }[]) {
  return requests.filter(
    (r) => r.method === "POST" && r.url.endsWith("/sessions/s1/input"),
  );
}

describe("feedback controls", () => {
  it("approve posts /input exactly once per gate opening", async () => {
    const { fetchFn, requests } = mockFetch({
      "/sessions/s1/input": () => jsonResponse({ ok: true }),
    });
    const controls = new FeedbackControls("s1", { fetchFn });
    controls.setGate(true);
    expect(await controls.approve()).toBe(true);
    // Gate has not reopened: further clicks are no-ops.
    expect(await controls.approve()).toBe(false);
    expect(await controls.approve()).toBe(false);
    expect(inputPosts(requests)).toHaveLength(1);
    expect(inputPosts(requests)[0].url).toBe("/sessions/s1/input");

    controls.setGate(true);
    expect(await controls.approve()).toBe(true);
    expect(inputPosts(requests)).toHaveLength(2);
  });

  it("gate-closed state disables submission entirely", async () => {
    const { fetchFn, requests } = mockFetch({
      "/sessions/s1/input": () => jsonResponse({ ok: true }),
    });
    const controls = new FeedbackControls("s1", { fetchFn });
    expect(controls.enabled).toBe(false);
    expect(await controls.approve()).toBe(false);
    expect(await controls.save()).toBe(false);
    expect(await controls.submitFeedback("louder please", "technical")).toBe(false);
    expect(requests).toHaveLength(0);
  });

  it("feedback carries its kind; save carries preferences", async () => {
    const { fetchFn, requests } = mockFetch({
      "/sessions/s1/input": () => jsonResponse({ ok: true }),
    });
    const controls = new FeedbackControls("s1", { fetchFn });
    controls.setGate(true);
    await controls.submitFeedback("use a calmer voice", "preference");
    controls.setGate(true);
    await controls.save("calm voice");
    expect(requests.map((r) => r.body)).toEqual([
      { text: "use a calmer voice", kind: "preference" },
      { text: "save: calm voice" },
    ]);
  });

  it("empty feedback is not sent", async () => {
    const { fetchFn, requests } = mockFetch({});
    const controls = new FeedbackControls("s1", { fetchFn });
    controls.setGate(true);
    expect(await controls.submitFeedback("   ", "technical")).toBe(false);
    expect(requests).toHaveLength(0);
  });

  it("a failed post re-enables the controls for a retry", async () => {
    let fail = true;
    const { fetchFn, requests } = mockFetch({
      "/sessions/s1/input": () => {
        const resp = fail ? jsonResponse({ detail: "boom" }, 500) : jsonResponse({ ok: true });
        fail = false;
        return resp;
      },
    });
    const controls = new FeedbackControls("s1", { fetchFn });
    controls.setGate(true);
    expect(await controls.approve()).toBe(false);
    expect(controls.enabled).toBe(true);
    expect(await controls.approve()).toBe(true);
    expect(requests).toHaveLength(2);
  });
});
