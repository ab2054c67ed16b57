/** Test doubles: JSON-lines responses and a route-based fetch mock. */

import type { FetchLike } from "../src/stream.js";

export interface LinesOptions {
  /** Delay in ms before each line is delivered. */
  delayMs?: number;
  /** Byte size to split the payload into, to exercise partial-line buffering. */
  chunkBytes?: number;
  /** Keep the stream open after the last line until aborted. */
  stayOpen?: boolean;
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export function linesResponse(lines: unknown[], options: LinesOptions = {}): Response {
  const encoder = new TextEncoder();
  const stream = new ReadableStream<Uint8Array>({
    async start(controller) {
      for (const line of lines) {
        if (options.delayMs) await sleep(options.delayMs);
        const payload = encoder.encode(JSON.stringify(line) + "\n");
        if (options.chunkBytes) {
          for (let i = 0; i < payload.length; i += options.chunkBytes) {
            controller.enqueue(payload.slice(i, i + options.chunkBytes));
          }
        } else {
          controller.enqueue(payload);
        }
      }
      if (!options.stayOpen) {
        controller.close();
      }
    },
  });
  return new Response(stream, {
    status: 200,
    headers: { "content-type": "application/jsonl" },
  });
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

export interface FetchMock {
  fetchFn: FetchLike;
  requests: RecordedRequest[];
}

/** Routes map a path suffix to a response factory; requests are recorded. */
export function mockFetch(
  routes: Record<string, (req: RecordedRequest) => Response | Promise<Response>>,
): FetchMock {
  const requests: RecordedRequest[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    const req: RecordedRequest = {
      url,
      method: init?.method ?? "GET",
      body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
    };
    requests.push(req);
    for (const [suffix, factory] of Object.entries(routes)) {
      if (url.endsWith(suffix)) {
        return factory(req);
      }
    }
    return jsonResponse({ detail: "not found" }, 404);
  };
  return { fetchFn, requests };
}
