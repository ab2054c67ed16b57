/** JSON-lines stream client over fetch, with reconnect and backoff. */

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface StreamHandle {
  /** Resolves when the stream has fully stopped (closed or cancelled). */
  done: Promise<void>;
  stop(): void;
}

export interface StreamOptions {
  fetchFn?: FetchLike;
  /** Reconnect on errors and unexpected drops. Default true. */
  reconnect?: boolean;
  /** Backoff schedule in ms; the last entry repeats. */
  backoffMs?: number[];
  onConnectionChange?: (state: "connected" | "reconnecting" | "closed") => void;
  /** Treat a clean server-side end as final (no reconnect). Default true. */
  endIsFinal?: boolean;
}

const DEFAULT_BACKOFF = [250, 500, 1000, 2000];

function sleep(ms: number, aborted: () => boolean): Promise<void> {
  return new Promise((resolve) => {
    const tick = () => {
      if (aborted()) return resolve();
      resolve();
    };
    setTimeout(tick, ms);
  });
}

/**
 * Open `url` and invoke `onLine` with each parsed JSON line. Lines may be
 * split across network chunks; partial trailing data is buffered. Malformed
 * lines are skipped.
 */
export function streamJsonLines(
  url: string,
  onLine: (line: unknown) => void,
  options: StreamOptions = {},
): StreamHandle {
  const fetchFn = options.fetchFn ?? fetch;
  const reconnect = options.reconnect ?? true;
  const backoff = options.backoffMs ?? DEFAULT_BACKOFF;
  const endIsFinal = options.endIsFinal ?? true;
  let stopped = false;
  let attempt = 0;
  let activeReader: ReadableStreamDefaultReader<Uint8Array> | null = null;

  const pump = async (): Promise<void> => {
    while (!stopped) {
      try {
        const resp = await fetchFn(url);
        if (!resp.ok || resp.body === null) {
          throw new Error(`stream request failed: ${resp.status}`);
        }
        options.onConnectionChange?.("connected");
        attempt = 0;
        const reader = resp.body.getReader();
        activeReader = reader;
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (stopped) {
            await reader.cancel().catch(() => undefined);
            activeReader = null;
            return;
          }
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          let nl = buffer.indexOf("\n");
          while (nl >= 0) {
            const raw = buffer.slice(0, nl).trim();
            buffer = buffer.slice(nl + 1);
            if (raw.length > 0) {
              try {
                onLine(JSON.parse(raw));
              } catch {
                // skip malformed line
              }
            }
            nl = buffer.indexOf("\n");
          }
        }
        activeReader = null;
        if (endIsFinal) {
          options.onConnectionChange?.("closed");
          return;
        }
      } catch {
        activeReader = null;
        // fall through to reconnect
      }
      if (!reconnect || stopped) {
        options.onConnectionChange?.("closed");
        return;
      }
      options.onConnectionChange?.("reconnecting");
      const wait = backoff[Math.min(attempt, backoff.length - 1)];
      attempt += 1;
      await sleep(wait, () => stopped);
    }
    options.onConnectionChange?.("closed");
  };

  const done = pump();
  return {
    done,
    stop() {
      stopped = true;
      // Unpark any pending read so the pump can observe the stop flag.
      activeReader?.cancel().catch(() => undefined);
    },
  };
}
