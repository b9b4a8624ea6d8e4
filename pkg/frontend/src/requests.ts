/** Latest-wins request policy.
 *
 * Renders are idempotent and the backend is stateless, so when the user
 * scrubs a slider we only care about the newest value: every `issue` bumps a
 * generation counter and responses belonging to older generations are
 * dropped, never displayed. An AbortController additionally cancels stale
 * transfers when the runtime supports it.
 */

export interface Frame {
  url: string;
  body: ArrayBuffer;
  contentType: string;
  /** set when the backend answered 422 (degenerate segmentation) */
  warning: string | null;
}

export type FetchLike = (url: string, init?: { signal?: AbortSignal }) => Promise<Response>;

export class RequestError extends Error {
  constructor(message: string, readonly status: number | null) {
    super(message);
  }
}

interface JsonError {
  error?: string;
  message?: string;
  warning?: boolean;
  image_base64?: string;
}

function base64ToBytes(b64: string): ArrayBuffer {
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out.buffer;
}

export class LatestWins {
  private generation = 0;
  private controller: AbortController | null = null;

  constructor(private fetchImpl: FetchLike) {}

  /** Fetch `url`; resolves with a Frame for the newest request only.
   * Stale responses resolve to null (abandoned, not an error). */
  async issue(url: string): Promise<Frame | null> {
    const mine = ++this.generation;
    this.controller?.abort();
    this.controller = typeof AbortController !== "undefined" ? new AbortController() : null;
    let response: Response;
    try {
      response = await this.fetchImpl(url, { signal: this.controller?.signal });
    } catch (err) {
      if (mine !== this.generation) return null; // aborted by a newer request
      throw new RequestError(`backend unreachable: ${String(err)}`, null);
    }
    if (mine !== this.generation) return null;

    if (response.status === 422) {
      const payload = (await response.json()) as JsonError;
      if (mine !== this.generation) return null;
      return {
        url,
        body: payload.image_base64 ? base64ToBytes(payload.image_base64) : new ArrayBuffer(0),
        contentType: "image/png",
        warning: payload.message ?? "degenerate segmentation",
      };
    }
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const payload = (await response.json()) as JsonError;
        if (payload.message) detail = payload.message;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new RequestError(detail, response.status);
    }
    const body = await response.arrayBuffer();
    if (mine !== this.generation) return null;
    return { url, body, contentType: response.headers.get("Content-Type") ?? "", warning: null };
  }
}
