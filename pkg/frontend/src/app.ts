/** Viewer orchestration, independent of the DOM.
 *
 * The App owns the state, derives exactly one request per user action
 * through the latest-wins policy, and pushes results to a Display. main.ts
 * binds it to real DOM controls; tests bind it to recorders.
 */

import { FetchLike, Frame, LatestWins, RequestError } from "./requests.js";
import {
  Mode,
  ViewerState,
  clickToCenter,
  initialState,
  requestUrl,
  withA,
  withCenter,
  withZoom,
} from "./state.js";

export interface Meta {
  width: number;
  height: number;
  pair: string;
}

export interface Display {
  setMeta(meta: Meta): void;
  /** newest frame to show; `warning` non-null for degenerate close-ups */
  showFrame(frame: Frame): void;
  showError(message: string): void;
  clearError(): void;
  updateReadouts(state: ViewerState): void;
}

export interface AppOptions {
  fetchImpl: FetchLike;
  display: Display;
  /** retry delay sequence (ms) while the backend is unreachable */
  backoff?: number[];
  sleep?: (ms: number) => Promise<void>;
}

const DEFAULT_BACKOFF = [500, 1000, 2000, 4000];

export class App {
  state: ViewerState = initialState();
  meta: Meta | null = null;
  private requests: LatestWins;
  private display: Display;
  private fetchImpl: FetchLike;
  private backoff: number[];
  private sleep: (ms: number) => Promise<void>;

  constructor(options: AppOptions) {
    this.fetchImpl = options.fetchImpl;
    this.display = options.display;
    this.requests = new LatestWins(options.fetchImpl);
    this.backoff = options.backoff ?? DEFAULT_BACKOFF;
    this.sleep = options.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
  }

  /** Fetch /api/meta, retrying with backoff while the backend is down. */
  async init(): Promise<Meta> {
    for (let attempt = 0; ; attempt++) {
      try {
        const response = await this.fetchImpl("/api/meta");
        if (!response.ok) throw new Error(`HTTP ${response.status}`);
        this.meta = (await response.json()) as Meta;
        this.display.clearError();
        this.display.setMeta(this.meta);
        await this.refresh();
        return this.meta;
      } catch (err) {
        const delay = this.backoff[Math.min(attempt, this.backoff.length - 1)];
        this.display.showError(`backend unreachable, retrying in ${delay} ms`);
        await this.sleep(delay);
      }
    }
  }

  async onSliderChange(which: "a" | "z", value: number): Promise<void> {
    this.state = which === "a" ? withA(this.state, value) : withZoom(this.state, value);
    await this.refresh();
  }

  /** Click inside the image sets the zoom center (and enters closeup mode
   * when coming from view mode); clicks outside are ignored. */
  async onCanvasClick(px: number, py: number): Promise<void> {
    if (!this.meta) return;
    const center = clickToCenter(px, py, this.meta.width, this.meta.height);
    if (center === null) return;
    this.state = withCenter(this.state, center.cx, center.cy);
    if (this.state.mode === "view") {
      this.state = { ...this.state, mode: "closeup" };
    }
    await this.refresh();
  }

  async setMode(mode: Mode): Promise<void> {
    this.state = { ...this.state, mode };
    await this.refresh();
  }

  /** Issue the request for the current state; stale responses are dropped
   * inside LatestWins, so the display only ever advances to newer frames. */
  async refresh(): Promise<void> {
    this.display.updateReadouts(this.state);
    const url = requestUrl(this.state);
    let frame: Frame | null;
    try {
      frame = await this.requests.issue(url);
    } catch (err) {
      const message = err instanceof RequestError ? err.message : String(err);
      this.display.showError(message);
      return;
    }
    if (frame === null) return; // superseded by a newer request
    this.display.clearError();
    this.state = { ...this.state, lastWarning: frame.warning };
    this.display.updateReadouts(this.state);
    this.display.showFrame(frame);
  }
}
