/** Viewer state and the request URLs derived from it.
 *
 * Everything here is pure so the request policy can be tested without a
 * browser. Parameters are clamped before URL construction: the backend
 * validates too, but the client must never issue an out-of-range request.
 */

export type Mode = "view" | "closeup" | "flow-preview";

export interface ViewerState {
  a: number;
  z: number;
  center: { cx: number; cy: number };
  mode: Mode;
  lastWarning: string | null;
}

/** Slider detents mirroring the standard evaluation operating points. */
export const A_DETENTS = [0.25, 0.5, 0.75];

export function initialState(): ViewerState {
  return { a: 0.5, z: 1.0, center: { cx: 0.5, cy: 0.5 }, mode: "view", lastWarning: null };
}

export function clamp01(v: number): number {
  if (Number.isNaN(v)) return 0;
  return Math.min(1, Math.max(0, v));
}

export function clampZoom(v: number): number {
  if (Number.isNaN(v)) return 1;
  return Math.max(1, v);
}

export function withA(state: ViewerState, a: number): ViewerState {
  return { ...state, a: clamp01(a) };
}

export function withZoom(state: ViewerState, z: number): ViewerState {
  return { ...state, z: clampZoom(z) };
}

export function withCenter(state: ViewerState, cx: number, cy: number): ViewerState {
  return { ...state, center: { cx: clamp01(cx), cy: clamp01(cy) } };
}

/** Map a canvas click to unit-square center fractions; null if outside. */
export function clickToCenter(
  px: number, py: number, width: number, height: number,
): { cx: number; cy: number } | null {
  if (px < 0 || py < 0 || px > width || py > height) return null;
  return { cx: clamp01(px / width), cy: clamp01(py / height) };
}

export function requestUrl(state: ViewerState): string {
  switch (state.mode) {
    case "view":
      return `/api/view?a=${state.a}`;
    case "closeup":
      return (
        `/api/closeup?a=${state.a}&z=${state.z}` +
        `&cx=${state.center.cx}&cy=${state.center.cy}`
      );
    case "flow-preview":
      return "/api/flow.png?dir=fwd";
  }
}
