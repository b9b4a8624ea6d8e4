import { describe, expect, it } from "vitest";

import {
  A_DETENTS,
  clampZoom,
  clickToCenter,
  initialState,
  requestUrl,
  withA,
  withCenter,
  withZoom,
} from "../src/state.js";

describe("state clamping", () => {
  it("clamps a into [0, 1]", () => {
    expect(withA(initialState(), 1.5).a).toBe(1);
    expect(withA(initialState(), -0.2).a).toBe(0);
    expect(withA(initialState(), 0.42).a).toBe(0.42);
  });

  it("clamps zoom to >= 1", () => {
    expect(withZoom(initialState(), 0.3).z).toBe(1);
    expect(clampZoom(Number.NaN)).toBe(1);
  });

  it("clamps center into the unit square", () => {
    const s = withCenter(initialState(), 1.4, -0.1);
    expect(s.center).toEqual({ cx: 1, cy: 0 });
  });
});

describe("click mapping", () => {
  it("maps the image midpoint to (0.5, 0.5)", () => {
    expect(clickToCenter(48, 32, 96, 64)).toEqual({ cx: 0.5, cy: 0.5 });
  });

  it("maps the top-left corner to (0, 0)", () => {
    expect(clickToCenter(0, 0, 96, 64)).toEqual({ cx: 0, cy: 0 });
  });

  it("ignores clicks outside the image", () => {
    expect(clickToCenter(-3, 10, 96, 64)).toBeNull();
    expect(clickToCenter(10, 65, 96, 64)).toBeNull();
  });
});

describe("request URLs", () => {
  it("never contains out-of-range parameters", () => {
    let s = initialState();
    s = withA(s, 7);
    s = withZoom(s, -2);
    s = withCenter(s, 9, 9);
    s = { ...s, mode: "closeup" };
    const url = requestUrl(s);
    const params = new URLSearchParams(url.split("?")[1]);
    expect(Number(params.get("a"))).toBeLessThanOrEqual(1);
    expect(Number(params.get("z"))).toBeGreaterThanOrEqual(1);
    expect(Number(params.get("cx"))).toBeLessThanOrEqual(1);
    expect(Number(params.get("cy"))).toBeLessThanOrEqual(1);
  });

  it("builds the three endpoint shapes", () => {
    const s = initialState();
    expect(requestUrl(s)).toBe("/api/view?a=0.5");
    expect(requestUrl({ ...s, mode: "closeup" })).toBe(
      "/api/closeup?a=0.5&z=1&cx=0.5&cy=0.5",
    );
    expect(requestUrl({ ...s, mode: "flow-preview" })).toBe("/api/flow.png?dir=fwd");
  });

  it("exposes the standard detents", () => {
    expect(A_DETENTS).toEqual([0.25, 0.5, 0.75]);
  });
});
