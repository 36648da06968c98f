import { describe, expect, it } from "vitest";

import {
  acceptSeries,
  addTrend,
  clearConstraints,
  initialState,
  placeAnchor,
  removeAnchor,
  residualLabel,
} from "../src/state.js";

describe("editor state", () => {
  it("replaces an anchor dropped on the same step and channel", () => {
    const state = initialState(24, 5);
    placeAnchor(state, 5, 0.8, 0.5);
    placeAnchor(state, 5, 0.3, 0.9);
    expect(state.constraints.points).toEqual([{ t: 5, v: 0.3, c: 0, w: 0.9 }]);
  });

  it("keeps anchors on other channels", () => {
    const state = initialState(24, 5);
    placeAnchor(state, 5, 0.8, 0.5);
    state.channel = 2;
    placeAnchor(state, 5, 0.1, 1.0);
    expect(state.constraints.points).toHaveLength(2);
    removeAnchor(state, 5, 0);
    expect(state.constraints.points).toEqual([{ t: 5, v: 0.1, c: 2, w: 1.0 }]);
  });

  it("one trend per channel", () => {
    const state = initialState(24, 5);
    addTrend(state, { knots: [[0, 0], [23, 1]], c: 0, w: 0.9 });
    addTrend(state, { knots: [[0, 1], [23, 0]], c: 0, w: 0.5 });
    expect(state.constraints.trends).toHaveLength(1);
    expect(state.constraints.trends[0].w).toBe(0.5);
  });

  it("overlays: latest becomes previous on regenerate", () => {
    const state = initialState(4, 1);
    const a = [[0.1], [0.2], [0.3], [0.4]];
    const b = [[0.5], [0.6], [0.7], [0.8]];
    acceptSeries(state, a);
    acceptSeries(state, b);
    expect(state.previous).toBe(a);
    expect(state.latest).toBe(b);
  });

  it("clear resets everything", () => {
    const state = initialState(24, 5);
    placeAnchor(state, 3, 0.4, 0.5);
    clearConstraints(state);
    expect(state.constraints.points).toHaveLength(0);
    expect(state.constraints.lambdas).toEqual([1, 1, 1]);
  });

  it("a zero residual renders as a zero label", () => {
    expect(residualLabel(0)).toBe("0.0000");
    expect(residualLabel(0.12345)).toBe("0.1235");
  });
});
