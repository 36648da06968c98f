import { describe, expect, it } from "vitest";

import { emptyConstraints, parseConstraints, serializeConstraints } from "../src/schema.js";
import { initialState, placeAnchor, addSegment, editRequestBody } from "../src/state.js";

describe("wire schema", () => {
  it("round-trips a full constraint set", () => {
    const cs = {
      points: [{ t: 3, v: 0.8, c: 0, w: 0.5 }],
      trends: [{ knots: [[0, 0.1], [9, 0.9]] as [number, number][], c: 1, w: 0.4 }],
      segments: [{ s: 2, e: 7, c: 0, stat: "sum" as const, target: 4.0, beta: 10.0, w: 1.0 }],
      lambdas: [1, 1, 1] as [number, number, number],
    };
    expect(parseConstraints(JSON.parse(JSON.stringify(serializeConstraints(cs))))).toEqual(cs);
  });

  it("rejects out-of-range confidence", () => {
    const cs = emptyConstraints();
    cs.points.push({ t: 0, v: 0.5, c: 0, w: 1.5 });
    expect(() => serializeConstraints(cs)).toThrow();
  });

  it("rejects non-integer time indices", () => {
    const cs = emptyConstraints();
    cs.points.push({ t: 2.5, v: 0.5, c: 0, w: 0.5 });
    expect(() => serializeConstraints(cs)).toThrow();
  });

  it("rejects single-knot trends", () => {
    expect(() =>
      parseConstraints({ points: [], trends: [{ knots: [[0, 1]], c: 0, w: 1 }], segments: [], lambdas: [1, 1, 1] }),
    ).toThrow();
  });

  it("rejects unknown stats", () => {
    expect(() =>
      parseConstraints({
        points: [],
        trends: [],
        segments: [{ s: 0, e: 3, c: 0, stat: "max", target: 1, beta: 1, w: 1 }],
        lambdas: [1, 1, 1],
      }),
    ).toThrow();
  });

  it("builds the exact edit request body the service expects", () => {
    const state = initialState(24, 5);
    placeAnchor(state, 5, 0.8, 1.0);
    addSegment(state, { s: 0, e: 23, c: 0, stat: "sum", target: 14, beta: 3, w: 1 });
    state.seed = 7;
    const body = editRequestBody(state) as {
      constraints: { points: unknown[]; segments: unknown[]; lambdas: number[] };
      seed: number;
      n: number;
    };
    expect(body.seed).toBe(7);
    expect(body.n).toBe(1);
    expect(body.constraints.points).toEqual([{ t: 5, v: 0.8, c: 0, w: 1.0 }]);
    expect(body.constraints.segments).toEqual([{ s: 0, e: 23, c: 0, stat: "sum", target: 14, beta: 3, w: 1 }]);
    expect(body.constraints.lambdas).toEqual([1, 1, 1]);
  });

  it("omits the seed when the server should pick one", () => {
    const state = initialState(24, 5);
    state.seed = null;
    expect("seed" in editRequestBody(state)).toBe(false);
  });
});
