// Editor state: the constraint list mirrored to the wire schema, the
// channel being edited, and the series overlay (previous vs latest).

import { ConstraintSet, Point, Segment, Trend, emptyConstraints, serializeConstraints } from "./schema.js";

export interface EditorState {
  constraints: ConstraintSet;
  channel: number;
  seed: number | null; // null lets the server pick
  seqLen: number;
  channels: number;
  latest: number[][] | null; // (L, D) row-major
  previous: number[][] | null;
  pending: boolean; // a regenerate is in flight
}

export function initialState(seqLen: number, channels: number): EditorState {
  return {
    constraints: emptyConstraints(),
    channel: 0,
    seed: 0,
    seqLen,
    channels,
    latest: null,
    previous: null,
    pending: false,
  };
}

/** Add an anchor; a second anchor on the same (t, channel) replaces the first. */
export function placeAnchor(state: EditorState, t: number, v: number, confidence: number): void {
  const point: Point = { t, v, c: state.channel, w: confidence };
  const points = state.constraints.points.filter((p) => !(p.t === t && p.c === point.c));
  points.push(point);
  points.sort((a, b) => a.t - b.t || a.c - b.c);
  state.constraints.points = points;
}

export function removeAnchor(state: EditorState, t: number, channel: number): void {
  state.constraints.points = state.constraints.points.filter((p) => !(p.t === t && p.c === channel));
}

export function addTrend(state: EditorState, trend: Trend): void {
  // one trend per channel keeps the preview unambiguous; replace any prior
  state.constraints.trends = state.constraints.trends.filter((tr) => tr.c !== trend.c);
  state.constraints.trends.push(trend);
}

export function addSegment(state: EditorState, segment: Segment): void {
  state.constraints.segments.push(segment);
}

export function clearConstraints(state: EditorState): void {
  state.constraints = emptyConstraints();
}

/** The exact JSON body for POST /sessions/{id}/edit (validated). */
export function editRequestBody(state: EditorState, n = 1): Record<string, unknown> {
  const body: Record<string, unknown> = {
    constraints: serializeConstraints(state.constraints),
    n,
  };
  if (state.seed !== null) body.seed = state.seed;
  return body;
}

/** Swap in a fresh generation, dimming the previous one. */
export function acceptSeries(state: EditorState, series: number[][]): void {
  state.previous = state.latest;
  state.latest = series;
}

/** Rendered residual label for an anchor, from the service response. */
export function residualLabel(residual: number): string {
  return residual.toFixed(4);
}
