// Wire schema shared with the engine. Field names and shapes must match
// the server's constraint JSON exactly; zod gives us client-side checks
// with the same failure points the server would report.

import { z } from "zod";

export const pointSchema = z.object({
  t: z.number().int().min(0),
  v: z.number(),
  c: z.number().int().min(0),
  w: z.number().min(0).max(1),
});

export const trendSchema = z.object({
  knots: z.array(z.tuple([z.number().int().min(0), z.number()])).min(2),
  c: z.number().int().min(0),
  w: z.number().min(0).max(1),
});

export const segmentSchema = z.object({
  s: z.number().int().min(0),
  e: z.number().int().min(0),
  c: z.number().int().min(0),
  stat: z.enum(["sum", "avg"]),
  target: z.number(),
  beta: z.number().min(0),
  w: z.number().min(0).max(1),
});

export const constraintSetSchema = z.object({
  points: z.array(pointSchema),
  trends: z.array(trendSchema),
  segments: z.array(segmentSchema),
  lambdas: z.tuple([z.number().min(0), z.number().min(0), z.number().min(0)]),
});

export type Point = z.infer<typeof pointSchema>;
export type Trend = z.infer<typeof trendSchema>;
export type Segment = z.infer<typeof segmentSchema>;
export type ConstraintSet = z.infer<typeof constraintSetSchema>;

export function emptyConstraints(): ConstraintSet {
  return { points: [], trends: [], segments: [], lambdas: [1, 1, 1] };
}

/** Validate and return the JSON payload the service accepts, or throw. */
export function serializeConstraints(cs: ConstraintSet): ConstraintSet {
  return constraintSetSchema.parse(cs);
}

export function parseConstraints(raw: unknown): ConstraintSet {
  return constraintSetSchema.parse(raw);
}
