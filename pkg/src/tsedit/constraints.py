"""Constraint vocabulary and mask compilation.

Point anchors, trend curves and segment statistics are user intent; this
module turns them into the two arrays the sampler consumes: an observed
canvas (target values where constrained, zeros elsewhere) and a float
mask in [0,1] per cell. Trend curves are interpolated to per-step point
anchors first; masks of different granularities are merged by a convex
reweighting. Cells carry at most one target; an explicit point wins over
a trend-derived one on the same cell.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np


class ConstraintError(ValueError):
    """Invalid constraint content (bad index, duplicate cell, bad schema)."""


@dataclass(frozen=True)
class PointConstraint:
    t: int
    value: float
    channel: int = 0
    confidence: float = 1.0


@dataclass(frozen=True)
class TrendConstraint:
    knots: tuple  # ((t, value), ...) with strictly increasing integer times
    channel: int = 0
    confidence: float = 1.0


@dataclass(frozen=True)
class SegmentConstraint:
    start: int
    end: int  # inclusive
    target: float
    channel: int = 0
    stat: str = "sum"  # "sum" | "avg"
    weight: float = 1.0  # guidance weight on the squared penalty
    confidence: float = 1.0

    @property
    def width(self):
        return self.end - self.start + 1


@dataclass
class ObservedCanvas:
    """Target values plus their confidences, zeros where unconstrained."""

    values: np.ndarray  # (L, D)
    mask: np.ndarray  # (L, D) in [0, 1]

    def is_empty(self):
        return not self.mask.any()


@dataclass
class MaskBundle:
    local: np.ndarray
    segment: np.ndarray
    global_: np.ndarray
    lambdas: tuple = (1.0, 1.0, 1.0)


@dataclass
class ConstraintSet:
    points: list = field(default_factory=list)
    trends: list = field(default_factory=list)
    segments: list = field(default_factory=list)
    lambdas: tuple = (1.0, 1.0, 1.0)
    global_mask: np.ndarray = None  # optional whole-series confidence mask

    def is_empty(self):
        return not (self.points or self.trends or self.segments or self.global_mask is not None)


def _check_cell(t, c, L, D, what):
    if not (0 <= t < L):
        raise ConstraintError(f"{what}: time index {t} outside [0, {L})")
    if not (0 <= c < D):
        raise ConstraintError(f"{what}: channel {c} outside [0, {D})")


def compile_points(points, L, D):
    """Place point anchors on an (L, D) canvas; duplicates are an error."""
    values = np.zeros((L, D))
    mask = np.zeros((L, D))
    seen = set()
    for i, p in enumerate(points):
        _check_cell(p.t, p.channel, L, D, f"point #{i}")
        if not (0.0 <= p.confidence <= 1.0):
            raise ConstraintError(f"point #{i}: confidence {p.confidence} outside [0, 1]")
        cell = (p.t, p.channel)
        if cell in seen:
            raise ConstraintError(f"point #{i}: duplicate constraint at t={p.t}, channel={p.channel}")
        seen.add(cell)
        values[cell] = p.value
        mask[cell] = p.confidence
    return ObservedCanvas(values=values, mask=mask)


def interpolate_trend(trend):
    """Expand a trend curve into per-step point anchors.

    Piecewise-linear between consecutive knots; knot steps themselves get
    the knot value exactly.
    """
    knots = list(trend.knots)
    if len(knots) < 2:
        raise ConstraintError("a trend needs at least two knots")
    times = [int(k[0]) for k in knots]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConstraintError(f"trend knot times must be strictly increasing, got {times}")
    points = []
    for (t_s, v_s), (t_e, v_e) in zip(knots, knots[1:]):
        t_s, t_e = int(t_s), int(t_e)
        start = t_s if not points else t_s + 1  # shared knot emitted once
        for t in range(start, t_e + 1):
            if t == t_s:
                value = v_s  # knot steps carry the knot value exactly
            elif t == t_e:
                value = v_e
            else:
                value = v_s + (t - t_s) / (t_e - t_s) * (v_e - v_s)
            points.append(
                PointConstraint(t=t, value=value, channel=trend.channel, confidence=trend.confidence)
            )
    return points


def combine_masks(bundle):
    """Convex reweighting of the local/segment/global masks."""
    lam = tuple(float(v) for v in bundle.lambdas)
    if any(v < 0 for v in lam):
        raise ConstraintError(f"mask weights must be nonnegative, got {lam}")
    total = sum(lam)
    if total <= 0.0:
        raise ConstraintError("at least one mask weight must be positive")
    return (lam[0] * bundle.local + lam[1] * bundle.segment + lam[2] * bundle.global_) / total


def time_weight(t, total_steps, gamma):
    """exp(-gamma * t / T): strongest control near the end of denoising (t -> 0)."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    return math.exp(-gamma * t / total_steps)


def adjust_mask(mask, x0_hat, canvas, rho):
    """Raise the mask at constrained cells in proportion to prediction error.

    The update is clamped to [mask, 1], so confidences only grow, and
    unconstrained cells (mask == 0) are never touched.
    """
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    active = (mask > 0.0) & (canvas.mask > 0.0)
    if not active.any():
        return mask.copy()
    err = np.minimum(1.0, np.abs(x0_hat - canvas.values))
    out = mask.copy()
    out[active] = np.clip(mask[active] + rho * err[active], mask[active], 1.0)
    return out


def compile_constraints(cs, L, D):
    """Build the merged canvas and combined float mask for a constraint set.

    Points form the local mask, trend-derived anchors the segment mask,
    and an optional user-supplied whole-series mask the global one. Mask
    granularities that are entirely absent drop out of the reweighting so
    a lone w=1 anchor keeps mask 1 rather than being diluted.
    """
    local_canvas = compile_points(cs.points, L, D)
    trend_points = []
    for trend in cs.trends:
        _check_cell(trend.knots[0][0], trend.channel, L, D, "trend")
        _check_cell(trend.knots[-1][0], trend.channel, L, D, "trend")
        trend_points.extend(interpolate_trend(trend))
    trend_canvas = compile_points(trend_points, L, D)

    for i, s in enumerate(cs.segments):
        _check_cell(s.start, s.channel, L, D, f"segment #{i}")
        _check_cell(s.end, s.channel, L, D, f"segment #{i}")
        if s.end < s.start:
            raise ConstraintError(f"segment #{i}: end {s.end} before start {s.start}")
        if s.weight < 0:
            raise ConstraintError(f"segment #{i}: weight {s.weight} must be >= 0")
        if s.stat not in ("sum", "avg"):
            raise ConstraintError(f"segment #{i}: unknown stat {s.stat!r}")

    global_mask = np.zeros((L, D)) if cs.global_mask is None else np.asarray(cs.global_mask, dtype=float)
    if global_mask.shape != (L, D):
        raise ConstraintError(f"global mask shape {global_mask.shape} does not match ({L}, {D})")
    if global_mask.min() < 0.0 or global_mask.max() > 1.0:
        raise ConstraintError("global mask entries must lie in [0, 1]")

    # explicit points win where a trend crosses an anchored cell
    values = trend_canvas.values.copy()
    conf = trend_canvas.mask.copy()
    anchored = local_canvas.mask > 0.0
    values[anchored] = local_canvas.values[anchored]
    conf[anchored] = local_canvas.mask[anchored]
    canvas = ObservedCanvas(values=values, mask=conf)

    lam = list(cs.lambdas)
    for i, m in enumerate((local_canvas.mask, trend_canvas.mask, global_mask)):
        if not m.any():
            lam[i] = 0.0
    if sum(lam) <= 0.0:
        combined = np.zeros((L, D))
    else:
        combined = combine_masks(
            MaskBundle(local=local_canvas.mask, segment=trend_canvas.mask, global_=global_mask, lambdas=tuple(lam))
        )
        # a whole-series mask modulates constraint strength; it must not
        # drag valueless cells toward the canvas zeros
        combined *= conf > 0.0
    return canvas, combined


# -- wire schema --------------------------------------------------------------
#
# { "points":   [{"t": int, "v": float, "c": int, "w": float}, ...],
#   "trends":   [{"knots": [[int, float], ...], "c": int, "w": float}, ...],
#   "segments": [{"s": int, "e": int, "c": int, "stat": "sum"|"avg",
#                 "target": float, "beta": float, "w": float}, ...],
#   "lambdas":  [float, float, float] }


def _coerce(v, path, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConstraintError(f"{path}: expected a number, got {type(v).__name__}")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConstraintError(f"{path}: expected an integer, got {v}")
        return int(v)
    return float(v)


def _num(obj, key, path, default=None, integer=False):
    if key not in obj:
        if default is not None:
            return default
        raise ConstraintError(f"{path}.{key}: missing required field")
    return _coerce(obj[key], f"{path}.{key}", integer=integer)


def parse_constraints(obj):
    """Parse the shared JSON schema into a ConstraintSet.

    Accepts a dict or a JSON string; raises ConstraintError naming the
    offending field path.
    """
    if isinstance(obj, (str, bytes)):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise ConstraintError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConstraintError(f"constraints must be an object, got {type(obj).__name__}")
    unknown = set(obj) - {"points", "trends", "segments", "lambdas"}
    if unknown:
        raise ConstraintError(f"unknown fields: {sorted(unknown)}")

    points = []
    for i, p in enumerate(obj.get("points", []) or []):
        path = f"points[{i}]"
        if not isinstance(p, dict):
            raise ConstraintError(f"{path}: expected an object")
        points.append(
            PointConstraint(
                t=_num(p, "t", path, integer=True),
                value=_num(p, "v", path),
                channel=_num(p, "c", path, integer=True),
                confidence=_num(p, "w", path),
            )
        )
    trends = []
    for i, tr in enumerate(obj.get("trends", []) or []):
        path = f"trends[{i}]"
        if not isinstance(tr, dict):
            raise ConstraintError(f"{path}: expected an object")
        raw = tr.get("knots")
        if not isinstance(raw, list) or len(raw) < 2:
            raise ConstraintError(f"{path}.knots: expected a list of at least two [t, v] pairs")
        knots = []
        for j, kv in enumerate(raw):
            if not isinstance(kv, list) or len(kv) != 2:
                raise ConstraintError(f"{path}.knots[{j}]: expected a [t, v] pair")
            knots.append(
                (
                    _coerce(kv[0], f"{path}.knots[{j}][0]", integer=True),
                    _coerce(kv[1], f"{path}.knots[{j}][1]"),
                )
            )
        trends.append(
            TrendConstraint(
                knots=tuple(knots),
                channel=_num(tr, "c", path, integer=True),
                confidence=_num(tr, "w", path),
            )
        )
    segments = []
    for i, s in enumerate(obj.get("segments", []) or []):
        path = f"segments[{i}]"
        if not isinstance(s, dict):
            raise ConstraintError(f"{path}: expected an object")
        stat = s.get("stat", "sum")
        if stat not in ("sum", "avg"):
            raise ConstraintError(f'{path}.stat: expected "sum" or "avg", got {stat!r}')
        segments.append(
            SegmentConstraint(
                start=_num(s, "s", path, integer=True),
                end=_num(s, "e", path, integer=True),
                channel=_num(s, "c", path, integer=True),
                stat=stat,
                target=_num(s, "target", path),
                weight=_num(s, "beta", path, default=1.0),
                confidence=_num(s, "w", path, default=1.0),
            )
        )
    lambdas = obj.get("lambdas", [1.0, 1.0, 1.0])
    if not isinstance(lambdas, list) or len(lambdas) != 3:
        raise ConstraintError("lambdas: expected a list of three numbers")
    lambdas = tuple(_coerce(v, f"lambdas[{i}]") for i, v in enumerate(lambdas))
    return ConstraintSet(points=points, trends=trends, segments=segments, lambdas=lambdas)


def serialize_constraints(cs):
    """ConstraintSet back to the wire schema (inverse of parse_constraints)."""
    return {
        "points": [
            {"t": p.t, "v": p.value, "c": p.channel, "w": p.confidence} for p in cs.points
        ],
        "trends": [
            {"knots": [[t, v] for t, v in tr.knots], "c": tr.channel, "w": tr.confidence}
            for tr in cs.trends
        ],
        "segments": [
            {
                "s": s.start,
                "e": s.end,
                "c": s.channel,
                "stat": s.stat,
                "target": s.target,
                "beta": s.weight,
                "w": s.confidence,
            }
            for s in cs.segments
        ],
        "lambdas": list(cs.lambdas),
    }
