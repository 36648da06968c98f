// Pixel <-> data coordinate mapping for the chart area.

export interface PlotArea {
  left: number;
  top: number;
  width: number;
  height: number;
  tMax: number; // last timestep index (L - 1)
  yMin: number;
  yMax: number;
}

export function dataToPixel(area: PlotArea, t: number, v: number): { x: number; y: number } {
  const x = area.left + (t / area.tMax) * area.width;
  const y = area.top + (1 - (v - area.yMin) / (area.yMax - area.yMin)) * area.height;
  return { x, y };
}

export function pixelToData(area: PlotArea, x: number, y: number): { t: number; v: number } {
  const t = ((x - area.left) / area.width) * area.tMax;
  const v = area.yMin + (1 - (y - area.top) / area.height) * (area.yMax - area.yMin);
  return { t, v };
}

/** Click position to an anchor cell: snap t to the nearest integer step. */
export function snapToStep(area: PlotArea, x: number, y: number): { t: number; v: number } | null {
  if (x < area.left || x > area.left + area.width || y < area.top || y > area.top + area.height) {
    return null; // outside the plot, ignore
  }
  const { t, v } = pixelToData(area, x, y);
  const snapped = Math.round(t);
  if (snapped < 0 || snapped > area.tMax) return null;
  return { t: snapped, v };
}

/** Error-bar half-height in pixels for an anchor of confidence w. */
export function errorBarHalfHeight(area: PlotArea, w: number): number {
  return ((1 - w) * area.height) / (area.yMax - area.yMin);
}
