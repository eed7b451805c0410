/**
 * Client-side oriented-box math, matching the server's conventions: y grows
 * downward, angles are radians, and boxes are canonical under the long-side
 * rule (w >= h, theta in [-pi/4, 3pi/4), squares folded into [-pi/4, pi/4)).
 */

import type { Box, Point } from "./types.js";

const QUARTER_PI = Math.PI / 4;
const CONTAINS_SLACK = 1e-9;

/** Euclidean remainder; JS `%` keeps the dividend's sign, this never does. */
function mod(x: number, m: number): number {
  return ((x % m) + m) % m;
}

export function normalizeBox(raw: Box): Box {
  let { cx, cy, w, h, theta } = raw;
  for (const v of [cx, cy, w, h, theta]) {
    if (!Number.isFinite(v)) throw new Error(`non-finite box field: ${v}`);
  }
  if (w <= 0 || h <= 0) {
    throw new Error(`box sides must be positive, got ${w} x ${h}`);
  }
  if (w < h) {
    [w, h] = [h, w];
    theta += Math.PI / 2;
  }
  theta = mod(theta + QUARTER_PI, Math.PI) - QUARTER_PI;
  if (w - h <= 1e-12 * Math.max(1, w) && theta >= QUARTER_PI) {
    theta -= Math.PI / 2;
  }
  return { cx, cy, w, h, theta };
}

/** Corner points, clockwise on screen, top-left first at theta = 0. */
export function verticesOf(box: Box): [Point, Point, Point, Point] {
  const c = Math.cos(box.theta);
  const s = Math.sin(box.theta);
  const hw = box.w / 2;
  const hh = box.h / 2;
  const local: Point[] = [
    [-hw, -hh],
    [hw, -hh],
    [hw, hh],
    [-hw, hh],
  ];
  const out = local.map(
    ([lx, ly]): Point => [box.cx + lx * c - ly * s, box.cy + lx * s + ly * c],
  );
  return [out[0]!, out[1]!, out[2]!, out[3]!];
}

/** Point-in-box test with 1e-9 slack so edges count as inside. */
export function containsPoint(box: Box, p: Point): boolean {
  const c = Math.cos(box.theta);
  const s = Math.sin(box.theta);
  const dx = p[0] - box.cx;
  const dy = p[1] - box.cy;
  const lx = dx * c + dy * s;
  const ly = -dx * s + dy * c;
  return (
    Math.abs(lx) <= box.w / 2 + CONTAINS_SLACK &&
    Math.abs(ly) <= box.h / 2 + CONTAINS_SLACK
  );
}

/** Same center and orientation, each side grown by 2 * margin. */
export function inflated(box: Box, margin: number): Box {
  return normalizeBox({
    cx: box.cx,
    cy: box.cy,
    w: box.w + 2 * margin,
    h: box.h + 2 * margin,
    theta: box.theta,
  });
}

export function translated(box: Box, dx: number, dy: number): Box {
  return { ...box, cx: box.cx + dx, cy: box.cy + dy };
}
