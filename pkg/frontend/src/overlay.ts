/**
 * SVG overlay markup for the review canvas, generated in native diagram
 * coordinates (same viewBox as the rendered SVG) so display zoom never
 * touches stored geometry. Pure string builders; the DOM mount is the
 * app's job.
 *
 * Class colors follow the review convention: nodes green, connecting
 * lines blue, buses red.
 */

import { verticesOf } from "./geometry.js";
import type {
  AnnotationSet,
  DiagramObject,
  ObjectClass,
  TextBlock,
} from "./types.js";

export const CLASS_COLORS: Record<ObjectClass, string> = {
  node: "#1f9d55",
  line: "#2b6cd4",
  bus: "#d23c3c",
};

const HANDLE_SIZE = 7;
const TEXT_COLOR = "#8a56c9";

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(v: number): string {
  return Number(v.toFixed(3)).toString();
}

function pointsAttr(obj: { box: DiagramObject["box"] }): string {
  return verticesOf(obj.box)
    .map(([x, y]) => `${fmt(x)},${fmt(y)}`)
    .join(" ");
}

export function objectOverlay(obj: DiagramObject, selected: boolean): string {
  const color = CLASS_COLORS[obj.class];
  const parts: string[] = [];
  parts.push(
    `<polygon class="obj-outline" data-id="${obj.id}" points="${pointsAttr(obj)}" ` +
      `fill="${color}" fill-opacity="${selected ? 0.18 : 0.07}" ` +
      `stroke="${color}" stroke-width="${selected ? 2 : 1.2}"/>`,
  );
  if (selected) {
    for (const [x, y] of verticesOf(obj.box)) {
      parts.push(
        `<rect class="handle" data-id="${obj.id}" x="${fmt(x - HANDLE_SIZE / 2)}" ` +
          `y="${fmt(y - HANDLE_SIZE / 2)}" width="${HANDLE_SIZE}" height="${HANDLE_SIZE}" ` +
          `fill="#ffffff" stroke="${color}" stroke-width="1.5"/>`,
      );
    }
  }
  if (obj.keypoints !== null) {
    const { start, end } = obj.keypoints;
    parts.push(
      `<circle class="kp kp-start" data-id="${obj.id}" cx="${fmt(start[0])}" ` +
        `cy="${fmt(start[1])}" r="4" fill="none" stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(
      `<circle class="kp kp-end" data-id="${obj.id}" cx="${fmt(end[0])}" ` +
        `cy="${fmt(end[1])}" r="4" fill="${color}"/>`,
    );
  }
  return `<g class="object ${obj.class}">${parts.join("")}</g>`;
}

export function textOverlay(tb: TextBlock, selected: boolean): string {
  return (
    `<g class="text-block"><polygon class="text-outline" data-id="${tb.id}" ` +
    `points="${pointsAttr(tb)}" fill="none" stroke="${TEXT_COLOR}" ` +
    `stroke-width="${selected ? 1.6 : 0.9}" stroke-dasharray="4 3">` +
    `<title>${esc(tb.content)}</title></polygon></g>`
  );
}

export function legend(): string {
  const rows = (Object.keys(CLASS_COLORS) as ObjectClass[]).map((cls, i) => {
    const y = 14 + i * 18;
    return (
      `<rect x="8" y="${y - 9}" width="12" height="12" fill="${CLASS_COLORS[cls]}"/>` +
      `<text x="26" y="${y + 1}" font-size="12" fill="currentColor">${cls}</text>`
    );
  });
  return `<g class="legend">${rows.join("")}</g>`;
}

/** Inner markup of the overlay <svg>; same width/height/viewBox as the scene. */
export function buildOverlay(s: AnnotationSet, selectedId: number | null): string {
  const parts: string[] = [];
  for (const obj of s.objects) {
    parts.push(objectOverlay(obj, obj.id === selectedId));
  }
  for (const tb of s.texts) {
    parts.push(textOverlay(tb, tb.id === selectedId));
  }
  return parts.join("");
}
