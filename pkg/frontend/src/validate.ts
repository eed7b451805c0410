/**
 * Client-side mirror of the server's annotation validation, so the save
 * button can be disabled before a doomed PUT. Rules, rule names, and
 * tolerances match the server; a set that passes here passes there.
 */

import { containsPoint, inflated, verticesOf } from "./geometry.js";
import type { AnnotationSet, Box, Violation } from "./types.js";

// canvas overhang and keypoint slack tolerated by the server
export const CANVAS_SLACK = 2.0;
export const SNAP_TOLERANCE = 3.0;

export function validateSet(s: AnnotationSet): Violation[] {
  const out: Violation[] = [];
  const seen = new Set<number>();
  for (const obj of s.objects) {
    if (seen.has(obj.id)) {
      out.push({
        object_id: obj.id,
        rule: "unique-ids",
        message: `object id ${obj.id} already used`,
      });
    }
    seen.add(obj.id);
  }
  for (const tb of s.texts) {
    if (seen.has(tb.id)) {
      out.push({
        object_id: tb.id,
        rule: "unique-ids",
        message: `text id ${tb.id} already used`,
      });
    }
    seen.add(tb.id);
  }

  const inCanvas = (box: Box): boolean =>
    verticesOf(box).every(
      ([x, y]) =>
        x >= -CANVAS_SLACK &&
        x <= s.width + CANVAS_SLACK &&
        y >= -CANVAS_SLACK &&
        y <= s.height + CANVAS_SLACK,
    );

  for (const obj of s.objects) {
    if (!inCanvas(obj.box)) {
      out.push({
        object_id: obj.id,
        rule: "box-in-canvas",
        message: "object box leaves the canvas",
      });
    }
    if (!(obj.score >= 0 && obj.score <= 1)) {
      out.push({
        object_id: obj.id,
        rule: "score-range",
        message: `score ${obj.score} outside [0, 1]`,
      });
    }
    if (obj.keypoints !== null) {
      if (obj.class !== "line") {
        out.push({
          object_id: obj.id,
          rule: "keypoints-line-only",
          message: `${obj.class} carries keypoints`,
        });
      } else {
        const { start, end } = obj.keypoints;
        if (start[0] === end[0] && start[1] === end[1]) {
          out.push({
            object_id: obj.id,
            rule: "keypoints-distinct",
            message: "start equals end",
          });
        }
        const roomy = inflated(obj.box, SNAP_TOLERANCE);
        for (const [label, p] of [
          ["start", start],
          ["end", end],
        ] as const) {
          if (!containsPoint(roomy, p)) {
            out.push({
              object_id: obj.id,
              rule: "keypoints-near-box",
              message: `${label} point lies outside the box inflated by ${SNAP_TOLERANCE}`,
            });
          }
        }
      }
    }
  }
  for (const tb of s.texts) {
    if (tb.content.trim() === "") {
      out.push({
        object_id: tb.id,
        rule: "text-nonempty",
        message: "text content is blank",
      });
    }
    if (!inCanvas(tb.box)) {
      out.push({
        object_id: tb.id,
        rule: "box-in-canvas",
        message: "text box leaves the canvas",
      });
    }
  }
  return out;
}
