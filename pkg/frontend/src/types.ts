/**
 * Wire types for the annotation service, with zod schemas so every payload
 * crossing the HTTP boundary is shape-checked before the editor touches it.
 *
 * The JSON layout mirrors the server's canonical serialization exactly:
 * boxes are {cx, cy, w, h, theta}, objects carry id/class/box/score and an
 * optional keypoints pair, texts carry id/box/content.
 */

import { z } from "zod";

export const DIAGRAM_KINDS = ["ownership", "organization"] as const;
export type DiagramKind = (typeof DIAGRAM_KINDS)[number];

export const OBJECT_CLASSES = ["node", "line", "bus"] as const;
export type ObjectClass = (typeof OBJECT_CLASSES)[number];

export const BoxSchema = z.object({
  cx: z.number().finite(),
  cy: z.number().finite(),
  w: z.number().finite(),
  h: z.number().finite(),
  theta: z.number().finite(),
});
export type Box = z.infer<typeof BoxSchema>;

export type Point = readonly [number, number];
const PointSchema = z.tuple([z.number().finite(), z.number().finite()]);

export const KeypointsSchema = z.object({
  start: PointSchema,
  end: PointSchema,
});
export type Keypoints = z.infer<typeof KeypointsSchema>;

export const DiagramObjectSchema = z.object({
  id: z.number().int(),
  class: z.enum(OBJECT_CLASSES),
  box: BoxSchema,
  score: z.number(),
  keypoints: KeypointsSchema.nullish().transform((v) => v ?? null),
});
export type DiagramObject = z.infer<typeof DiagramObjectSchema>;

export const TextBlockSchema = z.object({
  id: z.number().int(),
  box: BoxSchema,
  content: z.string(),
});
export type TextBlock = z.infer<typeof TextBlockSchema>;

export const AnnotationSetSchema = z.object({
  diagram_id: z.string(),
  kind: z.enum(DIAGRAM_KINDS),
  width: z.number().positive(),
  height: z.number().positive(),
  objects: z.array(DiagramObjectSchema),
  texts: z.array(TextBlockSchema),
});
export type AnnotationSet = z.infer<typeof AnnotationSetSchema>;

// ------------------------------------------------------------ API payloads

export const DiagramSummarySchema = z.object({
  diagram_id: z.string(),
  kind: z.enum(DIAGRAM_KINDS),
  width: z.number(),
  height: z.number(),
  version: z.number().int(),
});
export type DiagramSummary = z.infer<typeof DiagramSummarySchema>;

export const DiagramDocSchema = DiagramSummarySchema.extend({
  annotations: AnnotationSetSchema,
});
export type DiagramDoc = z.infer<typeof DiagramDocSchema>;

export const AnnotationsDocSchema = z.object({
  diagram_id: z.string(),
  version: z.number().int(),
  annotations: AnnotationSetSchema,
});
export type AnnotationsDoc = z.infer<typeof AnnotationsDocSchema>;

export const SaveResponseSchema = z.object({
  diagram_id: z.string(),
  version: z.number().int(),
});
export type SaveResponse = z.infer<typeof SaveResponseSchema>;

export const RevisionInfoSchema = z.object({
  version: z.number().int(),
  author: z.string(),
  note: z.string().nullable(),
  acknowledged_violations: z.number().int(),
});
export type RevisionInfo = z.infer<typeof RevisionInfoSchema>;

export const ViolationSchema = z.object({
  object_id: z.number().int().nullable(),
  rule: z.string(),
  message: z.string(),
});
export type Violation = z.infer<typeof ViolationSchema>;

export const TupleSchema = z.union([
  z.object({
    kind: z.literal("ownership"),
    owner: z.string(),
    percentage: z.number().nullable(),
    owned: z.string(),
  }),
  z.object({
    kind: z.literal("organization"),
    supervisor: z.string(),
    subordinate: z.string(),
  }),
]);
export type RelationTuple = z.infer<typeof TupleSchema>;

export const TuplesDocSchema = z.object({
  diagram_id: z.string(),
  kind: z.enum(DIAGRAM_KINDS),
  tuples: z.array(TupleSchema),
  diagnostics: z.record(z.unknown()),
});
export type TuplesDoc = z.infer<typeof TuplesDocSchema>;

const CountsSchema = z.object({
  tp: z.number(),
  fp: z.number(),
  fn: z.number(),
  precision: z.number(),
  recall: z.number(),
  f1: z.number(),
});

export const EvaluationDocSchema = z.object({
  diagram_id: z.string(),
  detection: z.object({
    iou_threshold: z.number(),
    classes: z.record(z.unknown()),
    map: z.number(),
    keypoints: CountsSchema.partial().passthrough(),
  }),
  tuples: CountsSchema,
});
export type EvaluationDoc = z.infer<typeof EvaluationDocSchema>;

// -------------------------------------------------------- canonical JSON

function sortValue(v: unknown): unknown {
  if (Array.isArray(v)) return v.map(sortValue);
  if (v !== null && typeof v === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(v as Record<string, unknown>).sort()) {
      out[key] = sortValue((v as Record<string, unknown>)[key]);
    }
    return out;
  }
  return v;
}

/** Key-sorted compact JSON; two sets are the same iff these strings match. */
export function canonicalJson(value: unknown): string {
  return JSON.stringify(sortValue(value));
}

export function cloneSet(s: AnnotationSet): AnnotationSet {
  return structuredClone(s);
}
