/**
 * Editing model for one loaded diagram. Every mutation snapshots the working
 * set, so undo and redo restore exact prior states, and the dirty flag is
 * computed by canonical equality against the last loaded or saved state
 * (editing back to the baseline counts as clean).
 *
 * Saving is the caller's job; the editor only says whether the working set
 * would pass server validation (save stays disabled otherwise).
 */

import { normalizeBox, translated } from "./geometry.js";
import {
  AnnotationSet,
  Box,
  DiagramObject,
  Keypoints,
  ObjectClass,
  OBJECT_CLASSES,
  Point,
  TextBlock,
  Violation,
  canonicalJson,
  cloneSet,
} from "./types.js";
import { validateSet } from "./validate.js";

export interface LoadedDiagram {
  annotations: AnnotationSet;
  version: number;
  svg?: string;
}

export class EditorError extends Error {}

export class EditorState {
  private working: AnnotationSet | null = null;
  private baseline = "";
  private undoStack: AnnotationSet[] = [];
  private redoStack: AnnotationSet[] = [];
  /** Server revision the working set is based on; sent as expected_version. */
  version = 0;
  selectedId: number | null = null;
  svg = "";

  get loaded(): boolean {
    return this.working !== null;
  }

  /** The live working set. Treat as read-only; mutate through the editor. */
  get annotations(): AnnotationSet {
    if (this.working === null) throw new EditorError("no diagram loaded");
    return this.working;
  }

  get dirty(): boolean {
    return this.working !== null && canonicalJson(this.working) !== this.baseline;
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  violations(): Violation[] {
    return this.working === null ? [] : validateSet(this.working);
  }

  /** Save stays disabled while the client-side validation mirror objects. */
  get canSave(): boolean {
    return this.working !== null && this.violations().length === 0;
  }

  load(doc: LoadedDiagram): void {
    this.working = cloneSet(doc.annotations);
    this.baseline = canonicalJson(this.working);
    this.version = doc.version;
    this.svg = doc.svg ?? "";
    this.undoStack = [];
    this.redoStack = [];
    this.selectedId = null;
  }

  /** Deep copy of the working set, safe to hand to the API client. */
  snapshot(): AnnotationSet {
    return cloneSet(this.annotations);
  }

  /** Accept the server's new revision number after a successful PUT. */
  markSaved(version: number): void {
    if (this.working === null) throw new EditorError("no diagram loaded");
    this.version = version;
    this.baseline = canonicalJson(this.working);
  }

  /** Adopt the current server version so a conflicted save can be retried. */
  rebaseTo(version: number): void {
    this.version = version;
  }

  undo(): void {
    const prev = this.undoStack.pop();
    if (prev === undefined || this.working === null) return;
    this.redoStack.push(this.working);
    this.working = prev;
  }

  redo(): void {
    const next = this.redoStack.pop();
    if (next === undefined || this.working === null) return;
    this.undoStack.push(this.working);
    this.working = next;
  }

  select(id: number | null): void {
    this.selectedId = id;
  }

  // ------------------------------------------------------------ mutations

  private mutate(change: (draft: AnnotationSet) => void): void {
    if (this.working === null) throw new EditorError("no diagram loaded");
    const draft = cloneSet(this.working);
    change(draft);
    this.undoStack.push(this.working);
    this.redoStack = [];
    this.working = draft;
  }

  private objectIndex(draft: AnnotationSet, id: number): number {
    const idx = draft.objects.findIndex((o) => o.id === id);
    if (idx < 0) throw new EditorError(`no object with id ${id}`);
    return idx;
  }

  private textIndex(draft: AnnotationSet, id: number): number {
    const idx = draft.texts.findIndex((t) => t.id === id);
    if (idx < 0) throw new EditorError(`no text with id ${id}`);
    return idx;
  }

  private nextId(): number {
    const s = this.annotations;
    const ids = [...s.objects.map((o) => o.id), ...s.texts.map((t) => t.id)];
    return ids.length === 0 ? 0 : Math.max(...ids) + 1;
  }

  moveObject(id: number, dx: number, dy: number): void {
    this.mutate((draft) => {
      const obj = draft.objects[this.objectIndex(draft, id)]!;
      obj.box = translated(obj.box, dx, dy);
      if (obj.keypoints !== null) {
        obj.keypoints = {
          start: [obj.keypoints.start[0] + dx, obj.keypoints.start[1] + dy],
          end: [obj.keypoints.end[0] + dx, obj.keypoints.end[1] + dy],
        };
      }
    });
  }

  resizeObject(id: number, w: number, h: number): void {
    this.mutate((draft) => {
      const obj = draft.objects[this.objectIndex(draft, id)]!;
      obj.box = normalizeBox({ ...obj.box, w, h });
    });
  }

  rotateObject(id: number, theta: number): void {
    this.mutate((draft) => {
      const obj = draft.objects[this.objectIndex(draft, id)]!;
      obj.box = normalizeBox({ ...obj.box, theta });
    });
  }

  setBox(id: number, box: Box): void {
    this.mutate((draft) => {
      const obj = draft.objects[this.objectIndex(draft, id)]!;
      obj.box = normalizeBox(box);
    });
  }

  setClass(id: number, cls: ObjectClass): void {
    this.mutate((draft) => {
      const obj = draft.objects[this.objectIndex(draft, id)]!;
      obj.class = cls;
      if (cls !== "line") obj.keypoints = null;
    });
  }

  /** Cycle node -> line -> bus -> node; handy as a single review keybind. */
  cycleClass(id: number): ObjectClass {
    const obj = this.annotations.objects.find((o) => o.id === id);
    if (obj === undefined) throw new EditorError(`no object with id ${id}`);
    const next =
      OBJECT_CLASSES[(OBJECT_CLASSES.indexOf(obj.class) + 1) % OBJECT_CLASSES.length]!;
    this.setClass(id, next);
    return next;
  }

  addObject(spec: {
    class: ObjectClass;
    box: Box;
    score?: number;
    keypoints?: Keypoints | null;
  }): number {
    const id = this.nextId();
    this.mutate((draft) => {
      draft.objects.push({
        id,
        class: spec.class,
        box: normalizeBox(spec.box),
        score: spec.score ?? 1.0,
        keypoints: spec.keypoints ?? null,
      });
    });
    return id;
  }

  deleteObject(id: number): void {
    this.mutate((draft) => {
      draft.objects.splice(this.objectIndex(draft, id), 1);
    });
    if (this.selectedId === id) this.selectedId = null;
  }

  setKeypoints(id: number, keypoints: Keypoints | null): void {
    this.mutate((draft) => {
      const obj = draft.objects[this.objectIndex(draft, id)]!;
      obj.keypoints = keypoints;
    });
  }

  moveKeypoint(id: number, which: "start" | "end", to: Point): void {
    this.mutate((draft) => {
      const obj = draft.objects[this.objectIndex(draft, id)]!;
      if (obj.keypoints === null) {
        throw new EditorError(`object ${id} has no keypoints`);
      }
      obj.keypoints = { ...obj.keypoints, [which]: [to[0], to[1]] };
    });
  }

  setText(id: number, content: string): void {
    this.mutate((draft) => {
      const tb = draft.texts[this.textIndex(draft, id)]!;
      tb.content = content;
    });
  }

  moveText(id: number, dx: number, dy: number): void {
    this.mutate((draft) => {
      const tb = draft.texts[this.textIndex(draft, id)]!;
      tb.box = translated(tb.box, dx, dy);
    });
  }

  addText(spec: { box: Box; content: string }): number {
    const id = this.nextId();
    this.mutate((draft) => {
      draft.texts.push({ id, box: normalizeBox(spec.box), content: spec.content });
    });
    return id;
  }

  deleteText(id: number): void {
    this.mutate((draft) => {
      draft.texts.splice(this.textIndex(draft, id), 1);
    });
    if (this.selectedId === id) this.selectedId = null;
  }

  findObject(id: number): DiagramObject | undefined {
    return this.annotations.objects.find((o) => o.id === id);
  }

  findText(id: number): TextBlock | undefined {
    return this.annotations.texts.find((t) => t.id === id);
  }
}
