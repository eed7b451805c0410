/**
 * Browser wiring: diagram list on the left, SVG with an editable overlay in
 * the middle, save/undo/evaluate controls on top. All geometry runs in native
 * diagram coordinates; the only state-changing server call is the save PUT
 * (conflicts offer reload or retry-on-current-version).
 */

import { ApiClient, VersionConflictError } from "./api.js";
import { EditorState } from "./editor.js";
import { containsPoint } from "./geometry.js";
import { buildOverlay, legend } from "./overlay.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

class App {
  private readonly api: ApiClient;
  private readonly editor = new EditorState();
  private currentId: string | null = null;
  private drag: { id: number; lastX: number; lastY: number } | null = null;

  private readonly list = el("ul", { id: "diagram-list" });
  private readonly stage = el("div", { id: "stage" });
  private readonly status = el("div", { id: "status" });
  private readonly saveBtn = el("button", {}, "save");
  private readonly undoBtn = el("button", {}, "undo");
  private readonly redoBtn = el("button", {}, "redo");
  private readonly evalBtn = el("button", {}, "evaluate vs v1");

  constructor(api: ApiClient, root: HTMLElement) {
    this.api = api;
    const bar = el("div", { id: "toolbar" });
    bar.append(this.saveBtn, this.undoBtn, this.redoBtn, this.evalBtn, this.status);
    const side = el("div", { id: "sidebar" });
    side.append(el("h2", {}, "diagrams"), this.list);
    const main = el("div", { id: "main" });
    main.append(bar, this.stage);
    root.append(side, main);

    this.saveBtn.addEventListener("click", () => void this.save());
    this.undoBtn.addEventListener("click", () => this.apply(() => this.editor.undo()));
    this.redoBtn.addEventListener("click", () => this.apply(() => this.editor.redo()));
    this.evalBtn.addEventListener("click", () => void this.evaluate());
    document.addEventListener("keydown", (ev) => this.onKey(ev));
  }

  async start(): Promise<void> {
    const rows = await this.api.listDiagrams();
    this.list.replaceChildren();
    for (const row of rows) {
      const item = el("li", {}, `${row.diagram_id} (v${row.version})`);
      item.addEventListener("click", () => void this.open(row.diagram_id));
      this.list.append(item);
    }
    this.report(`${rows.length} diagrams`);
  }

  private report(msg: string): void {
    this.status.textContent = msg;
  }

  private async open(id: string): Promise<void> {
    const [doc, svg] = await Promise.all([
      this.api.getDiagram(id),
      this.api.getSvg(id),
    ]);
    this.currentId = id;
    this.editor.load({ annotations: doc.annotations, version: doc.version, svg });
    this.render();
    this.report(`${id} at v${doc.version}`);
  }

  /** Run an editor action, then refresh overlay and button states. */
  private apply(action: () => void): void {
    if (!this.editor.loaded) return;
    action();
    this.render();
  }

  private render(): void {
    if (!this.editor.loaded) return;
    const ann = this.editor.annotations;
    this.stage.replaceChildren();
    const holder = el("div", { id: "canvas" });
    holder.style.width = `${ann.width}px`;
    holder.style.height = `${ann.height}px`;
    holder.innerHTML = this.editor.svg;

    const overlay = document.createElementNS(SVG_NS, "svg");
    overlay.setAttribute("id", "overlay");
    overlay.setAttribute("viewBox", `0 0 ${ann.width} ${ann.height}`);
    overlay.setAttribute("width", String(ann.width));
    overlay.setAttribute("height", String(ann.height));
    overlay.innerHTML = buildOverlay(ann, this.editor.selectedId) + legend();
    overlay.addEventListener("pointerdown", (ev) => this.onPointerDown(ev, overlay));
    overlay.addEventListener("pointermove", (ev) => this.onPointerMove(ev, overlay));
    overlay.addEventListener("pointerup", () => (this.drag = null));
    holder.append(overlay);
    this.stage.append(holder);

    const violations = this.editor.violations();
    this.saveBtn.disabled = !this.editor.canSave || !this.editor.dirty;
    this.undoBtn.disabled = !this.editor.canUndo;
    this.redoBtn.disabled = !this.editor.canRedo;
    if (violations.length > 0) {
      this.report(
        `save blocked: ${violations.map((v) => `${v.rule} (id ${v.object_id})`).join(", ")}`,
      );
    } else if (this.editor.dirty) {
      this.report("unsaved changes");
    }
  }

  private diagramPoint(ev: PointerEvent, overlay: SVGSVGElement): [number, number] {
    const rect = overlay.getBoundingClientRect();
    const ann = this.editor.annotations;
    return [
      ((ev.clientX - rect.left) / rect.width) * ann.width,
      ((ev.clientY - rect.top) / rect.height) * ann.height,
    ];
  }

  private onPointerDown(ev: PointerEvent, overlay: SVGSVGElement): void {
    const [x, y] = this.diagramPoint(ev, overlay);
    const ann = this.editor.annotations;
    // pick the smallest box under the cursor so nested shapes stay reachable
    let best: { id: number; area: number } | null = null;
    for (const entry of [...ann.objects, ...ann.texts]) {
      if (containsPoint(entry.box, [x, y])) {
        const area = entry.box.w * entry.box.h;
        if (best === null || area < best.area) best = { id: entry.id, area };
      }
    }
    this.editor.select(best === null ? null : best.id);
    if (best !== null && this.editor.findObject(best.id) !== undefined) {
      this.drag = { id: best.id, lastX: x, lastY: y };
    }
    this.render();
  }

  private onPointerMove(ev: PointerEvent, overlay: SVGSVGElement): void {
    if (this.drag === null || ev.buttons === 0) return;
    const [x, y] = this.diagramPoint(ev, overlay);
    const { id, lastX, lastY } = this.drag;
    this.editor.moveObject(id, x - lastX, y - lastY);
    this.drag = { id, lastX: x, lastY: y };
    this.render();
  }

  private onKey(ev: KeyboardEvent): void {
    if (!this.editor.loaded) return;
    const id = this.editor.selectedId;
    const nudge = ev.shiftKey ? 5 : 1;
    const moves: Record<string, [number, number]> = {
      ArrowLeft: [-nudge, 0],
      ArrowRight: [nudge, 0],
      ArrowUp: [0, -nudge],
      ArrowDown: [0, nudge],
    };
    if (ev.key === "z" && (ev.ctrlKey || ev.metaKey)) {
      this.apply(() => this.editor.undo());
    } else if (ev.key === "y" && (ev.ctrlKey || ev.metaKey)) {
      this.apply(() => this.editor.redo());
    } else if (id !== null && ev.key in moves) {
      const [dx, dy] = moves[ev.key]!;
      if (this.editor.findObject(id) !== undefined) {
        this.apply(() => this.editor.moveObject(id, dx, dy));
      } else {
        this.apply(() => this.editor.moveText(id, dx, dy));
      }
      ev.preventDefault();
    } else if (id !== null && ev.key === "c") {
      if (this.editor.findObject(id) !== undefined) {
        this.apply(() => this.editor.cycleClass(id));
      }
    } else if (id !== null && (ev.key === "Delete" || ev.key === "Backspace")) {
      if (this.editor.findObject(id) !== undefined) {
        this.apply(() => this.editor.deleteObject(id));
      } else {
        this.apply(() => this.editor.deleteText(id));
      }
    } else if (id !== null && ev.key === "t") {
      const tb = this.editor.findText(id);
      if (tb !== undefined) {
        const content = window.prompt("text content", tb.content);
        if (content !== null) this.apply(() => this.editor.setText(id, content));
      }
    } else if (id !== null && ev.key === "r") {
      const obj = this.editor.findObject(id);
      if (obj !== undefined) {
        const step = (ev.shiftKey ? -5 : 5) * (Math.PI / 180);
        this.apply(() => this.editor.rotateObject(id, obj.box.theta + step));
      }
    }
  }

  private async save(): Promise<void> {
    if (this.currentId === null || !this.editor.canSave) return;
    try {
      const resp = await this.api.putAnnotations(
        this.currentId,
        this.editor.snapshot(),
        this.editor.version,
        { author: "reviewer" },
      );
      this.editor.markSaved(resp.version);
      this.render();
      this.report(`saved as v${resp.version}`);
    } catch (err) {
      if (err instanceof VersionConflictError) {
        const retry = window.confirm(
          `Someone saved v${err.currentVersion} meanwhile. ` +
            `OK: keep my edits and save over it. Cancel: reload server version.`,
        );
        if (retry) {
          this.editor.rebaseTo(err.currentVersion);
          await this.save();
        } else {
          await this.open(this.currentId);
        }
        return;
      }
      this.report(err instanceof Error ? err.message : String(err));
    }
  }

  private async evaluate(): Promise<void> {
    if (this.currentId === null) return;
    const doc = await this.api.evaluate(this.currentId, { against: 1 });
    this.report(
      `mAP ${doc.detection.map.toFixed(3)}, tuple F1 ${doc.tuples.f1.toFixed(3)}`,
    );
  }
}

export function mount(root: HTMLElement, baseUrl: string): App {
  const app = new App(new ApiClient(baseUrl), root);
  void app.start();
  return app;
}

const rootEl = document.getElementById("app");
if (rootEl !== null) {
  const params = new URLSearchParams(window.location.search);
  mount(rootEl, params.get("api") ?? "http://127.0.0.1:8000");
}
