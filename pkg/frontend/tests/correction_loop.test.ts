/**
 * End-to-end review loop against the real annotation service: a synthesized
 * corpus is seeded into a temp store, the service runs as a child process,
 * and the editor talks to it exactly the way the browser app does.
 */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import net from "node:net";
import os from "node:os";
import path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { EditorState } from "../src/editor.js";
import { canonicalJson } from "../src/types.js";

const REPO_ROOT = path.resolve(__dirname, "..", "..");
const DIAGRAM_COUNT = 8;

let corpusDir: string;
let storeDir: string;
let server: ChildProcess | null = null;
let client: ApiClient;

async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = net.createServer();
    srv.once("error", reject);
    srv.listen(0, "127.0.0.1", () => {
      const addr = srv.address() as net.AddressInfo;
      srv.close(() => resolve(addr.port));
    });
  });
}

async function waitForHealth(base: string): Promise<void> {
  const deadline = Date.now() + 30_000;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${base}/health`);
      if (resp.ok) return;
    } catch (err) {
      lastError = err;
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error(`service never became healthy: ${String(lastError)}`);
}

beforeAll(async () => {
  corpusDir = mkdtempSync(path.join(os.tmpdir(), "review-corpus-"));
  storeDir = mkdtempSync(path.join(os.tmpdir(), "review-store-"));
  execFileSync(
    "python3",
    [
      "-m",
      "diagraph",
      "synthesize",
      "--out",
      corpusDir,
      "--count",
      String(DIAGRAM_COUNT),
      "--kind",
      "ownership",
    ],
    { cwd: REPO_ROOT },
  );

  const port = await freePort();
  const base = `http://127.0.0.1:${port}`;
  server = spawn(
    "python3",
    [
      path.join("scripts", "run_annotation_service.py"),
      storeDir,
      "--seed-from",
      corpusDir,
      "--port",
      String(port),
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  client = new ApiClient(base);
  await waitForHealth(base);
});

afterAll(() => {
  if (server !== null) server.kill("SIGTERM");
  rmSync(corpusDir, { recursive: true, force: true });
  rmSync(storeDir, { recursive: true, force: true });
});

describe("review service round trips", () => {
  it("load then immediate save increments the version, geometry intact", async () => {
    const rows = await client.listDiagrams();
    expect(rows).toHaveLength(DIAGRAM_COUNT);
    const id = rows[0]!.diagram_id;

    const editor = new EditorState();
    const doc = await client.getDiagram(id);
    editor.load({ annotations: doc.annotations, version: doc.version });
    expect(doc.version).toBe(1);

    const resp = await client.putAnnotations(id, editor.snapshot(), editor.version, {
      author: "reviewer",
    });
    expect(resp.version).toBe(2);
    editor.markSaved(resp.version);

    const before = await client.getAnnotations(id, 1);
    const after = await client.getAnnotations(id, 2);
    expect(after.annotations.objects).toHaveLength(before.annotations.objects.length);
    for (let i = 0; i < before.annotations.objects.length; i++) {
      const a = before.annotations.objects[i]!.box;
      const b = after.annotations.objects[i]!.box;
      for (const key of ["cx", "cy", "w", "h", "theta"] as const) {
        expect(Math.abs(a[key] - b[key])).toBeLessThanOrEqual(1e-6);
      }
    }
  });

  it("deleting a line persists across save and reload", async () => {
    const rows = await client.listDiagrams();
    const id = rows[1]!.diagram_id;

    const editor = new EditorState();
    const doc = await client.getDiagram(id);
    editor.load({ annotations: doc.annotations, version: doc.version });

    const line = editor.annotations.objects.find((o) => o.class === "line");
    expect(line).toBeDefined();
    editor.deleteObject(line!.id);
    expect(editor.canSave).toBe(true);

    const resp = await client.putAnnotations(id, editor.snapshot(), editor.version);
    expect(resp.version).toBe(doc.version + 1);

    const reloaded = await client.getDiagram(id);
    expect(reloaded.version).toBe(resp.version);
    expect(
      reloaded.annotations.objects.find((o) => o.id === line!.id),
    ).toBeUndefined();
  });
});

describe("correction loop", () => {
  it("restoring a drop-perturbed diagram recovers tuple F1 = 1.0", async () => {
    const rows = await client.listDiagrams();

    // find a diagram where the simulated detector actually dropped something
    let id: string | null = null;
    for (const row of rows.slice(2)) {
      const before = await client.getAnnotations(row.diagram_id, 1);
      const auto = await client.autoAnnotate(row.diagram_id, {
        noise: { drop_rate: 0.1 },
        seed: 7,
      });
      expect(auto.version).toBe(2);
      const after = await client.getAnnotations(row.diagram_id, 2);
      if (after.annotations.objects.length < before.annotations.objects.length) {
        id = row.diagram_id;
        break;
      }
    }
    expect(id).not.toBeNull();

    // the degraded revision really is degraded
    const broken = await client.evaluate(id!, { version: 2, against: 1 });
    expect(broken.tuples.f1).toBeLessThan(1.0);

    // reviewer loads the detector output with the ground truth for reference
    const editor = new EditorState();
    const doc = await client.getDiagram(id!);
    expect(doc.version).toBe(2);
    editor.load({ annotations: doc.annotations, version: doc.version });
    const reference = await client.getAnnotations(id!, 1);

    // re-draw every missing object through ordinary editor operations
    const present = new Set(editor.annotations.objects.map((o) => o.id));
    let restored = 0;
    for (const refObj of reference.annotations.objects) {
      if (!present.has(refObj.id)) {
        editor.addObject({
          class: refObj.class,
          box: refObj.box,
          keypoints: refObj.keypoints,
        });
        restored += 1;
      }
    }
    expect(restored).toBeGreaterThan(0);
    expect(editor.dirty).toBe(true);
    expect(editor.canSave).toBe(true);

    // save increments the server version
    const resp = await client.putAnnotations(id!, editor.snapshot(), editor.version, {
      author: "reviewer",
      note: "restored dropped objects",
    });
    expect(resp.version).toBe(3);
    editor.markSaved(resp.version);

    // refresh after save reproduces the saved set exactly
    const refreshed = await client.getAnnotations(id!);
    expect(refreshed.version).toBe(3);
    expect(canonicalJson(refreshed.annotations)).toBe(
      canonicalJson(editor.annotations),
    );

    // the corrected revision evaluates perfectly against the ground truth
    const report = await client.evaluate(id!, { version: 3, against: 1 });
    expect(report.tuples.f1).toBe(1.0);
    expect(report.tuples.precision).toBe(1.0);
    expect(report.tuples.recall).toBe(1.0);
    expect(report.detection.map).toBe(1.0);

    // and the extracted relations match the gold revision's
    const gold = await client.getTuples(id!, 1);
    const fixed = await client.getTuples(id!, 3);
    expect(fixed.tuples).toEqual(gold.tuples);
  });
});
