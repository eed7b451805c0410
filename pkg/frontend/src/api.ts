/**
 * Typed client for the annotation service. Every response body is parsed
 * through the zod schemas in types.ts, and the two interesting failure modes
 * get their own error classes: a stale expected_version raises
 * VersionConflictError carrying the server's current version, and a save
 * rejected by server-side validation raises ValidationRejectedError with the
 * violation list.
 */

import {
  AnnotationSet,
  AnnotationsDoc,
  AnnotationsDocSchema,
  DiagramDoc,
  DiagramDocSchema,
  DiagramSummary,
  DiagramSummarySchema,
  EvaluationDoc,
  EvaluationDocSchema,
  RevisionInfo,
  RevisionInfoSchema,
  SaveResponse,
  SaveResponseSchema,
  TuplesDoc,
  TuplesDocSchema,
  Violation,
  ViolationSchema,
} from "./types.js";
import { z } from "zod";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly body: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class VersionConflictError extends ApiError {
  constructor(
    message: string,
    readonly currentVersion: number,
  ) {
    super(message, 409);
    this.name = "VersionConflictError";
  }
}

export class ValidationRejectedError extends ApiError {
  constructor(
    message: string,
    readonly violations: Violation[],
  ) {
    super(message, 422);
    this.name = "ValidationRejectedError";
  }
}

export interface SaveOptions {
  author?: string;
  note?: string;
  acknowledgeViolations?: boolean;
}

export interface NoiseSpec {
  drop_rate?: number;
  class_drop_rates?: Record<string, number>;
  position_jitter?: number;
  size_jitter?: number;
  angle_jitter?: number;
  keypoint_jitter?: number;
  keypoint_drop_rate?: number;
  spurious_rate?: number;
  text_drop_rate?: number;
  digit_error_rate?: number;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // bind so a bare window.fetch keeps its receiver
    this.fetchImpl = fetchImpl ?? ((url, init) => globalThis.fetch(url, init));
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<Response> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.base + path, init);
    if (resp.ok) return resp;

    let payload: unknown = null;
    try {
      payload = await resp.json();
    } catch {
      // non-JSON error body; fall through with the status alone
    }
    const record = (payload ?? {}) as Record<string, unknown>;
    const message =
      typeof record.message === "string"
        ? record.message
        : `${method} ${path} failed with ${resp.status}`;
    if (resp.status === 409 && typeof record.current_version === "number") {
      throw new VersionConflictError(message, record.current_version);
    }
    if (resp.status === 422 && Array.isArray(record.violations)) {
      const violations = z.array(ViolationSchema).parse(record.violations);
      throw new ValidationRejectedError(message, violations);
    }
    throw new ApiError(message, resp.status, payload);
  }

  private async json<S extends z.ZodTypeAny>(
    schema: S,
    resp: Response,
  ): Promise<z.output<S>> {
    return schema.parse(await resp.json()) as z.output<S>;
  }

  async health(): Promise<{ status: string; diagrams: number }> {
    const resp = await this.request("GET", "/health");
    return this.json(
      z.object({ status: z.string(), diagrams: z.number().int() }),
      resp,
    );
  }

  async listDiagrams(): Promise<DiagramSummary[]> {
    const resp = await this.request("GET", "/diagrams");
    return this.json(z.array(DiagramSummarySchema), resp);
  }

  async getDiagram(id: string): Promise<DiagramDoc> {
    const resp = await this.request("GET", `/diagrams/${id}`);
    return this.json(DiagramDocSchema, resp);
  }

  async getSvg(id: string): Promise<string> {
    const resp = await this.request("GET", `/diagrams/${id}/svg`);
    return resp.text();
  }

  async getAnnotations(id: string, version?: number): Promise<AnnotationsDoc> {
    const suffix = version === undefined ? "" : `?version=${version}`;
    const resp = await this.request("GET", `/diagrams/${id}/annotations${suffix}`);
    return this.json(AnnotationsDocSchema, resp);
  }

  async listRevisions(id: string): Promise<RevisionInfo[]> {
    const resp = await this.request("GET", `/diagrams/${id}/revisions`);
    return this.json(z.array(RevisionInfoSchema), resp);
  }

  /**
   * The one state-changing call the UI makes. The server accepts iff
   * expectedVersion is still current, and replies with the new version.
   */
  async putAnnotations(
    id: string,
    annotations: AnnotationSet,
    expectedVersion: number,
    opts: SaveOptions = {},
  ): Promise<SaveResponse> {
    const body: Record<string, unknown> = {
      expected_version: expectedVersion,
      annotations,
    };
    if (opts.author !== undefined) body.author = opts.author;
    if (opts.note !== undefined) body.note = opts.note;
    if (opts.acknowledgeViolations) body.acknowledge_violations = true;
    const resp = await this.request("PUT", `/diagrams/${id}/annotations`, body);
    return this.json(SaveResponseSchema, resp);
  }

  /** Ask the server to write a simulated detector pass as a new revision. */
  async autoAnnotate(
    id: string,
    opts: { noise?: NoiseSpec; seed?: number; sourceVersion?: number } = {},
  ): Promise<SaveResponse> {
    const body: Record<string, unknown> = {};
    if (opts.noise !== undefined) body.noise = opts.noise;
    if (opts.seed !== undefined) body.seed = opts.seed;
    if (opts.sourceVersion !== undefined) body.source_version = opts.sourceVersion;
    const resp = await this.request("POST", `/diagrams/${id}/auto-annotate`, body);
    return this.json(SaveResponseSchema, resp);
  }

  async getTuples(id: string, version?: number): Promise<TuplesDoc> {
    const suffix = version === undefined ? "" : `?version=${version}`;
    const resp = await this.request("GET", `/diagrams/${id}/tuples${suffix}`);
    return this.json(TuplesDocSchema, resp);
  }

  async evaluate(
    id: string,
    opts: { version?: number; against?: number } = {},
  ): Promise<EvaluationDoc> {
    const params = new URLSearchParams();
    if (opts.version !== undefined) params.set("version", String(opts.version));
    if (opts.against !== undefined) params.set("against", String(opts.against));
    const qs = params.size > 0 ? `?${params}` : "";
    const resp = await this.request("GET", `/diagrams/${id}/evaluate${qs}`);
    return this.json(EvaluationDocSchema, resp);
  }

  async exportZip(): Promise<ArrayBuffer> {
    const resp = await this.request("POST", "/export");
    return resp.arrayBuffer();
  }
}
