/**
 * In-memory stand-in for the rulelab session service, faithful to the
 * documented routes, bodies, status codes, and error envelope. Tests inject
 * its fetch into SessionClient, so everything the UI displays provably came
 * through the HTTP contract. Each instance logs every request it serves.
 */

import type {
  ClassAccuracyJson,
  GalleryRowJson,
  ImageJson,
  LabelStateJson,
  ProgressJson,
  ReportJson,
  RuleEditJson,
  RulesetJson,
  StatsJson,
  SuggestionsJson,
} from "../../src/api.js";
import { applyEditLocally, parseRuleset, serializeRuleset } from "../../src/rules.js";

export interface LoggedRequest {
  method: string;
  path: string;
  body: unknown;
}

interface MockImage {
  image: ImageJson;
  state: LabelStateJson;
}

export interface MockSessionSeed {
  sessionId?: string;
  classes: string[];
  ruleset: RulesetJson;
  images?: { image: ImageJson; state?: Partial<LabelStateJson> }[];
  suggestions?: SuggestionsJson;
  report?: ReportJson | null;
  importanceRanked?: string[];
  iteration?: number;
}

function envelope(status: number, code: string, message: string, detail = ""): Response {
  return jsonResponse(status, { code, message, detail });
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export class MockServer {
  readonly requests: LoggedRequest[] = [];
  readonly sessionId: string;
  private readonly classes: string[];
  private ruleset: RulesetJson;
  private readonly images: MockImage[];
  private suggestions: SuggestionsJson;
  private report: ReportJson | null;
  private readonly importanceRanked: string[];
  private iteration: number;
  /** Set to a promise to hold the next mutating request open (queue tests). */
  gate: Promise<void> | null = null;
  /** Force the next /rules/edit to fail with this envelope (revert tests). */
  rejectNextEdit: { status: number; code: string; message: string } | null = null;

  constructor(seed: MockSessionSeed) {
    this.sessionId = seed.sessionId ?? "mock-session";
    this.classes = [...seed.classes];
    this.ruleset = seed.ruleset;
    this.images = (seed.images ?? []).map(({ image, state }) => ({
      image,
      state: {
        image_id: image.id,
        status: "unlabeled",
        updated_generation: 0,
        ...state,
      },
    }));
    this.suggestions = seed.suggestions ?? {
      image_ids: [],
      scores: {},
      generation: seed.ruleset.generation,
    };
    this.report = seed.report ?? null;
    this.importanceRanked = seed.importanceRanked ?? [];
    this.iteration = seed.iteration ?? 0;
  }

  /** fetch-compatible entry point to hand to SessionClient. */
  readonly fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const parsed = new URL(url, "http://mock");
    const path = parsed.pathname;
    const body = init?.body ? (JSON.parse(init.body as string) as unknown) : undefined;
    this.requests.push({ method, path: path + parsed.search, body });
    if (this.gate && method !== "GET") {
      await this.gate;
    }
    try {
      return this.route(method, path, parsed.searchParams, body);
    } catch (err) {
      return envelope(400, "validation_error", err instanceof Error ? err.message : String(err));
    }
  };

  private route(
    method: string,
    path: string,
    query: URLSearchParams,
    body: unknown,
  ): Response {
    if (method === "POST" && path === "/sessions") {
      return jsonResponse(201, { session_id: this.sessionId });
    }

    const match = path.match(/^\/sessions\/([^/]+)(\/.*)?$/);
    if (!match) return envelope(404, "unknown_route", `no route for ${path}`);
    if (match[1] !== this.sessionId) {
      return envelope(404, "unknown_session", `unknown session ${match[1]}`, "UnknownSessionError");
    }
    const rest = match[2] ?? "";

    if (method === "GET" && rest === "/images") return this.listImages(query);
    if (rest.startsWith("/labels/")) {
      const imageId = decodeURIComponent(rest.slice("/labels/".length));
      if (method === "PUT") return this.putLabel(imageId, body);
      if (method === "DELETE") return this.deleteLabel(imageId);
    }
    if (method === "POST" && rest === "/autolabel") return this.autolabel();
    if (method === "GET" && rest === "/rules") return jsonResponse(200, this.ruleset);
    if (method === "PUT" && rest === "/rules/edit") return this.editRules(body);
    if (method === "POST" && rest === "/rules/preview") return this.preview(body);
    if (method === "GET" && rest === "/suggestions") return jsonResponse(200, this.suggestions);
    if (method === "GET" && rest === "/stats") return jsonResponse(200, this.stats());
    if (method === "GET" && rest === "/importance") {
      return jsonResponse(200, { ranked: this.importanceRanked, table: {} });
    }
    if (method === "POST" && rest === "/export") {
      const progress = this.progress();
      return jsonResponse(200, {
        path: (body as { path?: string } | undefined)?.path ?? "/tmp/export.json",
        labeled: progress.manual + progress.auto,
        manual: progress.manual,
        auto: progress.auto,
        unresolved: progress.unlabeled + progress.ambiguous,
      });
    }
    return envelope(404, "unknown_route", `no route for ${method} ${path}`);
  }

  private listImages(query: URLSearchParams): Response {
    const status = query.get("status");
    const label = query.get("label");
    const sort = query.get("sort") ?? "id";
    const page = Number(query.get("page") ?? 1);
    const pageSize = Number(query.get("page_size") ?? 50);
    if (sort !== "id" && sort !== "suggested") {
      return envelope(400, "validation_error", `unknown sort order '${sort}'`);
    }

    let rows = this.images.filter(
      (i) =>
        (status === null || i.state.status === status) &&
        (label === null || i.state.label === label),
    );
    rows = [...rows].sort((a, b) => (a.image.id < b.image.id ? -1 : 1));
    if (sort === "suggested") {
      const order = new Map(this.suggestions.image_ids.map((id, i) => [id, i]));
      rows.sort((a, b) => {
        const ra = order.has(a.image.id) ? order.get(a.image.id)! : Number.POSITIVE_INFINITY;
        const rb = order.has(b.image.id) ? order.get(b.image.id)! : Number.POSITIVE_INFINITY;
        if (ra !== rb) return ra - rb;
        return a.image.id < b.image.id ? -1 : 1;
      });
    }

    const start = (page - 1) * pageSize;
    const suggested = new Set(this.suggestions.image_ids);
    const items: GalleryRowJson[] = rows.slice(start, start + pageSize).map((row) => ({
      image: row.image,
      label_state: row.state,
      suggested: suggested.has(row.image.id),
    }));
    return jsonResponse(200, { page, page_size: pageSize, total: rows.length, items });
  }

  private putLabel(imageId: string, body: unknown): Response {
    const label = (body as { label?: unknown } | undefined)?.label;
    if (typeof label !== "string" || !label) {
      return envelope(400, "validation_error", "body must carry a non-empty 'label'");
    }
    if (!this.classes.includes(label)) {
      return envelope(400, "unknown_class", `unknown class ${label}`, "UnknownClassError");
    }
    const row = this.images.find((i) => i.image.id === imageId);
    if (!row) {
      return envelope(404, "unknown_image", `unknown image ${imageId}`, "UnknownImageError");
    }
    row.state = {
      image_id: imageId,
      status: "manual",
      label,
      updated_generation: this.ruleset.generation,
    };
    this.suggestions = {
      ...this.suggestions,
      image_ids: this.suggestions.image_ids.filter((id) => id !== imageId),
    };
    return jsonResponse(200, { label_state: row.state, progress: this.progress() });
  }

  private deleteLabel(imageId: string): Response {
    const row = this.images.find((i) => i.image.id === imageId);
    if (!row) {
      return envelope(404, "unknown_image", `unknown image ${imageId}`, "UnknownImageError");
    }
    row.state = {
      image_id: imageId,
      status: "unlabeled",
      updated_generation: this.ruleset.generation,
    };
    return jsonResponse(200, { label_state: row.state, progress: this.progress() });
  }

  private autolabel(): Response {
    this.ruleset = { ...this.ruleset, generation: this.ruleset.generation + 1 };
    this.iteration += 1;
    return jsonResponse(200, {
      generation: this.ruleset.generation,
      report: this.report,
      stats: this.progress(),
      timing_ms: 1.5,
    });
  }

  private editRules(body: unknown): Response {
    if (this.rejectNextEdit) {
      const { status, code, message } = this.rejectNextEdit;
      this.rejectNextEdit = null;
      return envelope(status, code, message, "EditError");
    }
    const edit = (body as { edit?: RuleEditJson } | undefined)?.edit;
    if (!edit) return envelope(400, "validation_error", "body must carry an 'edit' object");
    try {
      this.ruleset = serializeRuleset(applyEditLocally(parseRuleset(this.ruleset), edit));
    } catch (err) {
      return envelope(
        400,
        "edit_error",
        `malformed edit payload: ${err instanceof Error ? err.message : String(err)}`,
        "EditError",
      );
    }
    return jsonResponse(200, {
      ruleset: this.ruleset,
      report: this.report,
      stats: this.progress(),
    });
  }

  private preview(body: unknown): Response {
    const ruleset = (body as { ruleset?: RulesetJson } | undefined)?.ruleset;
    if (!ruleset) return envelope(400, "validation_error", "body must carry a 'ruleset' object");
    return jsonResponse(200, { report: this.report, stats: this.progress() });
  }

  private progress(): ProgressJson {
    const counts = { manual: 0, auto: 0, unlabeled: 0, ambiguous: 0 };
    for (const row of this.images) counts[row.state.status] += 1;
    const total = this.images.length;
    const frac = (n: number) => (total ? n / total : 0);
    return {
      ...counts,
      total,
      fractions: {
        manual: frac(counts.manual),
        auto: frac(counts.auto),
        unlabeled: frac(counts.unlabeled),
        ambiguous: frac(counts.ambiguous),
      },
    };
  }

  private stats(): StatsJson {
    const donut: Record<string, ClassAccuracyJson> = this.report ? this.report.per_class : {};
    return {
      report: this.report,
      progress: this.progress(),
      donut,
      iteration: this.iteration,
    };
  }

  setReport(report: ReportJson | null): void {
    this.report = report;
  }

  currentRuleset(): RulesetJson {
    return this.ruleset;
  }
}
