/**
 * Typed client for the rulelab session service.
 *
 * Every shape here mirrors the service's JSON verbatim; the client adds no
 * endpoints and invents no fields. Mutating requests are serialized through
 * a single in-flight queue because the service holds one writer lock per
 * session — firing two writes concurrently would just bounce one off a 409.
 */

export type AtomKind = "count_at_least" | "overlaps" | "has_attribute";

export interface LiteralJson {
  kind: AtomKind;
  args: (string | number)[];
  negated: boolean;
}

export type ClauseStatus = "normal" | "locked" | "banned";

export interface ClauseJson {
  literals: LiteralJson[];
  status: ClauseStatus;
  impure: boolean;
}

export interface RuleJson {
  class: string;
  clauses: ClauseJson[];
}

export interface RulesetJson {
  generation: number;
  rules: RuleJson[];
  banned: Record<string, string[]>;
}

export interface DetectedObjectJson {
  type: string;
  bbox: [number, number, number, number];
  confidence: number;
  mask_ref?: string;
}

export interface ImageJson {
  id: string;
  uri: string;
  objects: DetectedObjectJson[];
  attributes: string[];
}

export type LabelStatus = "manual" | "auto" | "unlabeled" | "ambiguous";

export interface LabelStateJson {
  image_id: string;
  status: LabelStatus;
  updated_generation: number;
  label?: string;
  classes?: string[];
}

export interface GalleryRowJson {
  image: ImageJson;
  label_state: LabelStateJson;
  suggested: boolean;
}

export interface ImagesPageJson {
  page: number;
  page_size: number;
  total: number;
  items: GalleryRowJson[];
}

export interface ClassAccuracyJson {
  accuracy: number;
  correct: number;
  total: number;
}

export interface ReportJson {
  overall: number;
  per_class: Record<string, ClassAccuracyJson>;
  generation: number;
}

export interface ProgressJson {
  manual: number;
  auto: number;
  unlabeled: number;
  ambiguous: number;
  total: number;
  fractions: Record<"manual" | "auto" | "unlabeled" | "ambiguous", number>;
}

export interface StatsJson {
  report: ReportJson | null;
  progress: ProgressJson;
  donut: Record<string, ClassAccuracyJson>;
  iteration: number;
}

export interface SuggestionsJson {
  image_ids: string[];
  scores: Record<string, number>;
  generation: number;
}

export interface ImportanceJson {
  ranked: string[];
  table: unknown;
}

/** Discriminated RuleEdit payloads for PUT /rules/edit. */
export type RuleEditJson =
  | { op: "add_clause"; class: string; clause: ClauseJson }
  | { op: "add_literal"; class: string; clause_index: number; literal: LiteralJson }
  | {
      op: "edit_literal";
      class: string;
      clause_index: number;
      literal_index: number;
      literal: LiteralJson;
    }
  | { op: "remove_literal"; class: string; clause_index: number; literal_index: number }
  | { op: "remove_clause"; class: string; clause_index: number }
  | { op: "lock"; class: string; clause_index: number }
  | { op: "unlock"; class: string; clause_index: number }
  | { op: "ban"; class: string; clause_index: number }
  | { op: "unban"; class: string; canonical_form: string }
  | { op: "replace_rule"; class: string; rule: RuleJson };

export interface EditResponseJson {
  ruleset: RulesetJson;
  report: ReportJson | null;
  stats: ProgressJson;
}

export interface AutolabelResponseJson {
  generation: number;
  report: ReportJson | null;
  stats: ProgressJson;
  timing_ms: number;
}

export interface PreviewResponseJson {
  report: ReportJson | null;
  stats: ProgressJson;
}

export interface LabelResponseJson {
  label_state: LabelStateJson;
  progress: ProgressJson;
}

export interface ExportSummaryJson {
  path: string;
  labeled: number;
  manual: number;
  auto: number;
  unresolved: number;
}

/** Structured service error: the {code, message, detail} envelope plus HTTP status. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: string;

  constructor(status: number, code: string, message: string, detail: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.detail = detail;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

interface ListImagesParams {
  status?: LabelStatus;
  label?: string;
  page?: number;
  page_size?: number;
  sort?: "id" | "suggested";
}

export class SessionClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;
  private writeChain: Promise<unknown> = Promise.resolve();

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    const impl = fetchImpl ?? globalThis.fetch;
    if (!impl) throw new Error("no fetch implementation available");
    this.fetchImpl = impl.bind(globalThis);
  }

  async createSession(body: {
    path?: string;
    dataset?: unknown;
    strict?: boolean;
  }): Promise<{ session_id: string }> {
    return this.write("POST", "/sessions", body);
  }

  async listImages(sid: string, params: ListImagesParams = {}): Promise<ImagesPageJson> {
    const q = new URLSearchParams();
    for (const [key, value] of Object.entries(params)) {
      if (value !== undefined) q.set(key, String(value));
    }
    const suffix = q.size > 0 ? `?${q.toString()}` : "";
    return this.read(`/sessions/${sid}/images${suffix}`);
  }

  async setLabel(sid: string, imageId: string, label: string): Promise<LabelResponseJson> {
    return this.write("PUT", `/sessions/${sid}/labels/${encodeURIComponent(imageId)}`, { label });
  }

  async clearLabel(sid: string, imageId: string): Promise<LabelResponseJson> {
    return this.write("DELETE", `/sessions/${sid}/labels/${encodeURIComponent(imageId)}`);
  }

  async autolabel(
    sid: string,
    body: { config?: unknown; active_learning?: unknown } = {},
  ): Promise<AutolabelResponseJson> {
    return this.write("POST", `/sessions/${sid}/autolabel`, body);
  }

  async getRules(sid: string): Promise<RulesetJson> {
    return this.read(`/sessions/${sid}/rules`);
  }

  async editRules(sid: string, edit: RuleEditJson): Promise<EditResponseJson> {
    return this.write("PUT", `/sessions/${sid}/rules/edit`, { edit });
  }

  async previewRules(sid: string, ruleset: RulesetJson): Promise<PreviewResponseJson> {
    return this.write("POST", `/sessions/${sid}/rules/preview`, { ruleset });
  }

  async getSuggestions(sid: string): Promise<SuggestionsJson> {
    return this.read(`/sessions/${sid}/suggestions`);
  }

  async getStats(sid: string): Promise<StatsJson> {
    return this.read(`/sessions/${sid}/stats`);
  }

  async getImportance(sid: string): Promise<ImportanceJson> {
    return this.read(`/sessions/${sid}/importance`);
  }

  async exportSession(sid: string, path?: string): Promise<ExportSummaryJson> {
    return this.write("POST", `/sessions/${sid}/export`, path === undefined ? {} : { path });
  }

  /** Reads go straight out; they never contend for the writer lock. */
  private async read<T>(path: string): Promise<T> {
    return this.request("GET", path);
  }

  /**
   * Writes queue behind the previous write, resolving in call order even
   * when an earlier one fails.
   */
  private write<T>(method: string, path: string, body?: unknown): Promise<T> {
    const next = this.writeChain.then(
      () => this.request<T>(method, path, body),
      () => this.request<T>(method, path, body),
    );
    this.writeChain = next.catch(() => undefined);
    return next;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) {
      let code = "http_error";
      let message = `${resp.status}`;
      let detail = "";
      try {
        const doc = (await resp.json()) as { code?: string; message?: string; detail?: string };
        code = doc.code ?? code;
        message = doc.message ?? message;
        detail = doc.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status-based defaults
      }
      throw new ApiError(resp.status, code, message, detail);
    }
    return (await resp.json()) as T;
  }
}
