/**
 * Typed client for the casekit HTTP API. Every view renders these payloads
 * verbatim; nothing in the browser recomputes search or annotation logic.
 */

export interface SearchCounts {
  chats: number;
  messages: number;
  transcripts: number;
}

export interface ChatHit {
  chat_id: string;
  ordinals: number[];
  snippets: string[];
  last_timestamp: string;
}

export type FacetCounts = Record<string, Record<string, number>>;

export interface SearchPayload {
  chats: ChatHit[];
  counts: SearchCounts;
  facets: FacetCounts | null;
}

export interface MentionPayload {
  id: string;
  start: number;
  end: number;
  type: string;
  link: { kb_id: string | null };
  cluster: string | null;
  provenance: string;
}

export interface DocumentPayload {
  doc_id: string;
  text: string;
  text_sha256: string;
  offset_map: Record<string, [number, number]>;
  sources: Record<string, string>;
  attachments: Record<string, string>;
  mentions: MentionPayload[];
}

export interface EditOp {
  kind:
    | "ADD_MENTION"
    | "DELETE_MENTION"
    | "RETYPE"
    | "RELINK"
    | "MERGE_CLUSTERS"
    | "SPLIT_CLUSTER";
  start?: number;
  end?: number;
  mtype?: string;
  mention_id?: string;
  kb_id?: string | null;
  cluster_a?: string;
  cluster_b?: string;
  cluster_id?: string;
  member_ids?: string[];
}

export interface EditResponse {
  doc: DocumentPayload;
  changes: unknown[];
}

export interface StatsPayload {
  chats: number;
  processed_chats: number;
  messages: number;
  attachments: number;
  persons: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export type Filters = Map<string, Set<string>>;

async function parseError(resp: Response): Promise<ApiError> {
  let code = "E_HTTP";
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    code = body.error ?? code;
    detail = body.detail ?? detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, code, detail);
}

export class Api {
  constructor(readonly base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.base + path);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  search(query: string, filters: Filters, wantCounts = true): Promise<SearchPayload> {
    const params = new URLSearchParams();
    if (query.trim()) params.set("q", query.trim());
    if (wantCounts) params.set("counts", "true");
    for (const [facet, values] of filters) {
      for (const value of values) params.append(`facet.${facet}`, value);
    }
    return this.get<SearchPayload>(`/api/search?${params.toString()}`);
  }

  stats(): Promise<StatsPayload> {
    return this.get<StatsPayload>("/api/stats");
  }

  chat(docId: string): Promise<DocumentPayload> {
    return this.get<DocumentPayload>(`/api/chats/${encodeURIComponent(docId)}`);
  }

  async patchAnnotations(
    docId: string,
    digest: string,
    ops: EditOp[],
  ): Promise<EditResponse> {
    const resp = await fetch(
      `${this.base}/api/chats/${encodeURIComponent(docId)}/annotations`,
      {
        method: "PATCH",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text_sha256: digest, ops }),
      },
    );
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as EditResponse;
  }

  mediaUrl(attachmentId: string): string {
    return `${this.base}/api/media/${encodeURIComponent(attachmentId)}`;
  }
}
