/**
 * Annotation editing: builds EditOps from UI gestures and submits them with
 * the digest the document was read at. A 409 means someone else moved the
 * text under us: the document reloads and the user retries; local state is
 * never written over the server's.
 */

import { Api, ApiError, DocumentPayload, EditOp, MentionPayload } from "./api.js";

export const MENTION_TYPES = ["PER", "ORG", "LOC", "DATE", "MONEY", "MISC"];

export interface EditEvents {
  onApplied(doc: DocumentPayload): void;
  onReloaded(doc: DocumentPayload, reason: string): void;
  onError(message: string): void;
}

export class EditController {
  private busy = false;

  constructor(
    private readonly api: Api,
    private readonly events: EditEvents,
  ) {}

  doc: DocumentPayload | null = null;

  load(doc: DocumentPayload): void {
    this.doc = doc;
  }

  get digest(): string {
    if (!this.doc) throw new Error("no document loaded");
    return this.doc.text_sha256;
  }

  deleteMention(mention: MentionPayload): Promise<boolean> {
    return this.submit([{ kind: "DELETE_MENTION", mention_id: mention.id }]);
  }

  retypeMention(mention: MentionPayload, mtype: string): Promise<boolean> {
    if (mtype === mention.type) {
      // no-op retype: nothing to send
      return Promise.resolve(false);
    }
    return this.submit([{ kind: "RETYPE", mention_id: mention.id, mtype }]);
  }

  relinkMention(mention: MentionPayload, kbId: string | null): Promise<boolean> {
    return this.submit([{ kind: "RELINK", mention_id: mention.id, kb_id: kbId }]);
  }

  addMention(start: number, end: number, mtype: string): Promise<boolean> {
    return this.submit([{ kind: "ADD_MENTION", start, end, mtype }]);
  }

  mergeClusters(clusterA: string, clusterB: string): Promise<boolean> {
    return this.submit([
      { kind: "MERGE_CLUSTERS", cluster_a: clusterA, cluster_b: clusterB },
    ]);
  }

  splitCluster(clusterId: string, memberIds: string[]): Promise<boolean> {
    return this.submit([
      { kind: "SPLIT_CLUSTER", cluster_id: clusterId, member_ids: memberIds },
    ]);
  }

  /** Submit ops with the held digest; true when the edit was applied. */
  async submit(ops: EditOp[]): Promise<boolean> {
    if (!this.doc) throw new Error("no document loaded");
    if (this.busy) {
      this.events.onError("another edit is still in flight");
      return false;
    }
    this.busy = true;
    const docId = this.doc.doc_id;
    try {
      const response = await this.api.patchAnnotations(docId, this.digest, ops);
      this.doc = response.doc;
      this.events.onApplied(response.doc);
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        const fresh = await this.api.chat(docId);
        this.doc = fresh;
        this.events.onReloaded(
          fresh,
          "Document changed on the server; reloaded. Please redo the edit.",
        );
        return false;
      }
      this.events.onError(err instanceof Error ? err.message : String(err));
      return false;
    } finally {
      this.busy = false;
    }
  }
}
