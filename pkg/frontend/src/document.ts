/**
 * Document explorer: the serialized chat with mention highlights at exact
 * character offsets, a cluster panel listing every mention of every entity,
 * and an audio player on each transcript line.
 */

import type { Api, DocumentPayload, MentionPayload } from "./api.js";

export interface DocumentCallbacks {
  onMentionMenu(mention: MentionPayload, anchor: HTMLElement): void;
  onMergeClusters(clusterA: string, clusterB: string): void;
  onAddMention(start: number, end: number, anchor: HTMLElement): void;
}

export class DocumentView {
  doc: DocumentPayload | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
    private readonly callbacks: DocumentCallbacks,
  ) {}

  render(doc: DocumentPayload): void {
    this.doc = doc;
    const layout = el("div", "doc-layout");
    layout.append(this.renderClusterPanel(doc), this.renderText(doc));
    const heading = el("h2", "doc-title");
    heading.textContent = doc.doc_id;
    this.root.replaceChildren(heading, layout);
  }

  /** Highlighted span elements, in document order. */
  mentionMarks(): HTMLElement[] {
    return Array.from(this.root.querySelectorAll<HTMLElement>("mark.mention"));
  }

  scrollToMention(mentionId: string): HTMLElement | null {
    const mark = this.root.querySelector<HTMLElement>(
      `mark.mention[data-id="${escapeAttr(mentionId)}"]`,
    );
    if (!mark) return null;
    mark.scrollIntoView?.({ block: "center" });
    for (const other of this.mentionMarks()) other.classList.remove("focused");
    mark.classList.add("focused");
    return mark;
  }

  private clusterGroups(doc: DocumentPayload): Map<string, MentionPayload[]> {
    const groups = new Map<string, MentionPayload[]>();
    for (const mention of doc.mentions) {
      if (!mention.cluster) continue;
      const members = groups.get(mention.cluster) ?? [];
      members.push(mention);
      groups.set(mention.cluster, members);
    }
    return groups;
  }

  private renderClusterPanel(doc: DocumentPayload): HTMLElement {
    const panel = el("aside", "cluster-panel");
    const heading = el("h3");
    heading.textContent = "Entities";
    panel.append(heading);
    for (const [cluster, members] of this.clusterGroups(doc)) {
      const box = el("section", "cluster");
      box.dataset.cluster = cluster;
      box.draggable = true;
      const title = el("h4");
      title.textContent = `${cluster} (${members[0].type})`;
      box.append(title);
      const list = el("ul");
      for (const mention of members) {
        const item = el("li");
        const jump = el("button", "mention-jump") as HTMLButtonElement;
        jump.dataset.mentionId = mention.id;
        jump.textContent = doc.text.slice(mention.start, mention.end);
        jump.addEventListener("click", () => this.scrollToMention(mention.id));
        item.append(jump);
        list.append(item);
      }
      box.append(list);
      box.addEventListener("dragstart", (ev) => {
        ev.dataTransfer?.setData("text/cluster", cluster);
      });
      box.addEventListener("dragover", (ev) => ev.preventDefault());
      box.addEventListener("drop", (ev) => {
        ev.preventDefault();
        const dragged = ev.dataTransfer?.getData("text/cluster");
        if (dragged && dragged !== cluster) {
          this.callbacks.onMergeClusters(dragged, cluster);
        }
      });
      panel.append(box);
    }
    return panel;
  }

  private renderText(doc: DocumentPayload): HTMLElement {
    const pane = el("div", "doc-text");
    pane.id = "doc-text";
    const mentions = [...doc.mentions].sort((a, b) => a.start - b.start);
    const ordinals = Object.keys(doc.offset_map)
      .map(Number)
      .sort((a, b) => a - b);

    for (const ordinal of ordinals) {
      const [lineStart, lineEnd] = doc.offset_map[String(ordinal)];
      const line = el("div", "msg-line");
      line.dataset.ordinal = String(ordinal);
      let cursor = lineStart;
      for (const mention of mentions) {
        if (mention.start < lineStart || mention.end > lineEnd) continue;
        if (mention.start > cursor) {
          line.append(doc.text.slice(cursor, mention.start));
        }
        const mark = el("mark", `mention type-${mention.type}`) as HTMLElement;
        mark.dataset.id = mention.id;
        mark.dataset.start = String(mention.start);
        mark.dataset.end = String(mention.end);
        mark.dataset.cluster = mention.cluster ?? "";
        mark.textContent = doc.text.slice(mention.start, mention.end);
        mark.title = `${mention.type} · ${mention.cluster ?? "unclustered"} · ${mention.provenance}`;
        mark.addEventListener("click", (ev) => {
          ev.stopPropagation();
          this.callbacks.onMentionMenu(mention, mark);
        });
        line.append(mark);
        cursor = mention.end;
      }
      if (cursor < lineEnd) line.append(doc.text.slice(cursor, lineEnd));

      if (doc.sources[String(ordinal)] === "AUDIO" && doc.attachments[String(ordinal)]) {
        const audio = el("audio") as HTMLAudioElement;
        audio.controls = true;
        audio.preload = "none";
        audio.src = this.api.mediaUrl(doc.attachments[String(ordinal)]);
        audio.className = "transcript-audio";
        line.append(audio);
      }
      pane.append(line);
    }

    pane.addEventListener("mouseup", () => this.handleSelection(pane));
    return pane;
  }

  private handleSelection(pane: HTMLElement): void {
    if (!this.doc) return;
    const selection = window.getSelection();
    if (!selection || selection.isCollapsed || !selection.rangeCount) return;
    const range = selection.getRangeAt(0);
    const span = this.rangeToOffsets(range);
    if (span) {
      const anchor =
        range.startContainer instanceof HTMLElement
          ? range.startContainer
          : (range.startContainer.parentElement ?? pane);
      this.callbacks.onAddMention(span[0], span[1], anchor);
    }
    selection.removeAllRanges();
  }

  /** Map a DOM selection inside one message line back to text offsets. */
  private rangeToOffsets(range: Range): [number, number] | null {
    const line = closestLine(range.startContainer);
    if (!line || closestLine(range.endContainer) !== line || !this.doc) return null;
    const [lineStart, lineEnd] = this.doc.offset_map[line.dataset.ordinal ?? ""] ?? [0, 0];
    const start = lineStart + offsetWithin(line, range.startContainer, range.startOffset);
    const end = lineStart + offsetWithin(line, range.endContainer, range.endOffset);
    if (start >= end || end > lineEnd) return null;
    return [start, end];
  }
}

function escapeAttr(value: string): string {
  // enough for [data-id="..."] selectors; ids contain no control chars
  return value.replace(/\\/g, "\\\\").replace(/"/g, '\\"');
}

function closestLine(node: Node): HTMLElement | null {
  const element = node instanceof HTMLElement ? node : node.parentElement;
  return element?.closest<HTMLElement>(".msg-line") ?? null;
}

function offsetWithin(line: HTMLElement, target: Node, offset: number): number {
  // character position of (target, offset) relative to the line start,
  // counting only text content (audio controls contribute none)
  let total = 0;
  const walk = (node: Node): boolean => {
    if (node === target) {
      total += node.nodeType === Node.TEXT_NODE ? offset : 0;
      return true;
    }
    if (node.nodeType === Node.TEXT_NODE) {
      total += (node.textContent ?? "").length;
      return false;
    }
    if (node instanceof HTMLElement && node.tagName === "AUDIO") return false;
    for (const child of Array.from(node.childNodes)) {
      if (walk(child)) return true;
    }
    return false;
  };
  walk(line);
  return total;
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}
