/**
 * Application shell: hash routing between the faceted search view and the
 * document explorer, plus the mention context menu and error banner.
 */

import { Api, Filters, MentionPayload } from "./api.js";
import { DocumentView } from "./document.js";
import { EditController, MENTION_TYPES } from "./edit.js";
import { SearchView } from "./search.js";

export class App {
  readonly api: Api;
  readonly searchView: SearchView;
  readonly documentView: DocumentView;
  readonly editor: EditController;

  private searchRoot: HTMLElement;
  private docRoot: HTMLElement;
  private banner: HTMLElement;
  private lastAction: (() => Promise<void>) | null = null;

  constructor(root: HTMLElement, apiBase = "") {
    this.api = new Api(apiBase);
    this.banner = el("div", "banner hidden");
    this.searchRoot = el("div", "view search-view");
    this.docRoot = el("div", "view doc-view hidden");
    root.replaceChildren(this.banner, this.searchRoot, this.docRoot);

    this.searchView = new SearchView(this.searchRoot, {
      onQueryChange: (query, filters) => void this.runSearch(query, filters),
      onOpenChat: (chatId) => void this.openChat(chatId),
    });
    this.editor = new EditController(this.api, {
      onApplied: (doc) => this.documentView.render(doc),
      onReloaded: (doc, reason) => {
        this.documentView.render(doc);
        this.showBanner(reason);
      },
      onError: (message) => this.showBanner(message),
    });
    this.documentView = new DocumentView(this.docRoot, this.api, {
      onMentionMenu: (mention, anchor) => this.openMentionMenu(mention, anchor),
      onMergeClusters: (a, b) => void this.editor.mergeClusters(a, b),
      onAddMention: (start, end, anchor) => this.openAddMenu(start, end, anchor),
    });
  }

  async start(): Promise<void> {
    window.addEventListener("hashchange", () => void this.route());
    await this.route();
  }

  async route(): Promise<void> {
    const hash = window.location.hash;
    const chatMatch = /^#\/chat\/(.+)$/.exec(hash);
    if (chatMatch) {
      const chatId = decodeURIComponent(chatMatch[1]);
      // openChat already rendered this document and set the hash itself
      if (this.editor.doc?.doc_id === chatId && !this.docRoot.classList.contains("hidden")) {
        return;
      }
      await this.openChat(chatId, false);
    } else {
      this.showSearch();
      await this.runSearch(this.searchView.query, this.searchView.filters);
    }
  }

  showSearch(): void {
    this.searchRoot.classList.remove("hidden");
    this.docRoot.classList.add("hidden");
  }

  async runSearch(query: string, filters: Filters): Promise<void> {
    this.lastAction = () => this.runSearch(query, filters);
    // keep view state authoritative so the next facet click composes with it
    this.searchView.query = query;
    this.searchView.filters = filters;
    if (!query.trim() && !filters.size) {
      this.searchView.render({
        chats: [],
        counts: { chats: 0, messages: 0, transcripts: 0 },
        facets: {},
      });
      return;
    }
    try {
      const payload = await this.api.search(query, filters, true);
      this.searchView.render(payload);
      this.hideBanner();
    } catch (err) {
      this.showBanner(err instanceof Error ? err.message : String(err), true);
    }
  }

  async openChat(chatId: string, pushHash = true): Promise<void> {
    this.lastAction = () => this.openChat(chatId, false);
    try {
      const doc = await this.api.chat(chatId);
      if (pushHash) window.location.hash = `#/chat/${chatId}`;
      this.editor.load(doc);
      this.documentView.render(doc);
      this.searchRoot.classList.add("hidden");
      this.docRoot.classList.remove("hidden");
      this.hideBanner();
    } catch (err) {
      this.showBanner(err instanceof Error ? err.message : String(err), true);
    }
  }

  openMentionMenu(mention: MentionPayload, anchor: HTMLElement): void {
    this.closeMenus();
    const menu = el("div", "mention-menu");
    menu.dataset.mentionId = mention.id;

    const del = menuButton("Delete", () => void this.editor.deleteMention(mention));
    menu.append(del);

    const retype = el("select") as HTMLSelectElement;
    retype.className = "retype-select";
    for (const t of MENTION_TYPES) {
      const opt = document.createElement("option");
      opt.value = t;
      opt.textContent = `retype: ${t}`;
      if (t === mention.type) opt.selected = true;
      retype.append(opt);
    }
    retype.addEventListener("change", () => {
      void this.editor.retypeMention(mention, retype.value);
    });
    menu.append(retype);

    const relink = menuButton("Relink...", () => {
      const kbId = window.prompt("Knowledge-base id (empty for NIL):", mention.link.kb_id ?? "");
      if (kbId === null) return;
      void this.editor.relinkMention(mention, kbId.trim() || null);
    });
    menu.append(relink);

    if (mention.cluster?.startsWith("NIL-")) {
      const split = menuButton("Split out of cluster", () => {
        void this.editor.splitCluster(mention.cluster as string, [mention.id]);
      });
      menu.append(split);
    }

    anchor.append(menu);
  }

  openAddMenu(start: number, end: number, anchor: HTMLElement): void {
    this.closeMenus();
    const menu = el("div", "mention-menu add-menu");
    for (const t of MENTION_TYPES) {
      menu.append(
        menuButton(`+ ${t}`, () => void this.editor.addMention(start, end, t)),
      );
    }
    anchor.append(menu);
  }

  closeMenus(): void {
    for (const open of Array.from(document.querySelectorAll(".mention-menu"))) {
      open.remove();
    }
  }

  showBanner(message: string, withRetry = false): void {
    this.banner.replaceChildren();
    this.banner.classList.remove("hidden");
    const text = el("span");
    text.textContent = message;
    this.banner.append(text);
    if (withRetry && this.lastAction) {
      const retry = menuButton("Retry", () => {
        this.hideBanner();
        void this.lastAction?.();
      });
      this.banner.append(retry);
    }
  }

  hideBanner(): void {
    this.banner.classList.add("hidden");
    this.banner.replaceChildren();
  }
}

function menuButton(label: string, onClick: () => void): HTMLButtonElement {
  const button = document.createElement("button");
  button.type = "button";
  button.textContent = label;
  button.addEventListener("click", (ev) => {
    ev.stopPropagation();
    onClick();
  });
  return button;
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

declare global {
  interface Window {
    casekitApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const app = new App(document.getElementById("app") as HTMLElement);
  window.casekitApp = app;
  void app.start();
}
