/**
 * Faceted search view: query box, facet panel, result list. All counts and
 * snippets come verbatim from the API payload; clicking a facet value adds
 * that filter and re-queries through the controller callback.
 */

import type { Filters, SearchPayload } from "./api.js";

const FACET_ORDER = [
  "participant",
  "sender",
  "entity",
  "entity_type",
  "attachment",
  "date",
  "source",
];

export interface SearchCallbacks {
  onQueryChange(query: string, filters: Filters): void;
  onOpenChat(chatId: string): void;
}

export class SearchView {
  query = "";
  filters: Filters = new Map();
  lastPayload: SearchPayload | null = null;

  private root: HTMLElement;

  constructor(
    container: HTMLElement,
    private readonly callbacks: SearchCallbacks,
  ) {
    this.root = container;
  }

  toggleFilter(facet: string, value: string): void {
    const values = this.filters.get(facet) ?? new Set<string>();
    if (values.has(value)) {
      values.delete(value);
      if (!values.size) this.filters.delete(facet);
      else this.filters.set(facet, values);
    } else {
      values.add(value);
      this.filters.set(facet, values);
    }
    this.callbacks.onQueryChange(this.query, this.filters);
  }

  setQuery(query: string): void {
    this.query = query;
    this.callbacks.onQueryChange(this.query, this.filters);
  }

  render(payload: SearchPayload): void {
    this.lastPayload = payload;
    this.root.replaceChildren(
      this.renderSearchBar(),
      this.renderCounts(payload),
      this.renderBody(payload),
    );
  }

  private renderSearchBar(): HTMLElement {
    const bar = el("form", "search-bar") as HTMLFormElement;
    const input = el("input") as HTMLInputElement;
    input.type = "search";
    input.placeholder = "keywords...";
    input.value = this.query;
    input.id = "search-input";
    const button = el("button") as HTMLButtonElement;
    button.type = "submit";
    button.textContent = "Search";
    bar.append(input, button);
    bar.addEventListener("submit", (ev) => {
      ev.preventDefault();
      this.setQuery(input.value);
    });
    return bar;
  }

  private renderCounts(payload: SearchPayload): HTMLElement {
    const { chats, messages, transcripts } = payload.counts;
    const line = el("div", "result-counts");
    line.textContent = `${chats} chats · ${messages} messages · ${transcripts} audio transcripts`;
    return line;
  }

  private renderBody(payload: SearchPayload): HTMLElement {
    const body = el("div", "search-body");
    body.append(this.renderFacetPanel(payload), this.renderResults(payload));
    return body;
  }

  private renderFacetPanel(payload: SearchPayload): HTMLElement {
    const panel = el("aside", "facet-panel");
    const facets = payload.facets ?? {};
    const names = FACET_ORDER.filter((n) => facets[n]).concat(
      Object.keys(facets).filter((n) => !FACET_ORDER.includes(n)).sort(),
    );
    for (const facet of names) {
      const section = el("section", "facet-section");
      const heading = el("h3");
      heading.textContent = facet;
      section.append(heading);
      const list = el("ul");
      for (const [value, count] of Object.entries(facets[facet])) {
        const item = el("li");
        const link = el("button", "facet-value") as HTMLButtonElement;
        const active = this.filters.get(facet)?.has(value) ?? false;
        if (active) link.classList.add("active");
        link.dataset.facet = facet;
        link.dataset.value = value;
        link.textContent = `${value} (${count})`;
        link.addEventListener("click", () => this.toggleFilter(facet, value));
        item.append(link);
        list.append(item);
      }
      section.append(list);
      panel.append(section);
    }
    return panel;
  }

  private renderResults(payload: SearchPayload): HTMLElement {
    const list = el("div", "result-list");
    if (!payload.chats.length) {
      const empty = el("p", "zero-state");
      empty.textContent = "No results.";
      list.append(empty);
      return list;
    }
    for (const hit of payload.chats) {
      const card = el("article", "chat-hit");
      card.dataset.chatId = hit.chat_id;
      const title = el("h2");
      const open = el("a") as HTMLAnchorElement;
      open.href = `#/chat/${hit.chat_id}`;
      open.textContent = hit.chat_id;
      open.addEventListener("click", (ev) => {
        ev.preventDefault();
        this.callbacks.onOpenChat(hit.chat_id);
      });
      title.append(open, ` — ${hit.ordinals.length} matching messages`);
      card.append(title);
      const snippets = el("ul", "snippets");
      hit.snippets.forEach((snippet, i) => {
        const item = el("li");
        item.dataset.ordinal = String(hit.ordinals[i]);
        item.textContent = snippet;
        snippets.append(item);
      });
      card.append(snippets);
      list.append(card);
    }
    return list;
  }
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}
