// Search screen: instant search (debounced), category menu and per-category
// filters in the side bar, four switchable result views, infinite scrolling,
// and the lightbox. Stale responses are dropped by sequence number; the
// scroller never fires two fetches for the same page.

import { ApiClient, ListingPayload, SchemaPayload, SearchResponse } from "./api.js";
import { Lightbox } from "./lightbox.js";
import { InfiniteList } from "./scroll.js";
import { el, clear, debounce, SequenceGate } from "./util.js";
import {
  ViewMode,
  VIEW_MODES,
  TileProvider,
  renderListRow,
  renderMap,
  renderTable,
  renderThumbTile,
  savedViewMode,
  saveViewMode,
} from "./views.js";

export const INSTANT_SEARCH_DEBOUNCE_MS = 250;

export interface SearchScreenOptions {
  api: ApiClient;
  results: HTMLElement;
  sidebar: HTMLElement;
  lightbox: Lightbox;
  storage: Storage;
  pageSize?: number;
  mapProvider?: TileProvider | null;
}

export class SearchScreen {
  query = "";
  category: string | null = null;
  filters: Record<string, string> = {};
  mode: ViewMode;

  private gate = new SequenceGate();
  private list: InfiniteList<ListingPayload> | null = null;
  private loaded: ListingPayload[] = [];
  private schemas: SchemaPayload[] = [];

  constructor(private options: SearchScreenOptions) {
    this.mode = savedViewMode(options.storage);
  }

  async init(initialQuery = ""): Promise<void> {
    this.query = initialQuery;
    this.schemas = (await this.options.api.schemas()).schemas;
    this.paintSidebar();
    this.runSearch();
  }

  /** Debounced entry point for the instant search box. */
  readonly instantSearch = debounce((q: string) => {
    this.query = q;
    this.runSearch();
  }, INSTANT_SEARCH_DEBOUNCE_MS);

  setMode(mode: ViewMode): void {
    this.mode = mode;
    saveViewMode(this.options.storage, mode);
    this.runSearch();
  }

  setCategory(category: string | null): void {
    this.category = category;
    this.filters = {};
    this.paintSidebar();
    this.runSearch();
  }

  /** Start a fresh search: resets pagination, keeps the view mode. */
  runSearch(): void {
    const seq = this.gate.next();
    this.loaded = [];
    const container = this.options.results;
    clear(container);
    const grid = el("div", { class: this.mode === "thumbnails" ? "tile-grid" : "row-list" });
    container.append(this.viewSwitcher(), grid);

    this.list = new InfiniteList<ListingPayload>({
      container: grid,
      idOf: (listing) => listing.listing_id,
      renderItem: (listing) => this.renderByMode(listing),
      fetchPage: async (page) => {
        const response = await this.fetchPage(page);
        if (!this.gate.accept(seq)) {
          // a newer query superseded this one; report an empty page so the
          // stale scroller stops without touching the DOM
          return { items: [], total: this.loaded.length };
        }
        this.loaded.push(...response.results.map((r) => r.listing));
        if (this.mode === "map" || this.mode === "tabular") this.paintAggregate();
        return {
          items: response.results.map((r) => r.listing),
          total: response.total,
        };
      },
    });
    void this.list.loadNext().then(() => {
      if (this.list?.exhausted && this.list.rowCount === 0) {
        this.paintEmptyState(container);
      }
    });
  }

  private paintEmptyState(container: HTMLElement): void {
    const reset = el("button", { class: "filter-reset" }, ["clear filters"]);
    reset.addEventListener("click", () => {
      this.filters = {};
      this.category = null;
      this.paintSidebar();
      this.runSearch();
    });
    container.append(
      el("div", { class: "empty-results" }, ["no matching listings ", reset]),
    );
  }

  private fetchPage(page: number): Promise<SearchResponse> {
    return this.options.api.search({
      q: this.query,
      category: this.category ?? undefined,
      view: this.mode,
      page,
      pageSize: this.options.pageSize,
      filters: this.filters,
    });
  }

  get scroller(): InfiniteList<ListingPayload> | null {
    return this.list;
  }

  private renderByMode(listing: ListingPayload): HTMLElement {
    const onSelect = (selected: ListingPayload) => this.options.lightbox.open(selected);
    if (this.mode === "thumbnails") return renderThumbTile(listing, onSelect);
    if (this.mode === "map" || this.mode === "tabular") {
      // aggregate views repaint from this.loaded; per-row nodes stay empty
      return el("span", { class: "aggregate-placeholder" });
    }
    return renderListRow(listing, onSelect);
  }

  /** Map and tabular views render from all loaded rows at once. */
  private paintAggregate(): void {
    const host = this.options.results.querySelector(".aggregate-host");
    const container = host ?? el("div", { class: "aggregate-host" });
    if (!host) this.options.results.append(container);
    clear(container as HTMLElement);
    const onSelect = (selected: ListingPayload) => this.options.lightbox.open(selected);
    if (this.mode === "tabular") {
      container.append(renderTable(this.loaded, onSelect));
    } else {
      container.append(
        renderMap(this.loaded, this.options.mapProvider ?? null, onSelect),
      );
    }
  }

  private viewSwitcher(): HTMLElement {
    const bar = el("div", { class: "view-switcher" });
    for (const mode of VIEW_MODES) {
      const button = el(
        "button",
        { class: mode === this.mode ? "view-button active" : "view-button" },
        [mode],
      );
      button.addEventListener("click", () => this.setMode(mode));
      bar.append(button);
    }
    return bar;
  }

  private paintSidebar(): void {
    const sidebar = this.options.sidebar;
    clear(sidebar);
    sidebar.append(el("h3", {}, ["Categories"]));
    const allItem = el("div", { class: this.category ? "cat" : "cat active" }, ["all"]);
    allItem.addEventListener("click", () => this.setCategory(null));
    sidebar.append(allItem);
    for (const schema of this.schemas) {
      const item = el(
        "div",
        { class: schema.category === this.category ? "cat active" : "cat" },
        [schema.category],
      );
      item.addEventListener("click", () => this.setCategory(schema.category));
      sidebar.append(item);
    }
    if (!this.category) return;
    const schema = this.schemas.find((s) => s.category === this.category);
    if (!schema) return;
    const filterable = schema.fields.filter((f) => f.visible_in_search_filter);
    if (filterable.length === 0) return;
    sidebar.append(el("h3", {}, ["Filters"]));
    for (const field of filterable) {
      const input = el("input", {
        class: "filter-input",
        placeholder:
          field.data_type === "currency" || field.data_type === "number"
            ? `${field.label} (lo..hi)`
            : field.label,
      });
      input.value = this.filters[field.label] ?? "";
      input.addEventListener("change", () => {
        if (input.value) this.filters[field.label] = input.value;
        else delete this.filters[field.label];
        this.runSearch();
      });
      sidebar.append(input);
    }
  }
}
