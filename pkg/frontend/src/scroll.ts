// Infinite scrolling over a paginated fetch. One in-flight request at a time,
// rows deduplicated by id, a retry control on failure, and nothing re-renders
// the rows already on screen: pages only append.

export interface Page<T> {
  items: T[];
  total: number;
}

export interface InfiniteListOptions<T> {
  container: HTMLElement;
  fetchPage: (page: number) => Promise<Page<T>>;
  renderItem: (item: T) => HTMLElement;
  idOf: (item: T) => string;
  /** px from the bottom that triggers the next page fetch */
  threshold?: number;
}

export class InfiniteList<T> {
  fetches = 0;
  total: number | null = null;

  private page = 0;
  private done = false;
  private loading = false;
  private seen = new Set<string>();
  private sentinel: HTMLElement;

  constructor(private options: InfiniteListOptions<T>) {
    this.sentinel = document.createElement("div");
    this.sentinel.className = "scroll-sentinel";
    options.container.append(this.sentinel);
  }

  get rowCount(): number {
    return this.seen.size;
  }

  get exhausted(): boolean {
    return this.done;
  }

  get pending(): boolean {
    return this.loading;
  }

  /** Load the next page unless exhausted or a fetch is already in flight. */
  async loadNext(): Promise<void> {
    if (this.done || this.loading) return;
    this.loading = true;
    this.sentinel.textContent = "loading…";
    this.fetches += 1;
    let page: Page<T>;
    try {
      page = await this.options.fetchPage(this.page);
    } catch (error) {
      this.loading = false;
      this.showRetry(error);
      return;
    }
    this.loading = false;
    this.total = page.total;
    for (const item of page.items) {
      const id = this.options.idOf(item);
      if (this.seen.has(id)) continue; // never show a listing twice
      this.seen.add(id);
      this.options.container.insertBefore(
        this.options.renderItem(item),
        this.sentinel,
      );
    }
    this.page += 1;
    if (page.items.length === 0 || this.seen.size >= page.total) {
      this.done = true;
      this.sentinel.textContent = this.seen.size === 0 ? "" : "end of results";
    } else {
      this.sentinel.textContent = "";
    }
  }

  private showRetry(error: unknown): void {
    this.sentinel.textContent = "";
    const button = document.createElement("button");
    button.className = "retry";
    button.textContent = "loading failed, retry";
    button.title = error instanceof Error ? error.message : String(error);
    button.addEventListener("click", () => {
      button.remove();
      void this.loadNext();
    });
    this.sentinel.append(button);
  }

  /** Hook for scroll events: fetch when the viewport nears the bottom. */
  onScroll(scrollTop: number, viewportHeight: number, contentHeight: number): void {
    const threshold = this.options.threshold ?? 200;
    if (scrollTop + viewportHeight >= contentHeight - threshold) {
      void this.loadNext();
    }
  }

  attachTo(target: Window): void {
    target.addEventListener("scroll", () => {
      const doc = target.document.documentElement;
      this.onScroll(doc.scrollTop, target.innerHeight, doc.scrollHeight);
    });
  }
}
