// Application shell: fixed top bar (brand, instant search, unread badge,
// auth controls), fixed category side bar, hash router, and the lightbox
// shared by feed and search. Three steps reach any listing's details:
// type a query, browse the results, click one.

import { ApiClient } from "./api.js";
import { Lightbox } from "./lightbox.js";
import { SearchScreen } from "./search.js";
import {
  renderAuthForms,
  renderFeed,
  renderFolder,
  renderItemPage,
  renderPostForm,
  renderProfile,
  FolderName,
} from "./screens.js";
import { el, clear } from "./util.js";
import { OfflineGridProvider } from "./views.js";

const TOKEN_KEY = "netboard.session";
const USERNAME_KEY = "netboard.username";

export class App {
  api: ApiClient;
  username: string | null = null;

  private content!: HTMLElement;
  private sidebar!: HTMLElement;
  private badge!: HTMLElement;
  private authSlot!: HTMLElement;
  private searchBox!: HTMLInputElement;
  private lightbox!: Lightbox;
  private search: SearchScreen | null = null;

  constructor(
    private root: HTMLElement,
    private win: Window = window,
    api?: ApiClient,
  ) {
    this.api = api ?? new ApiClient("");
    const storage = this.win.sessionStorage;
    this.api.token = storage.getItem(TOKEN_KEY);
    this.username = storage.getItem(USERNAME_KEY);
  }

  signedIn(): boolean {
    return this.api.token !== null;
  }

  async start(): Promise<void> {
    this.paintShell();
    this.win.addEventListener("hashchange", () => void this.route());
    await this.route();
  }

  private paintShell(): void {
    clear(this.root);
    this.badge = el("span", { class: "unread-badge hidden" });
    this.searchBox = el("input", {
      class: "instant-search",
      placeholder: "instant search…",
    });
    this.searchBox.addEventListener("input", () => {
      if (!this.win.location.hash.startsWith("#/search")) {
        this.win.location.hash = "#/search";
      }
      this.search?.instantSearch(this.searchBox.value);
    });
    this.authSlot = el("span", { class: "auth-slot" });

    const topbar = el("header", { class: "topbar" }, [
      el("a", { href: "#/", class: "brand" }, ["netboard"]),
      this.searchBox,
      el("a", { href: "#/search", class: "nav-link" }, ["browse"]),
      el("a", { href: "#/post", class: "nav-link" }, ["post"]),
      el("a", { href: "#/inbox", class: "nav-link inbox-link" }, ["inbox", this.badge]),
      this.authSlot,
    ]);
    this.sidebar = el("nav", { class: "sidebar" });
    this.content = el("main", { class: "content" });
    const host = el("div", { class: "shell" }, [topbar, this.sidebar, this.content]);
    this.root.append(host);
    this.lightbox = new Lightbox(
      this.api,
      host,
      () => this.signedIn(),
      () => void this.refreshBadge(),
    );
    this.paintAuthSlot();
  }

  private paintAuthSlot(): void {
    clear(this.authSlot);
    if (this.signedIn() && this.username) {
      const me = el("a", { href: `#/profile/${this.username}`, class: "nav-link" }, [
        this.username,
      ]);
      const out = el("button", { class: "logout" }, ["sign out"]);
      out.addEventListener("click", async () => {
        await this.api.logout().catch(() => {});
        this.setSession(null, null);
        this.win.location.hash = "#/";
      });
      this.authSlot.append(me, out);
    } else {
      this.authSlot.append(
        el("a", { href: "#/login", class: "nav-link" }, ["sign in"]),
        el("a", { href: "#/register", class: "nav-link" }, ["register"]),
      );
    }
  }

  private setSession(token: string | null, username: string | null): void {
    this.api.token = token;
    this.username = username;
    const storage = this.win.sessionStorage;
    if (token && username) {
      storage.setItem(TOKEN_KEY, token);
      storage.setItem(USERNAME_KEY, username);
    } else {
      storage.removeItem(TOKEN_KEY);
      storage.removeItem(USERNAME_KEY);
    }
    this.paintAuthSlot();
    void this.refreshBadge();
  }

  async refreshBadge(): Promise<void> {
    if (!this.signedIn()) {
      this.badge.classList.add("hidden");
      return;
    }
    try {
      const { unread } = await this.api.unreadCount();
      this.badge.textContent = unread ? String(unread) : "";
      this.badge.classList.toggle("hidden", unread === 0);
    } catch {
      this.badge.classList.add("hidden");
    }
  }

  async route(): Promise<void> {
    const hash = this.win.location.hash || "#/";
    const [path, queryString] = hash.slice(1).split("?");
    const parts = path.split("/").filter(Boolean);
    this.lightbox.close();
    this.search = null;
    clear(this.sidebar);
    void this.refreshBadge();

    if (parts.length === 0) {
      renderFeed(this.api, this.content, this.lightbox).attachTo(this.win);
      return;
    }
    switch (parts[0]) {
      case "search": {
        const params = new URLSearchParams(queryString ?? "");
        this.search = new SearchScreen({
          api: this.api,
          results: this.content,
          sidebar: this.sidebar,
          lightbox: this.lightbox,
          storage: this.win.sessionStorage,
          mapProvider: new OfflineGridProvider(),
        });
        clear(this.content);
        await this.search.init(params.get("q") ?? this.searchBox.value);
        const screen = this.search;
        this.win.addEventListener("scroll", () => {
          const doc = this.win.document.documentElement;
          screen.scroller?.onScroll(doc.scrollTop, this.win.innerHeight, doc.scrollHeight);
        });
        return;
      }
      case "listings":
        await renderItemPage(this.api, this.content, parts[1], this.signedIn(), () =>
          void this.refreshBadge(),
        );
        return;
      case "profile":
        await renderProfile(this.api, this.content, parts[1], this.username);
        return;
      case "inbox":
      case "sent":
      case "deleted":
        await renderFolder(this.api, this.content, parts[0] as FolderName, () =>
          void this.refreshBadge(),
        );
        return;
      case "post":
        await renderPostForm(this.api, this.content, () => {});
        return;
      case "login":
      case "register":
        renderAuthForms(this.api, this.content, parts[0], (username) => {
          this.setSession(this.api.token, username);
          this.win.location.hash = "#/";
        });
        return;
      default:
        clear(this.content);
        this.content.append(el("p", {}, ["page not found"]));
    }
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (root) void new App(root).start();
}
