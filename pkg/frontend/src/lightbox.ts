// The lightbox: an in-page overlay on the right side of the results. One
// click on any listing opens it; opening another selection replaces the
// content without any page navigation, so viewing N listings costs exactly N
// clicks. The message box sits at the bottom; a send failure surfaces the
// API's error code inline and keeps the draft intact.

import { ApiClient, ListingPayload, RequestFailed } from "./api.js";
import { el, clear, fmtDate } from "./util.js";

export class Lightbox {
  opens = 0;

  private root: HTMLElement;
  private selected: ListingPayload | null = null;
  private draft = "";

  constructor(
    private api: ApiClient,
    host: HTMLElement,
    private signedIn: () => boolean,
    private onMessageSent: () => void = () => {},
  ) {
    this.root = el("aside", { class: "lightbox hidden" });
    host.append(this.root);
  }

  get selectedId(): string | null {
    return this.selected ? this.selected.listing_id : null;
  }

  get isOpen(): boolean {
    return !this.root.classList.contains("hidden");
  }

  /** Open (or replace) the overlay for a listing; counts a view. */
  open(listing: ListingPayload): void {
    const replacing = this.selected?.listing_id !== listing.listing_id;
    this.selected = listing;
    if (replacing) this.draft = "";
    this.opens += 1;
    this.root.classList.remove("hidden");
    this.paint();
    void this.api.recordView(listing.listing_id).catch(() => {});
  }

  close(): void {
    this.root.classList.add("hidden");
    this.selected = null;
    clear(this.root);
  }

  private paint(error?: string): void {
    const listing = this.selected;
    if (!listing) return;
    clear(this.root);

    const closeButton = el("button", { class: "lightbox-close" }, ["×"]);
    closeButton.addEventListener("click", () => this.close());
    this.root.append(closeButton);

    this.root.append(el("h2", { class: "lightbox-title" }, [listing.title]));
    const meta: string[] = [listing.category, fmtDate(listing.created_at)];
    if (listing.owner_username) meta.push(`by ${listing.owner_username}`);
    this.root.append(el("div", { class: "lightbox-meta" }, [meta.join(" · ")]));
    if (listing.owner_username) {
      this.root.append(
        el("a", { href: `#/profile/${listing.owner_username}`, class: "owner-link" }, [
          "owner profile",
        ]),
      );
    }
    if (listing.description) {
      this.root.append(el("p", { class: "lightbox-description" }, [listing.description]));
    }
    const valueList = el("dl", { class: "lightbox-values" });
    for (const [label, value] of Object.entries(listing.values)) {
      valueList.append(el("dt", {}, [label]), el("dd", {}, [value]));
    }
    this.root.append(valueList);

    // third navigation step: the full item page
    this.root.append(
      el("a", { href: `#/listings/${listing.listing_id}`, class: "item-link" }, [
        "view full listing",
      ]),
    );

    // message box at the bottom
    const messageBox = el("div", { class: "lightbox-message" });
    if (!this.signedIn()) {
      messageBox.append(
        el("div", { class: "message-hint" }, ["sign in to message the owner"]),
      );
    } else {
      const textarea = el("textarea", {
        class: "message-draft",
        placeholder: "Write to the owner…",
      });
      textarea.value = this.draft;
      textarea.addEventListener("input", () => {
        this.draft = textarea.value;
      });
      const send = el("button", { class: "message-send" }, ["Send"]);
      send.addEventListener("click", () => void this.send());
      messageBox.append(textarea, send);
      if (error) {
        messageBox.append(el("div", { class: "message-error" }, [error]));
      }
    }
    this.root.append(messageBox);
  }

  private async send(): Promise<void> {
    const listing = this.selected;
    if (!listing) return;
    try {
      await this.api.sendMessage({ listing_id: listing.listing_id, body: this.draft });
    } catch (error) {
      const label =
        error instanceof RequestFailed ? error.payload.error_code : "send_failed";
      this.paint(label); // draft preserved
      return;
    }
    this.draft = "";
    this.paint();
    this.root.append(el("div", { class: "message-sent" }, ["message sent"]));
    this.onMessageSent();
  }
}
