// The non-search screens: newsfeed home, item page, profile with manage
// controls and undo, the message folders, and the auth/post forms. Every
// screen renders only fields present in the API payload.

import {
  ApiClient,
  ListingPayload,
  ProfileResponse,
  RequestFailed,
  SchemaField,
  ThreadView,
} from "./api.js";
import { Lightbox } from "./lightbox.js";
import { InfiniteList } from "./scroll.js";
import { el, clear, fmtDate } from "./util.js";
import { renderListRow } from "./views.js";

function errorBanner(error: unknown): HTMLElement {
  const label =
    error instanceof RequestFailed
      ? `${error.payload.error_code}: ${error.payload.message}`
      : String(error);
  return el("div", { class: "error-banner" }, [label]);
}

export function renderFeed(
  api: ApiClient,
  container: HTMLElement,
  lightbox: Lightbox,
  pageSize?: number,
): InfiniteList<ListingPayload> {
  clear(container);
  container.append(el("h2", {}, ["Newsfeed"]));
  const rows = el("div", { class: "row-list" });
  container.append(rows);
  const list = new InfiniteList<ListingPayload>({
    container: rows,
    idOf: (listing) => listing.listing_id,
    renderItem: (listing) => renderListRow(listing, (l) => lightbox.open(l)),
    fetchPage: async (page) => {
      const response = await api.feed(page, pageSize);
      return { items: response.listings, total: response.total };
    },
  });
  void list.loadNext();
  return list;
}

export async function renderItemPage(
  api: ApiClient,
  container: HTMLElement,
  listingId: string,
  signedIn: boolean,
  onMessageSent: () => void,
): Promise<void> {
  clear(container);
  let listing: ListingPayload;
  try {
    listing = await api.listing(listingId);
  } catch (error) {
    container.append(errorBanner(error));
    return;
  }
  void api.recordView(listingId).catch(() => {});
  container.append(el("h2", {}, [listing.title]));
  const meta = [listing.category, fmtDate(listing.created_at)];
  if (listing.owner_username) meta.push(`by ${listing.owner_username}`);
  if (listing.view_count !== undefined) meta.push(`${listing.view_count} views`);
  container.append(el("div", { class: "item-meta" }, [meta.join(" · ")]));
  if (listing.owner_username) {
    container.append(
      el("a", { href: `#/profile/${listing.owner_username}` }, ["owner profile"]),
    );
  }
  if (listing.description) {
    container.append(el("p", { class: "item-description" }, [listing.description]));
  }
  const values = el("dl", { class: "item-values" });
  for (const [label, value] of Object.entries(listing.values)) {
    values.append(el("dt", {}, [label]), el("dd", {}, [value]));
  }
  container.append(values);
  if (listing.tags && listing.tags.length) {
    container.append(el("div", { class: "item-tags" }, [listing.tags.join(", ")]));
  }
  if (signedIn) {
    const draft = el("textarea", { class: "message-draft", placeholder: "Write to the owner…" });
    const send = el("button", {}, ["Send message"]);
    const slot = el("div", { class: "item-message" }, [draft, send]);
    send.addEventListener("click", async () => {
      try {
        await api.sendMessage({ listing_id: listingId, body: draft.value });
        slot.append(el("div", { class: "message-sent" }, ["message sent"]));
        draft.value = "";
        onMessageSent();
      } catch (error) {
        slot.append(errorBanner(error));
      }
    });
    container.append(slot);
  }
}

const UNDOABLE = new Set(["hide", "delete"]);

export async function renderProfile(
  api: ApiClient,
  container: HTMLElement,
  username: string,
  ownUsername: string | null,
): Promise<void> {
  clear(container);
  let profile: ProfileResponse;
  try {
    profile = await api.profile(username);
  } catch (error) {
    container.append(errorBanner(error));
    return;
  }
  const own = ownUsername === profile.username;
  container.append(el("h2", {}, [profile.username]));
  const table = el("div", { class: "profile-list" });
  container.append(table);
  for (const item of profile.listings) {
    const row = el("div", { class: "profile-row", "data-listing": item.listing_id });
    const label = [item.category, item.status, fmtDate(item.created_at)];
    if (item.view_count !== undefined) label.push(`${item.view_count} views`);
    row.append(
      el("a", { href: `#/listings/${item.listing_id}`, class: "profile-title" }, [
        item.title,
      ]),
      el("span", { class: "profile-meta" }, [label.join(" · ")]),
    );
    if (own) {
      const controls = el("span", { class: "manage" });
      const actions = item.status === "deleted" ? [] : ["edit", "hide", "delete"];
      for (const action of actions) {
        const button = el("button", { class: `manage-${action}` }, [action]);
        button.addEventListener("click", async () => {
          if (action === "edit") {
            window.location.hash = `#/listings/${item.listing_id}`;
            return;
          }
          try {
            await api.mutateListing(item.listing_id, { action });
            await renderProfile(api, container, username, ownUsername);
            if (UNDOABLE.has(action)) {
              const undo = el("button", { class: "undo-button" }, [`undo ${action}`]);
              undo.addEventListener("click", async () => {
                await api.mutateListing(item.listing_id, { action: "undo" });
                await renderProfile(api, container, username, ownUsername);
              });
              container.prepend(el("div", { class: "undo-bar" }, [undo]));
            }
          } catch (error) {
            row.append(errorBanner(error));
          }
        });
        controls.append(button);
      }
      if (item.status === "deleted" || item.status === "hidden") {
        const undo = el("button", { class: "undo-button" }, ["undo"]);
        undo.addEventListener("click", async () => {
          try {
            await api.mutateListing(item.listing_id, { action: "undo" });
            await renderProfile(api, container, username, ownUsername);
          } catch (error) {
            row.append(errorBanner(error));
          }
        });
        controls.append(undo);
      }
      row.append(controls);
    }
    table.append(row);
  }
}

export type FolderName = "inbox" | "sent" | "deleted";

export async function renderFolder(
  api: ApiClient,
  container: HTMLElement,
  folder: FolderName,
  onRead: () => void,
): Promise<void> {
  clear(container);
  container.append(el("h2", {}, [folder]));
  const tabs = el("div", { class: "folder-tabs" });
  for (const name of ["inbox", "sent", "deleted"] as FolderName[]) {
    tabs.append(
      el("a", { href: `#/${name}`, class: name === folder ? "tab active" : "tab" }, [name]),
    );
  }
  container.append(tabs);
  let threads: ThreadView[];
  try {
    threads = (await api.folder(folder)).threads;
  } catch (error) {
    container.append(errorBanner(error));
    return;
  }
  if (threads.length === 0) {
    container.append(el("div", { class: "empty-folder" }, ["nothing here"]));
    return;
  }
  const listSlot = el("div", { class: "thread-list" });
  const detailSlot = el("div", { class: "thread-detail" });
  container.append(listSlot, detailSlot);
  for (const thread of threads) {
    const unread = thread.messages.filter((m) => !m.mine && !m.read).length;
    const row = el("div", { class: "thread-row", "data-thread": thread.thread_id }, [
      el("span", { class: "thread-subject" }, [thread.subject]),
      el("span", { class: "thread-counterpart" }, [thread.counterpart]),
      unread ? el("span", { class: "thread-unread" }, [String(unread)]) : "",
    ]);
    row.addEventListener("click", async () => {
      const detail = await api.thread(folder, thread.thread_id); // marks read
      onRead();
      paintThread(api, detailSlot, folder, detail, onRead);
    });
    listSlot.append(row);
  }
}

function paintThread(
  api: ApiClient,
  slot: HTMLElement,
  folder: FolderName,
  thread: ThreadView,
  onRead: () => void,
): void {
  clear(slot);
  slot.append(el("h3", {}, [thread.subject]));
  for (const message of thread.messages) {
    const row = el("div", { class: message.mine ? "msg mine" : "msg theirs" }, [
      el("span", { class: "msg-sender" }, [message.sender]),
      el("span", { class: "msg-body" }, [message.body]),
      el("span", { class: "msg-date" }, [fmtDate(message.sent_at)]),
    ]);
    const remove = el("button", { class: "msg-delete" }, ["delete"]);
    remove.addEventListener("click", async () => {
      await api.deleteMessage(message.message_id);
      const refreshed = await api.thread(folder, thread.thread_id);
      paintThread(api, slot, folder, refreshed, onRead);
    });
    row.append(remove);
    slot.append(row);
  }
  const draft = el("textarea", { class: "message-draft", placeholder: "Reply…" });
  const send = el("button", {}, ["Reply"]);
  send.addEventListener("click", async () => {
    try {
      await api.sendMessage({ thread_id: thread.thread_id, body: draft.value });
      const refreshed = await api.thread(folder, thread.thread_id);
      paintThread(api, slot, folder, refreshed, onRead);
    } catch (error) {
      slot.append(errorBanner(error));
    }
  });
  slot.append(el("div", { class: "thread-reply" }, [draft, send]));
}

function fieldInput(field: SchemaField): HTMLElement {
  if (field.input_type === "textarea") {
    return el("textarea", { "data-label": field.label, class: "field-input" });
  }
  if (field.input_type === "checkbox") {
    return el("input", { "data-label": field.label, class: "field-input", type: "checkbox" });
  }
  if (field.input_type === "select") {
    // templates carry no option lists; free entry with a datalist-less select
    // degrades to a text input
    return el("input", { "data-label": field.label, class: "field-input" });
  }
  return el("input", { "data-label": field.label, class: "field-input" });
}

/** Post form generated from the category template; submits then offers to add another. */
export async function renderPostForm(
  api: ApiClient,
  container: HTMLElement,
  onPosted: (listing: ListingPayload) => void,
): Promise<void> {
  clear(container);
  container.append(el("h2", {}, ["Post a listing"]));
  const { schemas } = await api.schemas();
  const form = el("div", { class: "post-form" });
  container.append(form);

  const paint = (category: string) => {
    clear(form);
    const picker = el("select", { class: "category-picker" });
    for (const schema of schemas) {
      const option = el("option", { value: schema.category }, [schema.category]);
      if (schema.category === category) option.setAttribute("selected", "selected");
      picker.append(option);
    }
    picker.addEventListener("change", () => paint(picker.value));
    form.append(el("label", {}, ["category ", picker]));

    const schema = schemas.find((s) => s.category === category)!;
    const inputs: HTMLElement[] = [];
    for (const field of schema.fields) {
      const input = fieldInput(field);
      inputs.push(input);
      form.append(el("label", { class: "field-label" }, [`${field.label} `, input]));
    }
    const subcategory = el("input", { class: "aux-subcategory", placeholder: "subcategory" });
    const tags = el("input", { class: "aux-tags", placeholder: "tags, comma separated" });
    const description = el("textarea", { class: "aux-description", placeholder: "description" });
    const visibility = el("select", { class: "aux-visibility" }, [
      el("option", { value: "network" }, ["my network only"]),
      el("option", { value: "public" }, ["public"]),
    ]);
    form.append(
      el("label", {}, ["subcategory ", subcategory]),
      el("label", {}, ["tags ", tags]),
      el("label", {}, ["description ", description]),
      el("label", {}, ["visibility ", visibility]),
    );
    const submit = el("button", { class: "post-submit" }, ["Post"]);
    form.append(submit);
    submit.addEventListener("click", async () => {
      const values: Record<string, string> = {};
      for (const input of inputs) {
        const label = input.getAttribute("data-label")!;
        const value =
          input instanceof HTMLInputElement && input.type === "checkbox"
            ? input.checked
              ? "yes"
              : ""
            : (input as HTMLInputElement | HTMLTextAreaElement).value;
        if (value) values[label] = value;
      }
      try {
        const listing = await api.createListing({
          category,
          values,
          subcategory: subcategory.value || undefined,
          tags: tags.value ? tags.value.split(",").map((t) => t.trim()) : undefined,
          description: description.value || undefined,
          visibility: visibility.value,
        });
        // confirmation plus an immediately reusable form
        form.prepend(
          el("div", { class: "post-confirmation" }, [
            `posted ${listing.title} — add another below`,
          ]),
        );
        for (const input of inputs) {
          (input as HTMLInputElement | HTMLTextAreaElement).value = "";
        }
        onPosted(listing);
      } catch (error) {
        form.append(errorBanner(error));
      }
    });
  };
  if (schemas.length) paint(schemas[0].category);
}

export function renderAuthForms(
  api: ApiClient,
  container: HTMLElement,
  mode: "login" | "register",
  onSignedIn: (username: string) => void,
): void {
  clear(container);
  container.append(el("h2", {}, [mode === "login" ? "Sign in" : "Register"]));
  const form = el("div", { class: "auth-form" });
  container.append(form);
  const username = el("input", { placeholder: "username" });
  const password = el("input", { placeholder: "password", type: "password" });
  if (mode === "register") {
    const email = el("input", { placeholder: "campus email" });
    const submit = el("button", {}, ["Register"]);
    form.append(
      el("label", {}, ["email ", email]),
      el("label", {}, ["username ", username]),
      el("label", {}, ["password ", password]),
      submit,
    );
    submit.addEventListener("click", async () => {
      try {
        await api.register(email.value, username.value, password.value);
        form.append(
          el("div", { class: "register-pending" }, [
            "account created; open the verification link we mailed you, then sign in",
          ]),
        );
      } catch (error) {
        form.append(errorBanner(error));
      }
    });
    return;
  }
  const submit = el("button", {}, ["Sign in"]);
  form.append(
    el("label", {}, ["username ", username]),
    el("label", {}, ["password ", password]),
    submit,
  );
  submit.addEventListener("click", async () => {
    try {
      const session = await api.login(username.value, password.value);
      onSignedIn(session.username);
    } catch (error) {
      form.append(errorBanner(error));
    }
  });
}
