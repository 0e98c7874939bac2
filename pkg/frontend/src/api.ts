// API client. Every request the UI ever makes goes through this module, so
// the route contract test can enumerate them; nothing else may call fetch.

export interface ApiError {
  error_code: string;
  message: string;
  details?: unknown;
}

export interface ListingPayload {
  listing_id: string;
  redaction_level: "full" | "member" | "anonymous";
  title: string;
  category: string;
  created_at: string;
  values: Record<string, string>;
  subcategory?: string;
  tags?: string[];
  description?: string;
  location?: [number, number];
  visibility?: string;
  status?: string;
  updated_at?: string;
  owner_username?: string;
  owner_network_id?: string;
  view_count?: number;
}

export interface SearchResult {
  listing_id: string;
  score_total: number;
  score_text: number;
  score_location: number;
  score_freshness: number;
  listing: ListingPayload;
}

export interface SearchResponse {
  total: number;
  page: number;
  view: string;
  results: SearchResult[];
}

export interface FeedResponse {
  total: number;
  page: number;
  listings: ListingPayload[];
}

export interface ProfileListing {
  listing_id: string;
  title: string;
  category: string;
  status: string;
  created_at: string;
  view_count?: number;
}

export interface ProfileResponse {
  username: string;
  listings: ProfileListing[];
}

export interface ThreadMessage {
  message_id: string;
  sender: string;
  mine: boolean;
  body: string;
  sent_at: string;
  read: boolean;
}

export interface ThreadView {
  thread_id: string;
  listing_id: string;
  subject: string;
  counterpart: string;
  created_at: string;
  messages: ThreadMessage[];
}

export interface SchemaField {
  label: string;
  input_type: "textbox" | "textarea" | "select" | "checkbox";
  data_type: string;
  visible_in_search_filter: boolean;
}

export interface SchemaPayload {
  category: string;
  version: number;
  fields: SchemaField[];
}

// documented route table; the client builds every request from these shapes
export const ROUTES = [
  "POST /auth/register",
  "GET /verify/{token}",
  "POST /auth/login",
  "POST /auth/logout",
  "GET /feed",
  "GET /search",
  "POST /listings",
  "GET /listings/{id}",
  "PATCH /listings/{id}",
  "POST /listings/{id}/view",
  "POST /listings/{id}/sold",
  "GET /directory/profile/{username}",
  "POST /messages",
  "GET /messages/{folder}",
  "DELETE /messages/{id}",
  "GET /messages/unread-count",
  "GET /schemas",
  "GET /schemas/{category}",
  "POST /schema-requests",
  "GET /health",
] as const;

export class RequestFailed extends Error {
  constructor(public status: number, public payload: ApiError) {
    super(payload.message || payload.error_code);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  token: string | null = null;

  constructor(
    private base: string = "",
    private fetcher: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetcher(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new RequestFailed(response.status, payload as ApiError);
    }
    return payload as T;
  }

  register(email: string, username: string, password: string) {
    return this.request<{ status: string }>("POST", "/auth/register", {
      email,
      username,
      password,
    });
  }

  verify(token: string) {
    return this.request<{ username: string; status: string }>(
      "GET",
      `/verify/${encodeURIComponent(token)}`,
    );
  }

  async login(username: string, password: string) {
    const session = await this.request<{ session_token: string; username: string }>(
      "POST",
      "/auth/login",
      { username, password },
    );
    this.token = session.session_token;
    return session;
  }

  async logout() {
    try {
      await this.request("POST", "/auth/logout");
    } finally {
      this.token = null;
    }
  }

  feed(page: number, pageSize?: number) {
    const params = new URLSearchParams({ page: String(page) });
    if (pageSize) params.set("page_size", String(pageSize));
    return this.request<FeedResponse>("GET", `/feed?${params}`);
  }

  search(options: {
    q?: string;
    category?: string;
    view?: string;
    page?: number;
    pageSize?: number;
    lat?: number;
    lon?: number;
    filters?: Record<string, string>;
  }) {
    const params = new URLSearchParams();
    if (options.q) params.set("q", options.q);
    if (options.category) params.set("category", options.category);
    if (options.view) params.set("view", options.view);
    params.set("page", String(options.page ?? 0));
    if (options.pageSize) params.set("page_size", String(options.pageSize));
    if (options.lat !== undefined && options.lon !== undefined) {
      params.set("lat", String(options.lat));
      params.set("lon", String(options.lon));
    }
    for (const [label, value] of Object.entries(options.filters ?? {})) {
      if (value) params.set(`filter_${label}`, value);
    }
    return this.request<SearchResponse>("GET", `/search?${params}`);
  }

  createListing(body: {
    category: string;
    values: Record<string, string>;
    description?: string;
    subcategory?: string;
    tags?: string[];
    visibility?: string;
    lat?: number;
    lon?: number;
  }) {
    return this.request<ListingPayload>("POST", "/listings", body);
  }

  listing(id: string) {
    return this.request<ListingPayload>("GET", `/listings/${encodeURIComponent(id)}`);
  }

  mutateListing(id: string, body: { action: string } & Record<string, unknown>) {
    return this.request<ListingPayload>(
      "PATCH",
      `/listings/${encodeURIComponent(id)}`,
      body,
    );
  }

  recordView(id: string) {
    return this.request<{ counted: boolean; view_count?: number }>(
      "POST",
      `/listings/${encodeURIComponent(id)}/view`,
      {},
    );
  }

  markSold(id: string, buyer: string) {
    return this.request<ListingPayload>(
      "POST",
      `/listings/${encodeURIComponent(id)}/sold`,
      { buyer },
    );
  }

  profile(username: string) {
    return this.request<ProfileResponse>(
      "GET",
      `/directory/profile/${encodeURIComponent(username)}`,
    );
  }

  sendMessage(body: { listing_id?: string; thread_id?: string; body: string }) {
    return this.request<{ message_id: string; thread_id: string }>(
      "POST",
      "/messages",
      body,
    );
  }

  folder(name: "inbox" | "sent" | "deleted") {
    return this.request<{ folder: string; threads: ThreadView[] }>(
      "GET",
      `/messages/${name}`,
    );
  }

  thread(folder: "inbox" | "sent" | "deleted", threadId: string) {
    return this.request<ThreadView>(
      "GET",
      `/messages/${folder}?thread=${encodeURIComponent(threadId)}`,
    );
  }

  deleteMessage(id: string) {
    return this.request<{ ok: boolean }>(
      "DELETE",
      `/messages/${encodeURIComponent(id)}`,
    );
  }

  unreadCount() {
    return this.request<{ unread: number }>("GET", "/messages/unread-count");
  }

  schemas() {
    return this.request<{ schemas: SchemaPayload[] }>("GET", "/schemas");
  }

  schema(category: string) {
    return this.request<SchemaPayload>(
      "GET",
      `/schemas/${encodeURIComponent(category)}`,
    );
  }

  requestField(category: string, label: string, dataType: string) {
    return this.request<{ request_id: number; status: string }>(
      "POST",
      "/schema-requests",
      { category, label, data_type: dataType },
    );
  }

  health() {
    return this.request<{ status: string }>("GET", "/health");
  }
}
