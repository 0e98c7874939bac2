// Fake fetch plumbing and payload fixtures shaped exactly like the service's
// responses (anonymous fixtures mirror anonymous redaction: no description,
// no owner fields, price-like values only).

import { ListingPayload } from "../src/api.js";

export function anonymousListing(i: number): ListingPayload {
  return {
    listing_id: `L${String(i).padStart(6, "0")}`,
    redaction_level: "anonymous",
    title: `Campus bike ${i}`,
    category: "bikes",
    created_at: `2026-03-01T10:${String(i % 60).padStart(2, "0")}:00+00:00`,
    values: { Price: `USD ${100 + i}.00` },
  };
}

export function memberListing(i: number): ListingPayload {
  return {
    ...anonymousListing(i),
    redaction_level: "member",
    description: `well oiled chain number ${i}`,
    owner_username: "amy_lists",
    owner_network_id: "jhu",
    subcategory: "mountain",
    tags: ["bike"],
    location: [39.29 + i * 0.01, -76.61],
    visibility: "public",
    updated_at: "2026-03-01T10:00:00+00:00",
  };
}

export interface RecordedRequest {
  method: string;
  path: string;
  body?: unknown;
}

export type RouteHandler = (req: RecordedRequest) => { status?: number; body: unknown };

/** A fetch stand-in with programmable routes and a request log. */
export function fakeFetch(handlers: Record<string, RouteHandler>) {
  const log: RecordedRequest[] = [];
  const fetcher = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const url = new URL(input, "http://fake");
    const recorded: RecordedRequest = {
      method,
      path: url.pathname + url.search,
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    };
    log.push(recorded);
    const key = `${method} ${url.pathname}`;
    const handler =
      handlers[key] ??
      Object.entries(handlers).find(([pattern]) => {
        const [m, p] = pattern.split(" ");
        if (m !== method) return false;
        const regex = new RegExp(
          "^" + p.replace(/\{[^}]+\}/g, "[^/]+") + "$",
        );
        return regex.test(url.pathname);
      })?.[1];
    if (!handler) {
      return new Response(
        JSON.stringify({ error_code: "not_found", message: `no route ${key}` }),
        { status: 404 },
      );
    }
    const result = handler(recorded);
    return new Response(JSON.stringify(result.body), {
      status: result.status ?? 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetcher, log };
}

export function pagedSearch(listings: ListingPayload[], pageSize = 20): RouteHandler {
  return (req) => {
    const url = new URL("http://fake" + req.path);
    const page = Number(url.searchParams.get("page") ?? "0");
    const size = Number(url.searchParams.get("page_size") ?? String(pageSize));
    const slice = listings.slice(page * size, (page + 1) * size);
    return {
      body: {
        total: listings.length,
        page,
        view: url.searchParams.get("view") ?? "list",
        results: slice.map((listing) => ({
          listing_id: listing.listing_id,
          score_total: 1,
          score_text: 1,
          score_location: 0,
          score_freshness: 0.5,
          listing,
        })),
      },
    };
  };
}

export const EMPTY_SCHEMAS: RouteHandler = () => ({
  body: {
    schemas: [
      {
        category: "bikes",
        version: 1,
        fields: [
          { label: "Title", input_type: "textbox", data_type: "text", visible_in_search_filter: true },
          { label: "Price", input_type: "textbox", data_type: "currency", visible_in_search_filter: true },
        ],
      },
    ],
  },
});

export const OK_VIEW: RouteHandler = () => ({ body: { counted: true } });
