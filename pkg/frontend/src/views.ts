// The four result renderings. Every renderer consumes exactly the redacted
// payload the API returned: absent fields simply do not render, so the UI can
// never show more than the server decided this viewer may see.

import { ListingPayload } from "./api.js";
import { el, fmtDate } from "./util.js";

export type ViewMode = "list" | "thumbnails" | "map" | "tabular";
export const VIEW_MODES: ViewMode[] = ["list", "thumbnails", "map", "tabular"];

const VIEW_MODE_KEY = "netboard.view";

export function savedViewMode(storage: Storage): ViewMode {
  const raw = storage.getItem(VIEW_MODE_KEY);
  return (VIEW_MODES as string[]).includes(raw ?? "") ? (raw as ViewMode) : "list";
}

export function saveViewMode(storage: Storage, mode: ViewMode): void {
  storage.setItem(VIEW_MODE_KEY, mode);
}

function pictureBox(listing: ListingPayload): HTMLElement {
  // listings carry image URLs in a url-typed value when they have one
  const src = Object.values(listing.values).find((v) => /^https?:\/\//.test(v));
  if (src) {
    const img = el("img", { class: "thumb", src, alt: listing.title });
    return img;
  }
  return el("div", { class: "thumb placeholder" }, [listing.category.slice(0, 2)]);
}

/** List view: icon picture, title, owner, description, network, category, date. */
export function renderListRow(
  listing: ListingPayload,
  onSelect: (listing: ListingPayload) => void,
): HTMLElement {
  const lines: (Node | string)[] = [
    el("div", { class: "row-title" }, [listing.title]),
  ];
  const byline: string[] = [];
  if (listing.owner_username) byline.push(listing.owner_username);
  if (listing.owner_network_id) byline.push(listing.owner_network_id);
  byline.push(listing.category + (listing.subcategory ? ` / ${listing.subcategory}` : ""));
  byline.push(fmtDate(listing.created_at));
  lines.push(el("div", { class: "row-byline" }, [byline.join(" · ")]));
  if (listing.description) {
    lines.push(el("div", { class: "row-description" }, [listing.description]));
  }
  const price = listing.values["Price"] ?? listing.values["Rent"];
  if (price) lines.push(el("div", { class: "row-price" }, [price]));
  const row = el("div", { class: "result-row", "data-listing": listing.listing_id }, [
    pictureBox(listing),
    el("div", { class: "row-body" }, lines),
  ]);
  row.addEventListener("click", () => onSelect(listing));
  return row;
}

/** Thumbnails view: picture and title, nothing else. */
export function renderThumbTile(
  listing: ListingPayload,
  onSelect: (listing: ListingPayload) => void,
): HTMLElement {
  const tile = el("div", { class: "result-tile", "data-listing": listing.listing_id }, [
    pictureBox(listing),
    el("div", { class: "tile-title" }, [listing.title]),
  ]);
  tile.addEventListener("click", () => onSelect(listing));
  return tile;
}

export interface TabularColumn {
  key: string;
  header: string;
  value: (listing: ListingPayload) => string;
  numeric?: boolean;
}

export function tabularColumns(listings: ListingPayload[]): TabularColumn[] {
  const columns: TabularColumn[] = [
    { key: "title", header: "Title", value: (l) => l.title },
    { key: "category", header: "Category", value: (l) => l.category },
    { key: "created_at", header: "Posted", value: (l) => fmtDate(l.created_at) },
  ];
  const valueLabels = new Set<string>();
  for (const listing of listings) {
    for (const label of Object.keys(listing.values)) valueLabels.add(label);
  }
  for (const label of [...valueLabels].sort()) {
    columns.push({
      key: `value:${label}`,
      header: label,
      value: (l) => l.values[label] ?? "",
      numeric: listings.some((l) => numericPart(l.values[label] ?? "") !== null),
    });
  }
  return columns;
}

export function numericPart(value: string): number | null {
  const match = value.match(/-?\d+(\.\d+)?/);
  return match ? Number(match[0]) : null;
}

export function sortListings(
  listings: ListingPayload[],
  column: TabularColumn,
  ascending: boolean,
): ListingPayload[] {
  const sorted = [...listings].sort((a, b) => {
    if (column.numeric) {
      const na = numericPart(column.value(a)) ?? Number.POSITIVE_INFINITY;
      const nb = numericPart(column.value(b)) ?? Number.POSITIVE_INFINITY;
      if (na !== nb) return na - nb;
    }
    return column.value(a).localeCompare(column.value(b));
  });
  return ascending ? sorted : sorted.reverse();
}

/** Tabular view: sortable columns over the currently loaded rows. */
export function renderTable(
  listings: ListingPayload[],
  onSelect: (listing: ListingPayload) => void,
): HTMLElement {
  const columns = tabularColumns(listings);
  let current = listings;
  let sortKey = "";
  let ascending = true;
  const table = el("table", { class: "result-table" });

  const paint = () => {
    table.textContent = "";
    const headerRow = el("tr");
    for (const column of columns) {
      const th = el("th", {}, [
        column.header + (sortKey === column.key ? (ascending ? " ↑" : " ↓") : ""),
      ]);
      th.addEventListener("click", () => {
        ascending = sortKey === column.key ? !ascending : true;
        sortKey = column.key;
        current = sortListings(current, column, ascending);
        paint();
      });
      headerRow.append(th);
    }
    table.append(headerRow);
    for (const listing of current) {
      const tr = el("tr", { "data-listing": listing.listing_id });
      for (const column of columns) {
        tr.append(el("td", {}, [column.value(listing)]));
      }
      tr.addEventListener("click", () => onSelect(listing));
      table.append(tr);
    }
  };
  paint();
  return table;
}

// Map rendering sits behind a provider so a real tile service can be plugged
// in; the bundled provider draws a plain coordinate grid with no network use.
export interface MapMarker {
  listing: ListingPayload;
  lat: number;
  lon: number;
}

export interface TileProvider {
  name: string;
  mount(container: HTMLElement, markers: MapMarker[], onSelect: (l: ListingPayload) => void): void;
}

export class OfflineGridProvider implements TileProvider {
  name = "offline-grid";

  mount(
    container: HTMLElement,
    markers: MapMarker[],
    onSelect: (l: ListingPayload) => void,
  ): void {
    const canvas = el("div", { class: "map-grid" });
    if (markers.length === 0) {
      canvas.append(el("div", { class: "map-empty" }, ["no located listings"]));
      container.append(canvas);
      return;
    }
    const lats = markers.map((m) => m.lat);
    const lons = markers.map((m) => m.lon);
    const minLat = Math.min(...lats);
    const maxLat = Math.max(...lats);
    const minLon = Math.min(...lons);
    const maxLon = Math.max(...lons);
    const span = (lo: number, hi: number, v: number) =>
      hi - lo < 1e-9 ? 50 : ((v - lo) / (hi - lo)) * 90 + 5;
    for (const marker of markers) {
      const pin = el("button", { class: "map-pin", title: marker.listing.title }, ["●"]);
      pin.style.left = `${span(minLon, maxLon, marker.lon)}%`;
      pin.style.bottom = `${span(minLat, maxLat, marker.lat)}%`;
      pin.addEventListener("click", () => onSelect(marker.listing));
      canvas.append(pin);
    }
    container.append(canvas);
  }
}

/**
 * Map view: plots located listings via the provider; without a provider (or
 * if it fails) it degrades to the list view with a notice.
 */
export function renderMap(
  listings: ListingPayload[],
  provider: TileProvider | null,
  onSelect: (listing: ListingPayload) => void,
): HTMLElement {
  const container = el("div", { class: "map-view" });
  const markers: MapMarker[] = listings
    .filter((l) => Array.isArray(l.location))
    .map((l) => ({ listing: l, lat: l.location![0], lon: l.location![1] }));
  if (provider) {
    try {
      provider.mount(container, markers, onSelect);
      return container;
    } catch {
      // fall through to the degraded list below
    }
  }
  container.append(
    el("div", { class: "map-fallback-notice" }, [
      "map view unavailable, showing list instead",
    ]),
  );
  for (const listing of listings) {
    container.append(renderListRow(listing, onSelect));
  }
  return container;
}
