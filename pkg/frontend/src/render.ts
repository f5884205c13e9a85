// DOM rendering. All scraped or user-derived strings go through
// textContent; nothing is ever interpreted as HTML.

import type { ClassifyResponse, RegionEntry, SpeciesInfo } from "./types";

export const ANYWHERE = "__anywhere__";

function el(
  doc: Document,
  tag: string,
  className: string | null,
  text: string | null = null,
): HTMLElement {
  const node = doc.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== null) {
    node.textContent = text;
  }
  return node;
}

export function renderRegionOptions(select: HTMLSelectElement, regions: RegionEntry[]): void {
  const doc = select.ownerDocument;
  select.textContent = "";
  const anywhere = doc.createElement("option");
  anywhere.value = ANYWHERE;
  anywhere.textContent = "Anywhere";
  select.appendChild(anywhere);
  for (const region of regions) {
    const option = doc.createElement("option");
    option.value = region.region_id;
    option.textContent = `${region.display_name} (${region.species_count} species)`;
    select.appendChild(option);
  }
}

export function selectedRegionValue(select: HTMLSelectElement): string | null {
  return select.value === ANYWHERE ? null : select.value;
}

function renderSpeciesInfo(doc: Document, info: SpeciesInfo): HTMLElement {
  const panel = el(doc, "section", "species-info");
  panel.appendChild(el(doc, "h3", null, info.page_title));
  panel.appendChild(el(doc, "p", "summary", info.summary));
  if (info.habitat) {
    panel.appendChild(el(doc, "h4", null, "Habitat"));
    panel.appendChild(el(doc, "p", "habitat", info.habitat));
  }
  if (info.characteristics) {
    panel.appendChild(el(doc, "h4", null, "Characteristics"));
    panel.appendChild(el(doc, "p", "characteristics", info.characteristics));
  }
  if (info.infobox.length > 0) {
    const table = el(doc, "table", "infobox");
    for (const row of info.infobox) {
      const tr = doc.createElement("tr");
      tr.appendChild(el(doc, "th", null, row.key));
      tr.appendChild(el(doc, "td", null, row.value));
      table.appendChild(tr);
    }
    panel.appendChild(table);
  }
  const link = doc.createElement("a");
  link.href = info.source_url;
  link.textContent = "Source: Wikipedia";
  link.rel = "noopener";
  link.target = "_blank";
  panel.appendChild(link);
  return panel;
}

function renderTimeline(doc: Document, response: ClassifyResponse): HTMLElement {
  const timeline = el(doc, "ol", "timeline");
  for (const segment of response.per_segment) {
    const item = el(
      doc,
      "li",
      "segment",
      `${segment.offset_s.toFixed(1)}s ${segment.species_name} (${segment.score.toFixed(2)})`,
    );
    timeline.appendChild(item);
  }
  return timeline;
}

export interface ResultHandlers {
  onRetryWithoutRegion?: () => void;
}

export function renderResult(
  container: HTMLElement,
  response: ClassifyResponse,
  handlers: ResultHandlers = {},
): void {
  const doc = container.ownerDocument;
  container.textContent = "";

  const top = el(doc, "div", "top-prediction");
  top.appendChild(el(doc, "span", "label", "Predicted species:"));
  top.appendChild(el(doc, "strong", "species-name", response.top_prediction.species_name));
  top.appendChild(
    el(doc, "span", "score", `score ${response.top_prediction.aggregate_score.toFixed(2)}`),
  );
  container.appendChild(top);

  container.appendChild(
    el(
      doc,
      "p",
      "segment-count",
      `${response.segments_evaluated} two-second segments evaluated` +
        (response.region_applied ? ` within region ${response.region_applied}` : ""),
    ),
  );
  container.appendChild(renderTimeline(doc, response));

  if (response.unconstrained_top1) {
    const notice = el(doc, "div", "region-mismatch");
    notice.appendChild(
      el(
        doc,
        "p",
        null,
        `Without the region restriction the best match would be ${response.unconstrained_top1}.`,
      ),
    );
    const retry = doc.createElement("button");
    retry.type = "button";
    retry.className = "retry-without-region";
    retry.textContent = "Re-run without region";
    if (handlers.onRetryWithoutRegion) {
      retry.addEventListener("click", handlers.onRetryWithoutRegion);
    }
    notice.appendChild(retry);
    container.appendChild(notice);
  }

  if (response.warning) {
    container.appendChild(el(doc, "p", "warning", response.warning));
  }
  if (response.species_info) {
    container.appendChild(renderSpeciesInfo(doc, response.species_info));
  }
}

export function renderBanner(banner: HTMLElement, message: string | null): void {
  banner.textContent = message ?? "";
  banner.toggleAttribute("hidden", message === null);
}

export function renderInlineError(field: HTMLElement, message: string | null): void {
  field.textContent = message ?? "";
  field.toggleAttribute("hidden", message === null);
}
