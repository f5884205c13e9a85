// Wire types for the classification service endpoints.

export interface RegionEntry {
  region_id: string;
  display_name: string;
  species_count: number;
}

export interface SegmentPrediction {
  offset_s: number;
  species_name: string;
  score: number;
}

export interface SpeciesInfo {
  species_name: string;
  page_title: string;
  summary: string;
  habitat: string | null;
  characteristics: string | null;
  infobox: { key: string; value: string }[];
  source_url: string;
  fetched_at: number;
}

export interface ClassifyResponse {
  segments_evaluated: number;
  top_prediction: { species_name: string; aggregate_score: number };
  per_segment: SegmentPrediction[];
  region_applied: string | null;
  unconstrained_top1: string | null;
  species_info: SpeciesInfo | null;
  warning: string | null;
}
