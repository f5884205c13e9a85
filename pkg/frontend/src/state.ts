// UI state with pure transitions. Invariants: submit is disabled unless a
// file is selected; at most one request is in flight; responses carry the
// token they were issued with and stale ones are dropped.

import type { ClassifyResponse, RegionEntry } from "./types";

export interface UiState {
  regions: RegionEntry[];
  selectedRegion: string | null; // null = "Anywhere"
  audioFile: { blob: Blob; name: string } | null;
  inFlight: boolean;
  requestToken: number;
  lastResponse: ClassifyResponse | null;
  errorBanner: string | null;
  inlineError: string | null;
}

export function initialState(): UiState {
  return {
    regions: [],
    selectedRegion: null,
    audioFile: null,
    inFlight: false,
    requestToken: 0,
    lastResponse: null,
    errorBanner: null,
    inlineError: null,
  };
}

export function withRegions(state: UiState, regions: RegionEntry[]): UiState {
  return { ...state, regions, errorBanner: null };
}

export function selectRegion(state: UiState, regionId: string | null): UiState {
  return { ...state, selectedRegion: regionId };
}

export function selectFile(state: UiState, blob: Blob | null, name = ""): UiState {
  return {
    ...state,
    audioFile: blob === null ? null : { blob, name },
    inlineError: null,
  };
}

export function canSubmit(state: UiState): boolean {
  return state.audioFile !== null && !state.inFlight;
}

/** Start a submission; returns the token the response must echo. */
export function beginSubmit(state: UiState): { state: UiState; token: number } {
  if (!canSubmit(state)) {
    throw new Error("submit not allowed: no file selected or request in flight");
  }
  const token = state.requestToken + 1;
  return {
    state: { ...state, inFlight: true, requestToken: token, inlineError: null, errorBanner: null },
    token,
  };
}

export function completeSubmit(
  state: UiState,
  token: number,
  response: ClassifyResponse,
): UiState {
  if (token !== state.requestToken) {
    return state; // superseded by a newer submission
  }
  return { ...state, inFlight: false, lastResponse: response };
}

export function failSubmit(
  state: UiState,
  token: number,
  message: string,
  inline: boolean,
): UiState {
  if (token !== state.requestToken) {
    return state;
  }
  return {
    ...state,
    inFlight: false,
    inlineError: inline ? message : null,
    errorBanner: inline ? null : message,
  };
}

export function regionsUnavailable(state: UiState, message: string): UiState {
  return { ...state, errorBanner: message };
}
