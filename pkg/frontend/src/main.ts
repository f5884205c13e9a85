// Wiring: region dropdown, file picker, submit flow, result rendering.

import { ApiClient, describeApiError } from "./api";
import {
  beginSubmit,
  canSubmit,
  completeSubmit,
  failSubmit,
  initialState,
  regionsUnavailable,
  selectFile,
  selectRegion,
  UiState,
  withRegions,
} from "./state";
import {
  renderBanner,
  renderInlineError,
  renderRegionOptions,
  renderResult,
  selectedRegionValue,
} from "./render";

const api = new ApiClient();
let state: UiState = initialState();

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function sync(): void {
  byId<HTMLButtonElement>("submit").disabled = !canSubmit(state);
  renderBanner(byId("banner"), state.errorBanner);
  renderInlineError(byId("inline-error"), state.inlineError);
  byId("spinner").toggleAttribute("hidden", !state.inFlight);
}

async function loadRegions(): Promise<void> {
  try {
    state = withRegions(state, await api.getRegions());
    renderRegionOptions(byId<HTMLSelectElement>("region"), state.regions);
  } catch (error) {
    state = regionsUnavailable(state, "Could not load regions; you can still classify without one.");
  }
  sync();
}

async function submit(regionOverride?: string | null): Promise<void> {
  if (!canSubmit(state)) {
    return;
  }
  const region = regionOverride !== undefined ? regionOverride : state.selectedRegion;
  const file = state.audioFile;
  if (!file) {
    return;
  }
  const begun = beginSubmit(state);
  state = begun.state;
  sync();
  try {
    const response = await api.classify(file.blob, file.name, region);
    state = completeSubmit(state, begun.token, response);
    if (state.lastResponse === response) {
      renderResult(byId("result"), response, {
        onRetryWithoutRegion: () => {
          state = selectRegion(state, null);
          byId<HTMLSelectElement>("region").value = "__anywhere__";
          void submit(null);
        },
      });
    }
  } catch (error) {
    const described = describeApiError(error);
    state = failSubmit(state, begun.token, described.message, described.inline);
  }
  sync();
}

export function start(): void {
  const regionSelect = byId<HTMLSelectElement>("region");
  regionSelect.addEventListener("change", () => {
    state = selectRegion(state, selectedRegionValue(regionSelect));
  });

  const input = byId<HTMLInputElement>("audio-file");
  input.addEventListener("change", () => {
    const file = input.files && input.files[0];
    state = selectFile(state, file ?? null, file ? file.name : "");
    sync();
  });

  byId<HTMLButtonElement>("submit").addEventListener("click", () => void submit());
  void loadRegions();
  sync();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
