// Typed client for the documented service endpoints. The fetch
// implementation is injectable so tests can stub or redirect it.

import type { ClassifyResponse, RegionEntry, SpeciesInfo } from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string };
    return body.detail ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response;
  }

  async getRegions(): Promise<RegionEntry[]> {
    const response = await this.request("/api/regions");
    return (await response.json()) as RegionEntry[];
  }

  async classify(
    audio: Blob,
    filename: string,
    region: string | null,
    includeInfo = true,
  ): Promise<ClassifyResponse> {
    const form = new FormData();
    form.append("audio", audio, filename);
    if (region !== null) {
      form.append("region", region);
    }
    const query = includeInfo ? "" : "?include_info=false";
    const response = await this.request(`/api/classify${query}`, {
      method: "POST",
      body: form,
    });
    return (await response.json()) as ClassifyResponse;
  }

  async getSpeciesInfo(name: string): Promise<SpeciesInfo> {
    const response = await this.request(`/api/species/${encodeURIComponent(name)}/info`);
    return (await response.json()) as SpeciesInfo;
  }
}

/** Human wording for the error states the form can produce. */
export function describeApiError(error: unknown): { inline: boolean; message: string } {
  if (error instanceof ApiError) {
    if (error.status === 422) {
      return { inline: true, message: "Recording too short: at least 2 seconds of audio are needed." };
    }
    if (error.status === 400) {
      return { inline: true, message: `Request rejected: ${error.detail}` };
    }
    if (error.status === 413) {
      return { inline: true, message: "File too large for the server's upload limit." };
    }
    return { inline: false, message: `Server error (${error.status}): ${error.detail}` };
  }
  return { inline: false, message: "Could not reach the classification service." };
}
