// Typed client for the recommendation service.  The raw response body is
// kept alongside the parsed value so callers can prove what they display is
// exactly what the service sent.

export interface RecommendationItem {
  activity: string;
  q: number;
  rank: number;
}

export interface RecommendResponse {
  recommendations: RecommendationItem[];
  fallback_used: boolean;
  policy_version: string;
}

export interface RawRecommendResponse {
  raw: string;
  parsed: RecommendResponse;
}

export class ServiceError extends Error {
  constructor(message: string, public readonly status?: number) {
    super(message);
    this.name = "ServiceError";
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  async fetchVocabulary(): Promise<string[]> {
    const response = await fetch(`${this.baseUrl}/vocabulary`);
    if (!response.ok) {
      throw new ServiceError(`vocabulary request failed (${response.status})`, response.status);
    }
    const labels: unknown = await response.json();
    if (!Array.isArray(labels) || !labels.every((l) => typeof l === "string")) {
      throw new ServiceError("vocabulary response is not a list of strings");
    }
    return labels;
  }

  async recommendRemaining(remaining: string[], k: number): Promise<RawRecommendResponse> {
    const response = await fetch(`${this.baseUrl}/recommend`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ remaining, k }),
    });
    const raw = await response.text();
    if (!response.ok) {
      throw new ServiceError(`recommend request failed (${response.status}): ${raw}`, response.status);
    }
    return { raw, parsed: JSON.parse(raw) as RecommendResponse };
  }

  async health(): Promise<{ status: string; snapshot_hash: string }> {
    const response = await fetch(`${this.baseUrl}/health`);
    if (!response.ok) {
      throw new ServiceError(`health check failed (${response.status})`, response.status);
    }
    return (await response.json()) as { status: string; snapshot_hash: string };
  }
}
