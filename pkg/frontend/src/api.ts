// Thin typed client over the service's /api/v1 JSON contract.

import type { ForecastResponse, TrainingStarted } from "./types.js";
import { Session } from "./session.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private session: Session,
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private headers(json = true): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    const token = this.session.token;
    if (token) headers["Authorization"] = `Bearer ${token}`;
    return headers;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1${path}`, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok && response.status !== 202) {
      throw new ApiError(response.status, payload.code ?? "error",
        payload.message ?? response.statusText);
    }
    if (response.status === 202) {
      return { ...payload, code: "model_not_ready" } as T;
    }
    return payload as T;
  }

  register(email: string, password: string, name: string): Promise<{ id: number }> {
    return this.request("POST", "/auth/register", { email, password, name });
  }

  async login(email: string, password: string): Promise<void> {
    const out = await this.request<{ token: string; expires_at: number }>(
      "POST", "/auth/login", { email, password });
    this.session.set(out.token, out.expires_at, email);
  }

  commodities(): Promise<{ commodities: string[] }> {
    return this.request("GET", "/commodities");
  }

  forecast(commodity: string, mode: string, horizonWeeks: number,
           historyWeeks = 104): Promise<ForecastResponse | TrainingStarted> {
    return this.request("POST", "/forecast", {
      commodity,
      mode,
      horizon_weeks: horizonWeeks,
      history_weeks: historyWeeks,
    });
  }

  profile(): Promise<{ email: string; name: string; created_at: string }> {
    return this.request("GET", "/profile");
  }

  updateProfile(fields: { name?: string; email?: string }) {
    return this.request<{ email: string; name: string }>("PATCH", "/profile", fields);
  }

  enquiry(subject: string, body: string): Promise<{ id: number }> {
    return this.request("POST", "/enquiries", { subject, body });
  }

  /** CSV export; the bearer header rides along, the token never hits the URL. */
  async downloadCsv(commodity: string): Promise<Blob> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/v1/download/${encodeURIComponent(commodity)}.csv`,
      { method: "GET", headers: this.headers(false) },
    );
    if (!response.ok) {
      const payload = await response.json().catch(() => ({}));
      throw new ApiError(response.status, payload.code ?? "error",
        payload.message ?? response.statusText);
    }
    return response.blob();
  }
}
