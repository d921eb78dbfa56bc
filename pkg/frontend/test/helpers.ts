import type { ChartSeries, ForecastResponse, PricePoint } from "../src/types.js";

export const WEEK_MS = 7 * 24 * 3600 * 1000;

export function weekly(startIso: string, n: number): string[] {
  const start = Date.parse(startIso);
  return Array.from({ length: n }, (_, i) =>
    new Date(start + i * WEEK_MS).toISOString().slice(0, 10));
}

export function makeSeries(historyN: number, forecastN: number): ChartSeries {
  const dates = weekly("2019-01-07", historyN + forecastN);
  const history: PricePoint[] = dates.slice(0, historyN).map((date, i) => ({
    date,
    price: 4 + Math.sin(i / 5) * 0.5,
    forecast: false,
  }));
  const forecast: PricePoint[] = dates.slice(historyN).map((date, i) => ({
    date,
    price: 4 + Math.sin((historyN + i) / 5) * 0.5,
    forecast: true,
  }));
  return { commodity: "chicken", mode: "univariate", horizon: forecastN, history, forecast };
}

export function forecastResponse(historyN: number, horizon: number): ForecastResponse {
  const series = makeSeries(historyN, horizon);
  return {
    commodity: "chicken",
    mode: "univariate",
    horizon_weeks: horizon,
    model_family: "arima",
    generated_at: new Date().toISOString(),
    history: series.history,
    forecast: series.forecast,
  };
}

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export class FakeStorage implements Storage {
  private data = new Map<string, string>();
  get length(): number { return this.data.size; }
  clear(): void { this.data.clear(); }
  getItem(key: string): string | null { return this.data.get(key) ?? null; }
  key(index: number): string | null { return [...this.data.keys()][index] ?? null; }
  removeItem(key: string): void { this.data.delete(key); }
  setItem(key: string, value: string): void { this.data.set(key, value); }
}
