// Forecast-view state machine: selector changes refetch (latest request
// wins, stale responses are dropped), view-range changes re-render from the
// data already in hand, and a 202 from the service turns into a polling
// loop with a visible progress state.

import { ApiClient, ApiError } from "./api.js";
import type { ChartSeries, ForecastResponse, ViewRange } from "./types.js";

export type DashboardStatus = "idle" | "loading" | "training" | "ready" | "error";

export interface DashboardState {
  commodity: string | null;
  mode: "univariate" | "multivariate";
  horizon: number;
  range: ViewRange;
  status: DashboardStatus;
  series: ChartSeries | null;
  jobId: string | null;
  error: string | null;
}

export class DashboardController {
  state: DashboardState = {
    commodity: null,
    mode: "univariate",
    horizon: 13,
    range: {},
    status: "idle",
    series: null,
    jobId: null,
    error: null,
  };

  private sequence = 0;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;

  /** Render hook; the dashboard page re-binds it when it mounts. */
  onChange: (state: DashboardState) => void;

  constructor(
    private api: ApiClient,
    onChange: (state: DashboardState) => void = () => {},
    private pollDelayMs = 1500,
  ) {
    this.onChange = onChange;
  }

  setCommodity(commodity: string): Promise<void> {
    this.state.commodity = commodity;
    return this.load();
  }

  setMode(mode: "univariate" | "multivariate"): Promise<void> {
    this.state.mode = mode;
    return this.load();
  }

  setHorizon(horizon: number): Promise<void> {
    this.state.horizon = horizon;
    return this.load();
  }

  /** X-axis rescale: no network, just a re-render with the new window. */
  setViewRange(range: ViewRange): void {
    this.state.range = range;
    this.onChange(this.state);
  }

  dispose(): void {
    if (this.pollTimer) clearTimeout(this.pollTimer);
    this.sequence += 1; // orphan any in-flight response
  }

  async load(): Promise<void> {
    if (!this.state.commodity) return;
    if (this.pollTimer) {
      clearTimeout(this.pollTimer);
      this.pollTimer = null;
    }
    const ticket = ++this.sequence;
    this.state.status = "loading";
    this.state.error = null;
    this.onChange(this.state);
    try {
      const out = await this.api.forecast(
        this.state.commodity, this.state.mode, this.state.horizon);
      if (ticket !== this.sequence) return; // a newer selector change won
      if ("code" in out && out.code === "model_not_ready") {
        this.state.status = "training";
        this.state.jobId = out.job_id;
        this.onChange(this.state);
        this.pollTimer = setTimeout(() => void this.load(), this.pollDelayMs);
        return;
      }
      const response = out as ForecastResponse;
      this.state.series = {
        commodity: response.commodity,
        mode: response.mode,
        horizon: response.horizon_weeks,
        history: response.history,
        forecast: response.forecast,
      };
      this.state.status = "ready";
      this.state.jobId = null;
    } catch (error) {
      if (ticket !== this.sequence) return;
      this.state.status = "error";
      this.state.series = null;
      this.state.error = error instanceof ApiError
        ? `${error.code}: ${error.message}`
        : "network error; check your connection and retry";
    }
    this.onChange(this.state);
  }
}
