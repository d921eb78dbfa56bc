export interface PricePoint {
  date: string;
  price: number | null;
  forecast: boolean;
}

export interface ForecastResponse {
  commodity: string;
  mode: string;
  horizon_weeks: number;
  model_family: string;
  generated_at: string;
  history: PricePoint[];
  forecast: PricePoint[];
}

export interface TrainingStarted {
  code: "model_not_ready";
  job_id: string;
  message: string;
}

export interface ChartSeries {
  commodity: string;
  mode: string;
  horizon: number;
  history: PricePoint[];
  forecast: PricePoint[];
}

/** Inclusive ISO-date window used to rescale the x axis without refetching. */
export interface ViewRange {
  from?: string;
  to?: string;
}
