// SVG line chart: past prices and forecast drawn as two visually distinct
// segments in one graph, hover tooltip with the date and price under the
// cursor, and an adjustable x-axis window that never triggers a refetch.

import type { ChartSeries, PricePoint, ViewRange } from "./types.js";

export const HISTORY_COLOR = "#2563eb";
export const FORECAST_COLOR = "#f59e0b";

const WEEK_MS = 7 * 24 * 3600 * 1000;

export interface ChartPoint {
  x: number;
  y: number;
  date: string;
  price: number;
  forecast: boolean;
}

export interface ChartGeometry {
  width: number;
  height: number;
  points: ChartPoint[];
  historyPath: string;
  forecastPath: string;
  xTicks: { x: number; label: string }[];
  yTicks: { y: number; label: string }[];
}

/** The forecast segment must begin exactly one week after history ends. */
export function assertContinuity(series: ChartSeries): void {
  if (!series.history.length || !series.forecast.length) return;
  const last = Date.parse(series.history[series.history.length - 1].date);
  const first = Date.parse(series.forecast[0].date);
  if (first - last !== WEEK_MS) {
    throw new Error(
      `forecast must start one week after history (${series.history.at(-1)?.date} -> ${series.forecast[0].date})`,
    );
  }
}

function visible(points: PricePoint[], range: ViewRange): PricePoint[] {
  return points.filter((p) => {
    if (p.price === null) return false;
    if (range.from && p.date < range.from) return false;
    if (range.to && p.date > range.to) return false;
    return true;
  });
}

export function computeGeometry(
  series: ChartSeries,
  range: ViewRange = {},
  width = 800,
  height = 320,
  margin = 36,
): ChartGeometry {
  const history = visible(series.history, range);
  const forecast = visible(series.forecast, range);
  const all = [...history, ...forecast];
  if (all.length === 0) {
    return { width, height, points: [], historyPath: "", forecastPath: "",
             xTicks: [], yTicks: [] };
  }
  const times = all.map((p) => Date.parse(p.date));
  const prices = all.map((p) => p.price as number);
  const tMin = Math.min(...times);
  const tMax = Math.max(...times);
  const pMin = Math.min(...prices);
  const pMax = Math.max(...prices);
  const tSpan = Math.max(tMax - tMin, 1);
  const pSpan = Math.max(pMax - pMin, 1e-9);

  const sx = (t: number) => margin + ((t - tMin) / tSpan) * (width - 2 * margin);
  const sy = (p: number) => height - margin - ((p - pMin) / pSpan) * (height - 2 * margin);

  const toPoint = (p: PricePoint): ChartPoint => ({
    x: sx(Date.parse(p.date)),
    y: sy(p.price as number),
    date: p.date,
    price: p.price as number,
    forecast: p.forecast,
  });
  const historyPoints = history.map(toPoint);
  const forecastPoints = forecast.map(toPoint);

  const path = (pts: ChartPoint[]) =>
    pts.map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(1)},${p.y.toFixed(1)}`).join(" ");
  // join the segments visually so the line is continuous across the split
  const joined = historyPoints.length && forecastPoints.length
    ? [historyPoints[historyPoints.length - 1], ...forecastPoints]
    : forecastPoints;

  const xTicks = [] as { x: number; label: string }[];
  const tickCount = Math.min(6, all.length);
  for (let i = 0; i < tickCount; i++) {
    const t = tMin + (tSpan * i) / Math.max(tickCount - 1, 1);
    xTicks.push({ x: sx(t), label: new Date(t).toISOString().slice(0, 10) });
  }
  const yTicks = [] as { y: number; label: string }[];
  for (let i = 0; i < 4; i++) {
    const p = pMin + (pSpan * i) / 3;
    yTicks.push({ y: sy(p), label: `RM ${p.toFixed(2)}` });
  }
  return {
    width,
    height,
    points: [...historyPoints, ...forecastPoints],
    historyPath: path(historyPoints),
    forecastPath: path(joined),
    xTicks,
    yTicks,
  };
}

/** Closest rendered point to an x pixel offset; how the tooltip finds its prey. */
export function nearestPoint(geometry: ChartGeometry, xPixel: number): ChartPoint | null {
  let best: ChartPoint | null = null;
  let bestDist = Infinity;
  for (const point of geometry.points) {
    const d = Math.abs(point.x - xPixel);
    if (d < bestDist) {
      bestDist = d;
      best = point;
    }
  }
  return best;
}

export function tooltipText(point: ChartPoint): string {
  const kind = point.forecast ? "forecast" : "price";
  return `${point.date} · RM ${point.price.toFixed(2)} (${kind})`;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderChart(
  container: HTMLElement,
  series: ChartSeries,
  range: ViewRange = {},
): SVGSVGElement {
  assertContinuity(series);
  const geometry = computeGeometry(series, range);
  container.innerHTML = "";

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${geometry.width} ${geometry.height}`);
  svg.setAttribute("class", "chart");
  svg.setAttribute("role", "img");

  for (const tick of geometry.yTicks) {
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", "4");
    label.setAttribute("y", String(tick.y));
    label.setAttribute("class", "chart-tick");
    label.textContent = tick.label;
    svg.appendChild(label);
  }
  for (const tick of geometry.xTicks) {
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(tick.x));
    label.setAttribute("y", String(geometry.height - 6));
    label.setAttribute("class", "chart-tick");
    label.textContent = tick.label;
    svg.appendChild(label);
  }

  const historyPath = document.createElementNS(SVG_NS, "path");
  historyPath.setAttribute("d", geometry.historyPath);
  historyPath.setAttribute("stroke", HISTORY_COLOR);
  historyPath.setAttribute("fill", "none");
  historyPath.setAttribute("stroke-width", "2");
  historyPath.setAttribute("data-segment", "history");
  svg.appendChild(historyPath);

  const forecastPath = document.createElementNS(SVG_NS, "path");
  forecastPath.setAttribute("d", geometry.forecastPath);
  forecastPath.setAttribute("stroke", FORECAST_COLOR);
  forecastPath.setAttribute("fill", "none");
  forecastPath.setAttribute("stroke-width", "2");
  forecastPath.setAttribute("stroke-dasharray", "6 3");
  forecastPath.setAttribute("data-segment", "forecast");
  svg.appendChild(forecastPath);

  for (const point of geometry.points) {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(point.x));
    dot.setAttribute("cy", String(point.y));
    dot.setAttribute("r", "2.5");
    dot.setAttribute("fill", point.forecast ? FORECAST_COLOR : HISTORY_COLOR);
    dot.setAttribute("data-forecast", String(point.forecast));
    dot.setAttribute("data-date", point.date);
    svg.appendChild(dot);
  }

  const tooltip = document.createElement("div");
  tooltip.className = "chart-tooltip";
  tooltip.style.display = "none";
  container.appendChild(svg);
  container.appendChild(tooltip);

  svg.addEventListener("mousemove", (event: MouseEvent) => {
    const rect = svg.getBoundingClientRect();
    const scale = rect.width > 0 ? geometry.width / rect.width : 1;
    const point = nearestPoint(geometry, (event.clientX - rect.left) * scale);
    if (!point) return;
    tooltip.style.display = "block";
    tooltip.style.left = `${point.x / scale}px`;
    tooltip.style.top = `${Math.max(point.y / scale - 28, 0)}px`;
    tooltip.textContent = tooltipText(point);
  });
  svg.addEventListener("mouseleave", () => {
    tooltip.style.display = "none";
  });
  return svg;
}
