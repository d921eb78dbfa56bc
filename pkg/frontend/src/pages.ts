// Hash-routed pages. Every page except register/login requires an active
// session; an expired one bounces straight back to #/login.  Flat routes
// keep any feature at most two navigations from login.

import { ApiClient, ApiError } from "./api.js";
import { renderChart } from "./chart.js";
import { DashboardController, DashboardState } from "./dashboard.js";
import { Session } from "./session.js";

export const ROUTES = [
  "register", "login", "dashboard", "profile", "support",
  "weather", "about", "subscription",
] as const;
export type Route = (typeof ROUTES)[number];

export const PUBLIC_ROUTES: ReadonlySet<string> = new Set(["register", "login"]);

export function parseRoute(hash: string): Route {
  const name = hash.replace(/^#\/?/, "").split("?")[0] || "dashboard";
  return (ROUTES as readonly string[]).includes(name) ? (name as Route) : "dashboard";
}

export interface AppContext {
  api: ApiClient;
  session: Session;
  dashboard: DashboardController;
  navigate: (route: Route) => void;
}

function el(html: string): HTMLElement {
  const template = document.createElement("template");
  template.innerHTML = html.trim();
  return template.content.firstElementChild as HTMLElement;
}

function errorBox(message: string): string {
  return `<p class="error" role="alert">${message}</p>`;
}

export function renderLogin(ctx: AppContext): HTMLElement {
  const page = el(`
    <section class="card">
      <h1>Log in</h1>
      <form id="login-form">
        <label>Email <input name="email" type="email" required></label>
        <label>Password <input name="password" type="password" required></label>
        <button type="submit">Log in</button>
      </form>
      <p>No account? <a href="#/register">Register</a></p>
      <div id="login-error"></div>
    </section>`);
  page.querySelector("form")!.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(event.target as HTMLFormElement);
    try {
      await ctx.api.login(String(data.get("email")), String(data.get("password")));
      ctx.navigate("dashboard");
    } catch (error) {
      page.querySelector("#login-error")!.innerHTML = errorBox(
        error instanceof ApiError ? error.message : "network error; try again");
    }
  });
  return page;
}

export function renderRegister(ctx: AppContext): HTMLElement {
  const page = el(`
    <section class="card">
      <h1>Create an account</h1>
      <form id="register-form">
        <label>Name <input name="name"></label>
        <label>Email <input name="email" type="email" required></label>
        <label>Password <input name="password" type="password" required minlength="8"></label>
        <button type="submit">Register</button>
      </form>
      <p>Have an account? <a href="#/login">Log in</a></p>
      <div id="register-error"></div>
    </section>`);
  page.querySelector("form")!.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(event.target as HTMLFormElement);
    try {
      await ctx.api.register(String(data.get("email")), String(data.get("password")),
        String(data.get("name") ?? ""));
      await ctx.api.login(String(data.get("email")), String(data.get("password")));
      ctx.navigate("dashboard");
    } catch (error) {
      // a 409 reads "an account with this email exists"
      page.querySelector("#register-error")!.innerHTML = errorBox(
        error instanceof ApiError ? error.message : "network error; try again");
    }
  });
  return page;
}

const HORIZONS = [4, 13, 26, 52];

export function renderDashboard(ctx: AppContext): HTMLElement {
  const page = el(`
    <section>
      <h1>Price forecast</h1>
      <form class="selectors" id="selectors">
        <label>Commodity
          <select id="commodity-select"></select>
        </label>
        <label>Model type
          <select id="mode-select">
            <option value="univariate">univariate</option>
            <option value="multivariate">multivariate</option>
          </select>
        </label>
        <label>Forecast period
          <select id="horizon-select">
            ${HORIZONS.map((h) => `<option value="${h}">${h} weeks</option>`).join("")}
          </select>
        </label>
        <label>View range
          <select id="range-select">
            <option value="all">all history</option>
            <option value="104">last 2 years</option>
            <option value="52">last year</option>
          </select>
        </label>
        <button type="button" id="download-button">Download CSV</button>
      </form>
      <div id="chart-status" class="status"></div>
      <div id="chart-container" class="chart-box"></div>
      <div class="legend">
        <span class="legend-history">past prices</span>
        <span class="legend-forecast">forecast</span>
      </div>
    </section>`);

  const commoditySelect = page.querySelector<HTMLSelectElement>("#commodity-select")!;
  const modeSelect = page.querySelector<HTMLSelectElement>("#mode-select")!;
  const horizonSelect = page.querySelector<HTMLSelectElement>("#horizon-select")!;
  horizonSelect.value = String(ctx.dashboard.state.horizon);
  const rangeSelect = page.querySelector<HTMLSelectElement>("#range-select")!;
  const statusBox = page.querySelector<HTMLElement>("#chart-status")!;
  const chartBox = page.querySelector<HTMLElement>("#chart-container")!;

  const rerender = (state: DashboardState) => {
    statusBox.textContent = {
      idle: "",
      loading: "loading…",
      training: `model training (job ${state.jobId ?? "?"})… this view refreshes itself`,
      ready: state.series ? `model: ${state.series.mode} · served from cache` : "",
      error: state.error ?? "something went wrong",
    }[state.status];
    statusBox.classList.toggle("status--error", state.status === "error");
    if (state.status === "ready" && state.series) {
      renderChart(chartBox, state.series, state.range);
    } else if (state.status !== "training") {
      chartBox.innerHTML = "";
    }
  };
  ctx.dashboard.onChange = rerender;

  commoditySelect.addEventListener("change", () => {
    void ctx.dashboard.setCommodity(commoditySelect.value);
  });
  modeSelect.addEventListener("change", () => {
    void ctx.dashboard.setMode(modeSelect.value as "univariate" | "multivariate");
  });
  horizonSelect.addEventListener("change", () => {
    void ctx.dashboard.setHorizon(Number(horizonSelect.value));
  });
  rangeSelect.addEventListener("change", () => {
    const choice = rangeSelect.value;
    if (choice === "all") {
      ctx.dashboard.setViewRange({});
      return;
    }
    const weeks = Number(choice);
    const history = ctx.dashboard.state.series?.history ?? [];
    const from = history.at(-weeks)?.date ?? history[0]?.date;
    ctx.dashboard.setViewRange({ from });
  });
  page.querySelector("#download-button")!.addEventListener("click", async () => {
    const commodity = commoditySelect.value;
    if (!commodity) return;
    try {
      const blob = await ctx.api.downloadCsv(commodity);
      const url = URL.createObjectURL(blob);
      const link = document.createElement("a");
      link.href = url;
      link.download = `${commodity}.csv`;
      link.click();
      URL.revokeObjectURL(url);
    } catch (error) {
      statusBox.textContent = error instanceof ApiError
        ? `download failed: ${error.message}` : "download failed: network error";
      statusBox.classList.add("status--error");
    }
  });

  void (async () => {
    try {
      const { commodities } = await ctx.api.commodities();
      commoditySelect.innerHTML = commodities
        .map((name) => `<option value="${name}">${name}</option>`).join("");
      if (commodities.length) {
        commoditySelect.value = ctx.dashboard.state.commodity ?? commodities[0];
        await ctx.dashboard.setCommodity(commoditySelect.value);
      } else {
        statusBox.textContent = "no commodities ingested yet";
      }
    } catch {
      statusBox.textContent = "could not load the commodity list (network error)";
      statusBox.classList.add("status--error");
    }
  })();
  return page;
}

export function renderProfile(ctx: AppContext): HTMLElement {
  const page = el(`
    <section class="card">
      <h1>Your profile</h1>
      <form id="profile-form">
        <label>Name <input name="name"></label>
        <label>Email <input name="email" type="email"></label>
        <button type="submit">Save</button>
      </form>
      <div id="profile-status"></div>
    </section>`);
  const form = page.querySelector<HTMLFormElement>("#profile-form")!;
  const status = page.querySelector<HTMLElement>("#profile-status")!;
  void ctx.api.profile().then((profile) => {
    (form.elements.namedItem("name") as HTMLInputElement).value = profile.name;
    (form.elements.namedItem("email") as HTMLInputElement).value = profile.email;
  }).catch(() => {
    status.innerHTML = errorBox("could not load the profile");
  });
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    try {
      await ctx.api.updateProfile({
        name: String(data.get("name")),
        email: String(data.get("email")),
      });
      status.textContent = "saved";
    } catch (error) {
      status.innerHTML = errorBox(
        error instanceof ApiError ? error.message : "network error; try again");
    }
  });
  return page;
}

export function renderSupport(ctx: AppContext): HTMLElement {
  const page = el(`
    <section class="card">
      <h1>Support</h1>
      <p>Questions about the data or forecasts? Send us an enquiry.</p>
      <form id="support-form">
        <label>Subject <input name="subject"></label>
        <label>Message <textarea name="body" required rows="5"></textarea></label>
        <button type="submit">Send</button>
      </form>
      <div id="support-status"></div>
    </section>`);
  const status = page.querySelector<HTMLElement>("#support-status")!;
  page.querySelector("form")!.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(event.target as HTMLFormElement);
    try {
      const receipt = await ctx.api.enquiry(String(data.get("subject") ?? ""),
        String(data.get("body")));
      status.textContent = `received — enquiry #${receipt.id}`;
    } catch (error) {
      status.innerHTML = errorBox(
        error instanceof ApiError ? error.message : "network error; try again");
    }
  });
  return page;
}

export function renderAbout(): HTMLElement {
  return el(`
    <section class="card">
      <h1>About</h1>
      <p>Weekly Malaysian agriculture commodity prices with automated
      forecasting: the engine trains five model families per commodity and
      serves whichever scores the lowest held-out error, univariate or
      multivariate, up to 52 weeks ahead.</p>
    </section>`);
}

export function renderWeatherStub(): HTMLElement {
  return el(`
    <section class="card">
      <h1>Weather forecast</h1>
      <p class="stub">Weather outlooks are not wired up yet. Temperature,
      humidity and precipitation history already feed the multivariate
      models on the dashboard.</p>
    </section>`);
}

export function renderSubscriptionStub(): HTMLElement {
  return el(`
    <section class="card">
      <h1>Subscription</h1>
      <p class="stub">Plans are not available yet — every feature is
      currently open to signed-in users.</p>
    </section>`);
}

export function renderPage(route: Route, ctx: AppContext): HTMLElement {
  switch (route) {
    case "login": return renderLogin(ctx);
    case "register": return renderRegister(ctx);
    case "dashboard": return renderDashboard(ctx);
    case "profile": return renderProfile(ctx);
    case "support": return renderSupport(ctx);
    case "about": return renderAbout();
    case "weather": return renderWeatherStub();
    case "subscription": return renderSubscriptionStub();
  }
}
