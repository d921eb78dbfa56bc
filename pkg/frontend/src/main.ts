import { ApiClient } from "./api.js";
import { DashboardController } from "./dashboard.js";
import { applyLayout, toggleNav } from "./layout.js";
import { AppContext, PUBLIC_ROUTES, Route, parseRoute, renderPage } from "./pages.js";
import { Session } from "./session.js";

const NAV_ITEMS: Array<[Route, string]> = [
  ["dashboard", "Dashboard"],
  ["profile", "Profile"],
  ["support", "Support"],
  ["weather", "Weather"],
  ["about", "About"],
  ["subscription", "Subscription"],
];

export function bootstrap(root: HTMLElement): AppContext {
  const session = new Session();
  const api = new ApiClient(session);
  const dashboard = new DashboardController(api);
  const navigate = (route: Route) => {
    window.location.hash = `#/${route}`;
  };
  const ctx: AppContext = { api, session, dashboard, navigate };

  root.innerHTML = `
    <header class="topbar">
      <button id="nav-toggle" aria-label="menu">☰</button>
      <span class="brand">agriprice</span>
      <button id="logout-button" class="topbar-right">Log out</button>
    </header>
    <div class="shell">
      <nav id="sidebar" class="sidebar">
        ${NAV_ITEMS.map(([route, label]) => `<a href="#/${route}">${label}</a>`).join("")}
      </nav>
      <main id="page"></main>
    </div>`;

  root.querySelector("#nav-toggle")!.addEventListener("click", () => toggleNav(root));
  root.querySelector("#logout-button")!.addEventListener("click", () => {
    session.clear();
    navigate("login");
  });

  const render = () => {
    const route = parseRoute(window.location.hash);
    if (!PUBLIC_ROUTES.has(route) && !session.isActive()) {
      navigate("login");
      return;
    }
    const authenticated = session.isActive();
    root.querySelector("#logout-button")!.toggleAttribute("hidden", !authenticated);
    root.querySelector("#sidebar")!.toggleAttribute("hidden", !authenticated);
    const page = root.querySelector("#page")!;
    page.innerHTML = "";
    page.appendChild(renderPage(route, ctx));
    root.classList.remove("app--nav-open");
  };

  window.addEventListener("hashchange", render);
  window.addEventListener("resize", () => applyLayout(root, window.innerWidth));
  applyLayout(root, window.innerWidth);
  render();
  return ctx;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap(document.getElementById("app")!);
}
