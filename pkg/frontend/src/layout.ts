// Responsive shell: a persistent sidebar on wide windows, a toggled drawer
// on narrow ones.  The breakpoint logic is pure so it can be unit-tested at
// the 1280px and 375px reference widths.

export type LayoutMode = "wide" | "narrow";

export const NARROW_BREAKPOINT_PX = 700;

export function layoutMode(widthPx: number): LayoutMode {
  return widthPx >= NARROW_BREAKPOINT_PX ? "wide" : "narrow";
}

export function applyLayout(root: HTMLElement, widthPx: number): LayoutMode {
  const mode = layoutMode(widthPx);
  root.classList.toggle("app--narrow", mode === "narrow");
  root.classList.toggle("app--wide", mode === "wide");
  return mode;
}

export function toggleNav(root: HTMLElement): boolean {
  return root.classList.toggle("app--nav-open");
}

export function isNavUsable(root: HTMLElement): boolean {
  // wide: the sidebar is always there; narrow: the drawer must be openable
  if (root.classList.contains("app--wide")) return true;
  return root.classList.contains("app--nav-open");
}
