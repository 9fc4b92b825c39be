// Bar geometry for the live statistics view. Widths derive only from the
// fractions the server reports; the exact "n/d" form is preferred so the
// pixel rounding is not at the mercy of a float that was rounded upstream.

import type { OptionStats } from "./api.js";

export const PALETTE = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
  "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
];

export interface BarLayout {
  label: string;
  widthPx: number;
  color: string;
  // shown next to the bar so the value never depends on color or length
  valueText: string;
}

function parseExact(exact: string): [number, number] | null {
  const m = /^(\d+)\/(\d+)$/.exec(exact);
  if (!m) return null;
  const d = Number(m[2]);
  return d > 0 ? [Number(m[1]), d] : null;
}

export function barWidth(fraction: number, pixelWidth: number,
                         exact?: string): number {
  const parsed = exact ? parseExact(exact) : null;
  if (parsed) {
    const [n, d] = parsed;
    return Math.round((n * pixelWidth) / d);
  }
  return Math.round(fraction * pixelWidth);
}

export function layoutBars(options: OptionStats[], pixelWidth: number): BarLayout[] {
  if (pixelWidth <= 0) throw new Error("pixelWidth must be positive");
  return options.map((opt, i) => ({
    label: opt.label,
    widthPx: barWidth(opt.fraction, pixelWidth, opt.fraction_exact),
    color: PALETTE[i % PALETTE.length],
    valueText: `${opt.count} (${opt.fraction_exact})`,
  }));
}

export function renderBars(container: HTMLElement, options: OptionStats[],
                           pixelWidth: number): void {
  container.textContent = "";
  for (const bar of layoutBars(options, pixelWidth)) {
    const row = document.createElement("div");
    row.className = "bar-row";
    const label = document.createElement("span");
    label.className = "bar-label";
    label.textContent = bar.label;
    const track = document.createElement("span");
    track.className = "bar-track";
    track.style.width = `${pixelWidth}px`;
    const fill = document.createElement("span");
    fill.className = "bar-fill";
    fill.style.width = `${bar.widthPx}px`;
    fill.style.background = bar.color;
    track.appendChild(fill);
    const value = document.createElement("span");
    value.className = "bar-value";
    value.textContent = bar.valueText;
    row.append(label, track, value);
    container.appendChild(row);
  }
}
