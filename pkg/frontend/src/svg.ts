/** Minimal SVG line-plot renderer (no DOM, string assembly only). */

export interface Curve {
  label: string;
  x: number[];
  y: number[];
  color: string;
  marker?: boolean;
}

export interface PanelSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xLog?: boolean;
  yLog?: boolean;
  curves: Curve[];
  /** Extra SVG fragments drawn in data space (already projected). */
  annotate?: (proj: Projection) => string[];
}

export interface Projection {
  px: (x: number) => number;
  py: (y: number) => number;
}

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const PANEL_W = 460;
const PANEL_H = 380;
const MARGIN = { left: 72, right: 16, top: 36, bottom: 52 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function finitePairs(c: Curve): [number, number][] {
  const out: [number, number][] = [];
  for (let i = 0; i < c.x.length; i++) {
    if (Number.isFinite(c.x[i]) && Number.isFinite(c.y[i])) {
      out.push([c.x[i], c.y[i]]);
    }
  }
  return out;
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) {
    ticks.push(v);
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(lo - 1e-9); e <= Math.floor(hi + 1e-9); e++) {
    ticks.push(e);
  }
  if (ticks.length > 8) {
    const stride = Math.ceil(ticks.length / 8);
    return ticks.filter((_, i) => i % stride === 0);
  }
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0);
  return String(Math.round(v * 1e6) / 1e6);
}

function renderPanel(spec: PanelSpec, x0: number): string[] {
  const tx = (v: number) => (spec.xLog ? Math.log10(v) : v);
  const ty = (v: number) => (spec.yLog ? Math.log10(v) : v);
  const pts = spec.curves.map(finitePairs);
  const xs = pts.flatMap((p) => p.map(([x]) => tx(x)));
  const ys = pts.flatMap((p) => p.map(([, y]) => ty(y)));
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (xLo === xHi) { xLo -= 0.5; xHi += 0.5; }
  if (yLo === yHi) { yLo -= 0.5; yHi += 0.5; }
  const padY = 0.06 * (yHi - yLo);
  yLo -= padY; yHi += padY;

  const left = x0 + MARGIN.left;
  const right = x0 + PANEL_W - MARGIN.right;
  const top = MARGIN.top;
  const bottom = PANEL_H - MARGIN.bottom;
  const px = (x: number) => left + ((tx(x) - xLo) / (xHi - xLo)) * (right - left);
  const py = (y: number) => bottom - ((ty(y) - yLo) / (yHi - yLo)) * (bottom - top);

  const out: string[] = [];
  out.push(`<rect x="${left}" y="${top}" width="${right - left}" ` +
    `height="${bottom - top}" fill="white" stroke="#333"/>`);
  out.push(`<text x="${(left + right) / 2}" y="${top - 12}" ` +
    `text-anchor="middle" font-size="15" font-weight="bold">` +
    `${esc(spec.title)}</text>`);

  const xTicks = spec.xLog ? logTicks(xLo, xHi) : niceTicks(xLo, xHi);
  for (const t of xTicks) {
    const X = left + ((t - xLo) / (xHi - xLo)) * (right - left);
    out.push(`<line x1="${X}" y1="${bottom}" x2="${X}" y2="${bottom + 5}" stroke="#333"/>`);
    out.push(`<line x1="${X}" y1="${top}" x2="${X}" y2="${bottom}" stroke="#eee"/>`);
    const label = spec.xLog ? `1e${fmt(t)}` : fmt(t);
    out.push(`<text x="${X}" y="${bottom + 20}" text-anchor="middle" ` +
      `font-size="11">${esc(label)}</text>`);
  }
  const yTicks = spec.yLog ? logTicks(yLo, yHi) : niceTicks(yLo, yHi);
  for (const t of yTicks) {
    const Y = bottom - ((t - yLo) / (yHi - yLo)) * (bottom - top);
    out.push(`<line x1="${left - 5}" y1="${Y}" x2="${left}" y2="${Y}" stroke="#333"/>`);
    out.push(`<line x1="${left}" y1="${Y}" x2="${right}" y2="${Y}" stroke="#eee"/>`);
    const label = spec.yLog ? `1e${fmt(t)}` : fmt(t);
    out.push(`<text x="${left - 8}" y="${Y + 4}" text-anchor="end" ` +
      `font-size="11">${esc(label)}</text>`);
  }
  out.push(`<text x="${(left + right) / 2}" y="${PANEL_H - 14}" ` +
    `text-anchor="middle" font-size="13">${esc(spec.xLabel)}</text>`);
  out.push(`<text x="${x0 + 18}" y="${(top + bottom) / 2}" ` +
    `text-anchor="middle" font-size="13" ` +
    `transform="rotate(-90 ${x0 + 18} ${(top + bottom) / 2})">` +
    `${esc(spec.yLabel)}</text>`);

  spec.curves.forEach((c, i) => {
    const p = finitePairs(c);
    if (p.length === 0) return;
    const d = p.map(([x, y], j) =>
      `${j === 0 ? "M" : "L"}${px(x).toFixed(2)},${py(y).toFixed(2)}`).join(" ");
    out.push(`<path d="${d}" fill="none" stroke="${c.color}" stroke-width="1.8"/>`);
    if (c.marker) {
      for (const [x, y] of p) {
        out.push(`<circle cx="${px(x).toFixed(2)}" cy="${py(y).toFixed(2)}" ` +
          `r="3" fill="${c.color}"/>`);
      }
    }
    const lx = left + 12;
    const ly = top + 16 + 16 * i;
    out.push(`<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" ` +
      `stroke="${c.color}" stroke-width="2"/>`);
    out.push(`<text x="${lx + 28}" y="${ly}" font-size="12" ` +
      `class="legend">${esc(c.label)}</text>`);
  });

  if (spec.annotate) {
    out.push(...spec.annotate({ px, py }));
  }
  return out;
}

export function renderFigure(panels: PanelSpec[]): string {
  const width = PANEL_W * panels.length;
  const body = panels.flatMap((p, i) => renderPanel(p, i * PANEL_W));
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${PANEL_H}" font-family="sans-serif">`,
    `<rect width="${width}" height="${PANEL_H}" fill="white"/>`,
    ...body,
    "</svg>",
  ].join("\n");
}
