import {
  labelFromPath,
  readConvergenceCsv,
  readTimeSeriesCsv,
} from "./csv.js";
import { fitConvergenceOrder } from "./fit.js";
import { Curve, PALETTE, PanelSpec, renderFigure } from "./svg.js";

export interface SlopeReport {
  file: string;
  field: "l2_u" | "l2_p";
  fitted: number;
  /** Last rate column entry from the CSV, for cross-checking. */
  csvRate: number;
}

/**
 * Two-panel figure (velocity | pressure) of L2 errors over time, one curve
 * per input CSV.
 */
export function errorVsTimeFigure(paths: string[], labels?: string[]): string {
  const panels: PanelSpec[] = [
    { title: "Velocity error", xLabel: "t", yLabel: "L2 error", yLog: true, curves: [] },
    { title: "Pressure error", xLabel: "t", yLabel: "L2 error", yLog: true, curves: [] },
  ];
  paths.forEach((path, i) => {
    const rows = readTimeSeriesCsv(path);
    const label = labels?.[i] ?? labelFromPath(path);
    const color = PALETTE[i % PALETTE.length];
    const t = rows.map((r) => r.t);
    panels[0].curves.push({ label, x: t, y: rows.map((r) => r.l2_u), color });
    panels[1].curves.push({ label, x: t, y: rows.map((r) => r.l2_p), color });
  });
  return renderFigure(panels);
}

/** Fit log-log slopes of the convergence CSVs, independently of the CSV
 * rate columns. */
export function convergenceSlopes(paths: string[]): SlopeReport[] {
  const out: SlopeReport[] = [];
  for (const path of paths) {
    const rows = readConvergenceCsv(path);
    const cells = rows.map((r) => r.cells);
    for (const field of ["l2_u", "l2_p"] as const) {
      const errs = rows.map((r) => r[field]);
      if (errs.some((e) => !(e > 0))) continue; // exact-in-space fields
      out.push({
        file: path,
        field,
        fitted: fitConvergenceOrder(cells, errs),
        csvRate: field === "l2_u"
          ? rows[rows.length - 1].rate_u
          : rows[rows.length - 1].rate_p,
      });
    }
  }
  return out;
}

function slopeTriangle(
  hRef: number, eRef: number, order: number, color: string,
): PanelSpec["annotate"] {
  return ({ px, py }) => {
    const h2 = hRef / 2;
    const e2 = eRef * Math.pow(0.5, order);
    const x1 = px(hRef); const y1 = py(eRef);
    const x2 = px(h2); const y2 = py(e2);
    return [
      `<path d="M${x1},${y1} L${x1},${y2} L${x2},${y2} Z" fill="none" ` +
      `stroke="${color}" stroke-dasharray="4 3"/>`,
      `<text x="${x1 + 6}" y="${(y1 + y2) / 2}" font-size="11" ` +
      `fill="${color}">${order}</text>`,
    ];
  };
}

/**
 * Log-log error-vs-h figure with reference-slope triangles of order k+1
 * (velocity) and k (pressure), plus fitted slopes in the curve labels.
 */
export function convergenceFigure(paths: string[], labels?: string[]): string {
  const uCurves: Curve[] = [];
  const pCurves: Curve[] = [];
  const reports = convergenceSlopes(paths);
  let kMax = 1;
  const anchors: { h: number; eU: number; eP: number }[] = [];
  paths.forEach((path, i) => {
    const rows = readConvergenceCsv(path);
    const base = labels?.[i] ?? labelFromPath(path);
    const color = PALETTE[i % PALETTE.length];
    const h = rows.map((r) => Math.pow(r.cells, -0.5));
    kMax = Math.max(kMax, ...rows.map((r) => r.k));
    const rep = (f: "l2_u" | "l2_p") =>
      reports.find((r) => r.file === path && r.field === f);
    const ru = rep("l2_u");
    const rp = rep("l2_p");
    if (ru) {
      uCurves.push({
        label: `${base} u (slope ${ru.fitted.toFixed(2)})`,
        x: h, y: rows.map((r) => r.l2_u), color, marker: true,
      });
    }
    if (rp) {
      pCurves.push({
        label: `${base} p (slope ${rp.fitted.toFixed(2)})`,
        x: h, y: rows.map((r) => r.l2_p), color, marker: true,
      });
    }
    const last = rows[rows.length - 1];
    if (ru && rp) {
      anchors.push({
        h: Math.pow(last.cells, -0.5) * 2.5,
        eU: last.l2_u * 3,
        eP: last.l2_p * 3,
      });
    }
  });
  const a = anchors.length > 0 ? anchors[0] : null;
  const panels: PanelSpec[] = [
    {
      title: "Velocity convergence", xLabel: "h = cells^(-1/2)",
      yLabel: "L2 error", xLog: true, yLog: true, curves: uCurves,
      annotate: a ? slopeTriangle(a.h, a.eU, kMax + 1, "#555") : undefined,
    },
    {
      title: "Pressure convergence", xLabel: "h = cells^(-1/2)",
      yLabel: "L2 error", xLog: true, yLog: true, curves: pCurves,
      annotate: a ? slopeTriangle(a.h, a.eP, kMax, "#555") : undefined,
    },
  ];
  return renderFigure(panels);
}

/** C_D(t) and C_L(t) panels from transient time-series CSVs. */
export function dragLiftFigure(paths: string[], labels?: string[]): string {
  const panels: PanelSpec[] = [
    { title: "Drag coefficient", xLabel: "t", yLabel: "C_D", curves: [] },
    { title: "Lift coefficient", xLabel: "t", yLabel: "C_L", curves: [] },
  ];
  paths.forEach((path, i) => {
    const rows = readTimeSeriesCsv(path);
    const label = labels?.[i] ?? labelFromPath(path);
    const color = PALETTE[i % PALETTE.length];
    const t = rows.map((r) => r.t);
    panels[0].curves.push({ label, x: t, y: rows.map((r) => r.C_D), color });
    panels[1].curves.push({ label, x: t, y: rows.map((r) => r.C_L), color });
  });
  return renderFigure(panels);
}
