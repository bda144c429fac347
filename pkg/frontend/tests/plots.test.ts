import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { readConvergenceCsv, readTimeSeriesCsv } from "../src/csv.js";
import {
  convergenceFigure,
  convergenceSlopes,
  dragLiftFigure,
  errorVsTimeFigure,
} from "../src/plots.js";

const FIXTURES = join(__dirname, "fixtures");
const TS_FILES = [
  "potential_flow_k2_nu500.csv",
  "potential_flow_k2_nu2000.csv",
  "potential_flow_k3_nu500.csv",
  "potential_flow_k3_nu2000.csv",
].map((f) => join(FIXTURES, f));
const CONV_FILE = join(FIXTURES, "kovasznay_k2.csv");

describe("csv readers", () => {
  it("parses the time-series schema", () => {
    const rows = readTimeSeriesCsv(TS_FILES[0]);
    expect(rows.length).toBeGreaterThan(10);
    expect(rows[0].step).toBe(1);
    expect(rows[rows.length - 1].t).toBeGreaterThan(0.5);
    for (const r of rows) {
      expect(Number.isFinite(r.l2_u)).toBe(true);
      expect(r.div_norm).toBeLessThan(1e-9);
    }
  });

  it("parses the convergence schema", () => {
    const rows = readConvergenceCsv(CONV_FILE);
    expect(rows.length).toBeGreaterThanOrEqual(3);
    expect(rows[0].case).toBe("kovasznay");
    expect(rows[1].cells).toBe(4 * rows[0].cells);
  });

  it("rejects a CSV missing schema columns", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "a,b\n1,2\n");
    expect(() => readTimeSeriesCsv(bad)).toThrow(/missing column/);
  });
});

describe("error-vs-time figure", () => {
  it("renders two panels with four labeled curves each", () => {
    const labels = ["k=2 nu=1/500", "k=2 nu=1/2000",
      "k=3 nu=1/500", "k=3 nu=1/2000"];
    const svg = errorVsTimeFigure(TS_FILES, labels);
    expect(svg.startsWith("<svg")).toBe(true);
    // two panels, four curves each
    expect(svg.match(/<path d="M/g)?.length).toBe(8);
    for (const label of labels) {
      const hits = svg.split(label).length - 1;
      expect(hits).toBe(2); // once per panel legend
    }
  });
});

describe("convergence figure and slope fits", () => {
  it("fitted slopes agree with the CSV rate columns to 0.05", () => {
    const reports = convergenceSlopes([CONV_FILE]);
    expect(reports.length).toBe(2);
    for (const r of reports) {
      expect(Number.isFinite(r.fitted)).toBe(true);
      expect(Math.abs(r.fitted - r.csvRate)).toBeLessThanOrEqual(0.05);
    }
    const u = reports.find((r) => r.field === "l2_u")!;
    const p = reports.find((r) => r.field === "l2_p")!;
    expect(u.fitted).toBeGreaterThan(2.8);
    expect(u.fitted).toBeLessThan(3.2);
    expect(p.fitted).toBeGreaterThan(1.8);
    expect(p.fitted).toBeLessThan(2.2);
  });

  it("renders log-log panels with slope triangles", () => {
    const svg = convergenceFigure([CONV_FILE]);
    expect(svg.match(/stroke-dasharray/g)?.length).toBe(2);
    expect(svg).toContain("slope ");
  });
});

describe("drag-lift figure", () => {
  it("renders C_D and C_L panels from a time series", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const csv = join(dir, "channel.csv");
    const header =
      "step,t,l2_u,l2_p,div_norm,mom_res_max,energy,C_D,C_L\n";
    const rows = Array.from({ length: 20 }, (_, i) => {
      const t = 0.05 * (i + 1);
      const cd = 3.0 + 0.1 * Math.sin(8 * t);
      const cl = 0.2 * Math.cos(8 * t);
      return `${i + 1},${t},nan,nan,1e-13,1e-15,1.1,${cd},${cl}`;
    });
    writeFileSync(csv, header + rows.join("\n") + "\n");
    const svg = dragLiftFigure([csv], ["run"]);
    expect(svg).toContain("Drag coefficient");
    expect(svg).toContain("Lift coefficient");
    expect(svg.match(/<path d="M/g)?.length).toBe(2);
  });
});
