import { readFileSync } from "fs";
import Papa from "papaparse";

/** One row of a steady mesh-refinement study. */
export interface ConvergenceRow {
  case: string;
  k: number;
  cells: number;
  l2_u: number;
  rate_u: number;
  l2_p: number;
  rate_p: number;
  h1_u: number;
  rate_h1: number;
  div_norm: number;
  jump_norm: number;
  mom_res_max: number;
  energy: number;
  walltime_s: number;
}

/** One row of a transient run time series. */
export interface TimeSeriesRow {
  step: number;
  t: number;
  l2_u: number;
  l2_p: number;
  div_norm: number;
  mom_res_max: number;
  energy: number;
  C_D: number;
  C_L: number;
}

const CONVERGENCE_COLUMNS = [
  "case", "k", "cells", "l2_u", "rate_u", "l2_p", "rate_p", "h1_u",
  "rate_h1", "div_norm", "jump_norm", "mom_res_max", "energy", "walltime_s",
];

const TIMESERIES_COLUMNS = [
  "step", "t", "l2_u", "l2_p", "div_norm", "mom_res_max", "energy",
  "C_D", "C_L",
];

function parseRows(path: string, columns: string[]): Record<string, unknown>[] {
  const text = readFileSync(path, "utf8");
  const result = Papa.parse<Record<string, unknown>>(text, {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (result.errors.length > 0) {
    const e = result.errors[0];
    throw new Error(`${path}: CSV parse error at row ${e.row}: ${e.message}`);
  }
  const fields = result.meta.fields ?? [];
  for (const col of columns) {
    if (!fields.includes(col)) {
      throw new Error(`${path}: missing column '${col}'`);
    }
  }
  return result.data;
}

export function readConvergenceCsv(path: string): ConvergenceRow[] {
  return parseRows(path, CONVERGENCE_COLUMNS) as unknown as ConvergenceRow[];
}

export function readTimeSeriesCsv(path: string): TimeSeriesRow[] {
  return parseRows(path, TIMESERIES_COLUMNS) as unknown as TimeSeriesRow[];
}

/** Derive a short curve label from a CSV file path. */
export function labelFromPath(path: string): string {
  const base = path.split("/").pop() ?? path;
  return base.replace(/\.csv$/i, "");
}
