#!/usr/bin/env node
import { writeFileSync } from "fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import {
  convergenceFigure,
  convergenceSlopes,
  dragLiftFigure,
  errorVsTimeFigure,
} from "./plots.js";

const KINDS = ["error-vs-time", "convergence", "drag-lift"] as const;
type Kind = (typeof KINDS)[number];

export function buildFigure(kind: Kind, csvs: string[],
  labels?: string[]): string {
  switch (kind) {
    case "error-vs-time":
      return errorVsTimeFigure(csvs, labels);
    case "convergence":
      return convergenceFigure(csvs, labels);
    case "drag-lift":
      return dragLiftFigure(csvs, labels);
  }
}

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .command("$0 <kind> <csv...>", "render an SVG figure from solver CSVs",
      (y) => y
        .positional("kind", { choices: KINDS, demandOption: true })
        .positional("csv", { type: "string", array: true, demandOption: true })
        .option("o", {
          alias: "out", type: "string", demandOption: true,
          describe: "output SVG path",
        })
        .option("label", {
          type: "string", array: true,
          describe: "curve labels (one per CSV, defaults to file names)",
        }))
    .strict()
    .fail((msg, err) => { throw err ?? new Error(msg); })
    .parse();

  const kind = args.kind as Kind;
  const csvs = args.csv as string[];
  const labels = args.label as string[] | undefined;
  try {
    const svg = buildFigure(kind, csvs, labels);
    writeFileSync(args.o as string, svg);
    if (kind === "convergence") {
      for (const r of convergenceSlopes(csvs)) {
        console.log(`${r.file} ${r.field}: fitted slope ` +
          `${r.fitted.toFixed(3)} (CSV rate ${r.csvRate.toFixed(3)})`);
      }
    }
    console.log(`wrote ${args.o}`);
    return 0;
  } catch (e) {
    console.error(String(e instanceof Error ? e.message : e));
    return 1;
  }
}

const invokedDirectly = process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => { process.exitCode = code; });
}
