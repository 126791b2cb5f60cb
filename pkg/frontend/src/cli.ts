#!/usr/bin/env node
/**
 * plot <outdir> [--figures trajectory,timeseries,convergence] [--out DIR]
 *
 * Reads trajectory.csv and diagnostics.json from <outdir> (as written by
 * the solver CLI) and emits one SVG per selected figure. Exit status 0 on
 * success, 1 on missing files or schema mismatch.
 */

import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { join } from "node:path";

import { FIGURE_NAMES, FigureName, makeFigures } from "./figures.js";
import { SchemaError, parseDiagnostics, parseTrajectoryCsv } from "./schema.js";

export function run(argv: string[]): number {
  const args = [...argv];
  let outDir: string | null = null;
  let selection: FigureName[] = [...FIGURE_NAMES];
  const positional: string[] = [];
  while (args.length) {
    const a = args.shift()!;
    if (a === "--out") {
      outDir = args.shift() ?? null;
    } else if (a === "--figures") {
      const list = (args.shift() ?? "").split(",").map((s) => s.trim()).filter(Boolean);
      for (const name of list) {
        if (!(FIGURE_NAMES as readonly string[]).includes(name)) {
          console.error(`error: unknown figure '${name}' (choose from ${FIGURE_NAMES.join(", ")})`);
          return 1;
        }
      }
      selection = list as FigureName[];
    } else if (a === "--help" || a === "-h") {
      console.log("usage: plot <outdir> [--figures a,b,c] [--out DIR]");
      return 0;
    } else {
      positional.push(a);
    }
  }
  if (positional.length !== 1) {
    console.error("usage: plot <outdir> [--figures a,b,c] [--out DIR]");
    return 1;
  }
  const inDir = positional[0];
  const target = outDir ?? inDir;

  let csvText: string;
  let diagText: string;
  try {
    csvText = readFileSync(join(inDir, "trajectory.csv"), "utf-8");
    diagText = readFileSync(join(inDir, "diagnostics.json"), "utf-8");
  } catch (err) {
    console.error(`error: cannot read solver outputs in '${inDir}': ${String(err)}`);
    return 1;
  }
  try {
    const rows = parseTrajectoryCsv(csvText);
    const diag = parseDiagnostics(diagText);
    mkdirSync(target, { recursive: true });
    for (const fig of makeFigures(rows, diag, selection)) {
      const path = join(target, `${fig.name}.svg`);
      writeFileSync(path, fig.svg);
      console.log(`wrote ${path}`);
    }
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
  return 0;
}

const isMain = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isMain) {
  process.exit(run(process.argv.slice(2)));
}
