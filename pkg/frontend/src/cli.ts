/**
 * plot <kind> --in <csv...> --out <file.svg>
 *
 * Reads one or more result CSVs written by the simulation CLI (several
 * inputs of the same kind are overlaid), validates the schema, and writes a
 * standalone SVG. Nothing is written when validation or rendering fails.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { renderRtCompare, renderScaling, renderSweep } from "./render.js";
import { FigureKind, Row, SchemaError, parseCsv } from "./schema.js";

const RENDERERS: Record<FigureKind, (rows: Row[]) => string> = {
  scaling: renderScaling,
  sweep: renderSweep,
  "rt-compare": renderRtCompare,
};

export function renderFiles(kind: FigureKind, inputs: string[]): string {
  const rows: Row[] = [];
  for (const path of inputs) {
    rows.push(...parseCsv(readFileSync(path, "utf8"), kind));
  }
  return RENDERERS[kind](rows);
}

export function main(argv: string[]): number {
  const kind = argv[0] as FigureKind | undefined;
  if (!kind || !(kind in RENDERERS)) {
    process.stderr.write(
      `usage: plot <${Object.keys(RENDERERS).join("|")}> --in <csv...> --out <file.svg>\n`,
    );
    return 2;
  }
  let parsed;
  try {
    parsed = parseArgs({
      args: argv.slice(1),
      options: {
        in: { type: "string", multiple: true },
        out: { type: "string" },
      },
    });
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
  const inputs = parsed.values.in ?? [];
  const out = parsed.values.out;
  if (inputs.length === 0 || !out) {
    process.stderr.write("error: need at least one --in CSV and an --out file\n");
    return 2;
  }
  try {
    const svg = renderFiles(kind, inputs);
    writeFileSync(out, svg);
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  process.stdout.write(`${out}\n`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
