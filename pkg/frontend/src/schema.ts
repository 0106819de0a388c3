/**
 * CSV schemas written by the simulation CLI. A figure input must match its
 * schema exactly: a missing or unknown column is an error naming the column.
 */

import Papa from "papaparse";

export const SCALING_COLUMNS = [
  "kind", "N", "G", "F", "T_sense_s", "T_wall_s",
  "V_H", "V_H_ci_lo", "V_H_ci_hi", "eta2", "eta_field_nT_sqrtHz", "seed",
] as const;

export const SWEEP_COLUMNS = [
  "kind", "N", "G", "F", "detuning_hz",
  "V_H", "V_H_ci_lo", "V_H_ci_hi", "reps", "seed",
] as const;

export const RT_COLUMNS = [
  "readout_reps", "contrast", "kind", "G", "F", "N_at_min",
  "T_wall_s", "V_H", "eta_field_nT_sqrtHz", "seed",
] as const;

export type FigureKind = "scaling" | "sweep" | "rt-compare";

export const SCHEMAS: Record<FigureKind, readonly string[]> = {
  scaling: SCALING_COLUMNS,
  sweep: SWEEP_COLUMNS,
  "rt-compare": RT_COLUMNS,
};

export class SchemaError extends Error {}

export type Row = Record<string, string>;

/** Python float repr round-trip, including the infinity sentinel. */
export function num(value: string): number {
  if (value === "inf" || value === "Infinity") return Infinity;
  if (value === "-inf" || value === "-Infinity") return -Infinity;
  const x = Number(value);
  if (Number.isNaN(x)) throw new SchemaError(`not a number: ${JSON.stringify(value)}`);
  return x;
}

export function parseCsv(text: string, kind: FigureKind): Row[] {
  const parsed = Papa.parse<Row>(text.trim(), { header: true, skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`CSV parse error: ${parsed.errors[0].message}`);
  }
  const want = SCHEMAS[kind];
  const got = parsed.meta.fields ?? [];
  for (const col of want) {
    if (!got.includes(col)) throw new SchemaError(`missing column: ${col}`);
  }
  for (const col of got) {
    if (!want.includes(col)) throw new SchemaError(`unknown column: ${col}`);
  }
  if (parsed.data.length === 0) throw new SchemaError("CSV has no data rows");
  return parsed.data;
}
