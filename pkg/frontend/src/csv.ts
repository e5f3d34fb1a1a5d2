import { readFileSync } from "node:fs";
import Papa from "papaparse";

/** One row of a harness summary CSV (long format, one quantity per row). */
export interface SummaryRow {
  scenario_id: string;
  axis_name: string;
  axis_value: number;
  quantity: string;
  mean: number;
  mc_sd: number;
  n_replicates: number;
  n_failures: number;
}

export const REQUIRED_COLUMNS = [
  "scenario_id",
  "axis_name",
  "axis_value",
  "quantity",
  "mean",
  "mc_sd",
  "n_replicates",
  "n_failures",
] as const;

function toNumber(raw: string, column: string, path: string): number {
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new Error(`${path}: cannot parse ${column}=${JSON.stringify(raw)} as a number`);
  }
  return value;
}

/** Read a summary CSV; the file is only ever read, never rewritten. */
export function readSummaryCsv(path: string): SummaryRow[] {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new Error(`missing input CSV: ${path}`);
  }
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`${path}: CSV parse error at row ${first.row}: ${first.message}`);
  }
  const header = parsed.meta.fields ?? [];
  for (const column of REQUIRED_COLUMNS) {
    if (!header.includes(column)) {
      throw new Error(`${path}: missing required column '${column}' (header: ${header.join(",")})`);
    }
  }
  if (parsed.data.length === 0) {
    throw new Error(`${path}: no data rows`);
  }
  return parsed.data.map((row) => ({
    scenario_id: row.scenario_id,
    axis_name: row.axis_name,
    axis_value: toNumber(row.axis_value, "axis_value", path),
    quantity: row.quantity,
    mean: toNumber(row.mean, "mean", path),
    mc_sd: toNumber(row.mc_sd, "mc_sd", path),
    n_replicates: toNumber(row.n_replicates, "n_replicates", path),
    n_failures: toNumber(row.n_failures, "n_failures", path),
  }));
}

/** Points for one quantity, in ascending axis order, means used verbatim. */
export function extractSeries(
  rows: SummaryRow[],
  quantity: string,
  path: string,
): { x: number; y: number }[] {
  const points = rows
    .filter((row) => row.quantity === quantity)
    .map((row) => ({ x: row.axis_value, y: row.mean }));
  if (points.length === 0) {
    const seen = [...new Set(rows.map((row) => row.quantity))].sort();
    throw new Error(`${path}: quantity '${quantity}' not present (have: ${seen.join(", ")})`);
  }
  return points.slice().sort((a, b) => a.x - b.x);
}
