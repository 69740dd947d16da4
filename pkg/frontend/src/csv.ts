import { readFileSync } from "node:fs";
import Papa from "papaparse";

export interface Table {
  path: string;
  columns: string[];
  /** column name -> numeric values, one per row */
  series: Map<string, number[]>;
}

/** Raised when a requested column is absent from a CSV header. */
export class MissingColumnError extends Error {
  constructor(public readonly column: string, public readonly file: string, available: string[]) {
    super(`column '${column}' not found in ${file} (available: ${available.join(", ")})`);
  }
}

export function readTable(path: string): Table {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new Error(`failed to parse ${path}: ${parsed.errors[0].message}`);
  }
  const [header, ...rows] = parsed.data;
  if (!header || header.length === 0) {
    throw new Error(`${path} has no header row`);
  }
  const series = new Map<string, number[]>(header.map((c) => [c, []]));
  for (const row of rows) {
    header.forEach((col, i) => series.get(col)!.push(Number(row[i])));
  }
  return { path, columns: header, series };
}

/** Column lookup that fails loudly, naming the missing column. */
export function column(table: Table, name: string): number[] {
  const values = table.series.get(name);
  if (values === undefined) {
    throw new MissingColumnError(name, table.path, table.columns);
  }
  return values;
}
