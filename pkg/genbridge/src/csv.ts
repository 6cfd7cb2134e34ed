/**
 * Strict exchange CSV reader/writer and the validation report.
 *
 * The format: UTF-8, first line is the header with exact column names,
 * comma separated numeric values, binary columns restricted to 0/1.
 * Integral values are written without a decimal point; everything else in
 * JavaScript's shortest round-trip decimal form.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { ColumnSchema, Schema, SchemaError } from "./schema.js";

export interface Violation {
  row: number | null; // 1-based data row; null for header-level problems
  column: string | null;
  kind: "header" | "width" | "parse" | "non-finite" | "binary-domain";
  message: string;
}

export interface ValidationReport {
  ok: boolean;
  rows: number;
  violations: Violation[]; // first 10
  checked: string;
}

const MAX_VIOLATIONS = 10;

export function formatValue(value: number): string {
  if (Number.isInteger(value) && Math.abs(value) < 1e16) return String(value);
  return String(value);
}

export function writeExchange(path: string, schema: Schema, rows: number[][]): void {
  const header = schema.map((c) => c.name).join(",");
  const lines = rows.map((row) => row.map(formatValue).join(","));
  writeFileSync(path, header + "\n" + lines.join("\n") + "\n", "utf-8");
}

function checkCell(
  token: string,
  rowIndex: number,
  col: ColumnSchema,
  violations: Violation[],
): number | null {
  const value = token === "" ? NaN : Number(token);
  if (Number.isNaN(value) && token.trim().toLowerCase() !== "nan") {
    violations.push({
      row: rowIndex,
      column: col.name,
      kind: "parse",
      message: `cannot parse ${JSON.stringify(token)}`,
    });
    return null;
  }
  if (!Number.isFinite(value)) {
    violations.push({
      row: rowIndex,
      column: col.name,
      kind: "non-finite",
      message: `non-finite value ${JSON.stringify(token)}`,
    });
    return null;
  }
  if (col.kind === "binary" && value !== 0 && value !== 1) {
    violations.push({
      row: rowIndex,
      column: col.name,
      kind: "binary-domain",
      message: `binary column has value ${token}`,
    });
    return null;
  }
  return value;
}

/** Validate a file against a schema; never throws on content problems. */
export function validateExchange(path: string, schema: Schema): ValidationReport {
  const text = readFileSync(path, "utf-8");
  const lines = text.split(/\r?\n/).filter((line, i, all) => !(line === "" && i === all.length - 1));
  const violations: Violation[] = [];
  const expectedHeader = schema.map((c) => c.name).join(",");
  let rows = 0;
  if (lines.length === 0 || lines[0] !== expectedHeader) {
    violations.push({
      row: null,
      column: null,
      kind: "header",
      message: `expected header ${JSON.stringify(expectedHeader)}, found ${JSON.stringify(lines[0] ?? "")}`,
    });
  } else {
    for (let i = 1; i < lines.length && violations.length < MAX_VIOLATIONS; i++) {
      if (lines[i] === "") continue;
      const tokens = lines[i].split(",");
      rows += 1;
      if (tokens.length !== schema.length) {
        violations.push({
          row: i,
          column: null,
          kind: "width",
          message: `expected ${schema.length} fields, found ${tokens.length}`,
        });
        continue;
      }
      for (let j = 0; j < schema.length && violations.length < MAX_VIOLATIONS; j++) {
        checkCell(tokens[j], i, schema[j], violations);
      }
    }
  }
  return { ok: violations.length === 0 && rows > 0, rows, violations, checked: path };
}

/** Strict read: throws on the first problem. */
export function readExchange(path: string, schema: Schema): number[][] {
  const report = validateExchange(path, schema);
  if (!report.ok) {
    const first = report.violations[0];
    const where = first ? ` (${first.kind}${first.row != null ? ` at row ${first.row}` : ""})` : "";
    throw new SchemaError(`${path} failed exchange validation${where}`);
  }
  const lines = readFileSync(path, "utf-8").split(/\r?\n/);
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    if (lines[i] === "") continue;
    rows.push(lines[i].split(",").map(Number));
  }
  return rows;
}
