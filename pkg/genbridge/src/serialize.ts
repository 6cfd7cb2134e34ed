/**
 * Textual row serialization for the language-model pipeline.
 *
 * A row becomes a template like `W2=0, W1=1, W4=-0.37 => A=1, Y=0`:
 * covariate fields on the left in randomized order (reduces positional
 * artifacts in autoregressive models), treatment and outcome after the
 * arrow.  Parsing is strict and returns null for anything malformed, so
 * sampled text that does not decode cleanly can be rejected and retried.
 */

import { Rng } from "./rng.js";
import { Schema, covariateColumns } from "./schema.js";

export function serializeRow(schema: Schema, row: number[], rng: Rng): string {
  const d = covariateColumns(schema).length;
  const order = rng.shuffle([...Array(d).keys()]);
  const left = order.map((j) => `${schema[j].name}=${row[j]}`).join(", ");
  const right = `${schema[d].name}=${row[d]}, ${schema[d + 1].name}=${row[d + 1]}`;
  return `${left} => ${right}`;
}

export function serializeCovariates(schema: Schema, row: number[], rng: Rng): string {
  const d = covariateColumns(schema).length;
  const order = rng.shuffle([...Array(d).keys()]);
  return order.map((j) => `${schema[j].name}=${row[j]}`).join(", ");
}

function parseFields(text: string): Map<string, number> | null {
  const fields = new Map<string, number>();
  for (const piece of text.split(",")) {
    const pair = piece.trim();
    if (pair === "") return null;
    const eq = pair.indexOf("=");
    if (eq <= 0) return null;
    const name = pair.slice(0, eq).trim();
    const value = Number(pair.slice(eq + 1).trim());
    if (name === "" || !Number.isFinite(value) || fields.has(name)) return null;
    fields.set(name, value);
  }
  return fields;
}

/**
 * Decode one serialized row back into schema column order.
 * Returns null when fields are missing, duplicated, unparseable, or
 * violate a binary domain.
 */
export function parseRow(schema: Schema, text: string, covariatesOnly = false): number[] | null {
  const d = covariateColumns(schema).length;
  let fields: Map<string, number> | null;
  if (covariatesOnly) {
    if (text.includes("=>")) return null;
    fields = parseFields(text);
  } else {
    const parts = text.split("=>");
    if (parts.length !== 2) return null;
    const left = parseFields(parts[0]);
    const right = parseFields(parts[1]);
    if (left === null || right === null) return null;
    fields = new Map([...left, ...right]);
    if (fields.size !== left.size + right.size) return null;
  }
  if (fields === null) return null;
  const columns = covariatesOnly ? schema.slice(0, d) : schema;
  if (fields.size !== columns.length) return null;
  const row: number[] = [];
  for (const col of columns) {
    const value = fields.get(col.name);
    if (value === undefined) return null;
    if (col.kind === "binary" && value !== 0 && value !== 1) return null;
    row.push(value);
  }
  return row;
}
