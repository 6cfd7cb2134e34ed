import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { writeExchange } from "../src/csv.js";
import { Rng } from "../src/rng.js";
import { Schema } from "../src/schema.js";

export const SCHEMA: Schema = [
  { name: "X1", kind: "binary", role: "covariate" },
  { name: "X2", kind: "binary", role: "covariate" },
  { name: "X3", kind: "continuous", role: "covariate" },
  { name: "X4", kind: "continuous", role: "covariate" },
  { name: "A", kind: "binary", role: "treatment" },
  { name: "Y", kind: "binary", role: "outcome" },
];

export function workdir(): string {
  return mkdtempSync(join(tmpdir(), "genbridge-"));
}

/** Small seeded table with real treatment/outcome structure. */
export function makeRows(n: number, seed = 1): number[][] {
  const rng = new Rng(seed);
  const rows: number[][] = [];
  for (let i = 0; i < n; i++) {
    const x1 = rng.next() < 0.5 ? 1 : 0;
    const x2 = rng.next() < 0.3 ? 1 : 0;
    const x3 = rng.normal();
    const x4 = 0.5 * x3 + rng.normal();
    const pa = 1 / (1 + Math.exp(-(0.4 * x1 - 0.3 * x2 + 0.5 * x3)));
    const a = rng.next() < pa ? 1 : 0;
    const py = 1 / (1 + Math.exp(-(-0.2 + 1.2 * a + 0.5 * x1 + 0.3 * x4)));
    const y = rng.next() < py ? 1 : 0;
    rows.push([x1, x2, x3, x4, a, y]);
  }
  return rows;
}

export function writeFixture(dir: string, n = 200): string {
  const path = join(dir, "seed.csv");
  writeExchange(path, SCHEMA, makeRows(n));
  return path;
}

export function writeSchemaJson(dir: string): string {
  const path = join(dir, "schema.json");
  writeFileSync(path, JSON.stringify(SCHEMA, null, 2), "utf-8");
  return path;
}
