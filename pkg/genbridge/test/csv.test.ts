import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { readExchange, validateExchange, writeExchange } from "../src/csv.js";
import { SchemaError, parseSchemaJson, validateSchema } from "../src/schema.js";
import { SCHEMA, makeRows, workdir, writeFixture } from "./helpers.js";

describe("schema validation", () => {
  it("accepts the canonical layout", () => {
    expect(() => validateSchema(SCHEMA)).not.toThrow();
  });

  it("rejects missing roles and bad ordering", () => {
    expect(() => validateSchema(SCHEMA.slice(0, 4))).toThrow(SchemaError);
    const reordered = [SCHEMA[4], ...SCHEMA.slice(0, 4), SCHEMA[5]];
    expect(() => validateSchema(reordered)).toThrow(/ordered/);
    const continuousTreatment = SCHEMA.map((c) =>
      c.role === "treatment" ? { ...c, kind: "continuous" as const } : c,
    );
    expect(() => validateSchema(continuousTreatment)).toThrow(/binary/);
  });

  it("round-trips through JSON", () => {
    const parsed = parseSchemaJson(JSON.stringify(SCHEMA));
    expect(parsed).toEqual(SCHEMA);
  });
});

describe("exchange validation", () => {
  it("passes a clean file", () => {
    const dir = workdir();
    const path = writeFixture(dir, 50);
    const report = validateExchange(path, SCHEMA);
    expect(report.ok).toBe(true);
    expect(report.rows).toBe(50);
    expect(report.violations).toEqual([]);
  });

  it("flags a reordered header", () => {
    const dir = workdir();
    const path = join(dir, "bad.csv");
    writeFileSync(path, "A,X1,X2,X3,X4,Y\n1,0,0,0.1,0.2,1\n");
    const report = validateExchange(path, SCHEMA);
    expect(report.ok).toBe(false);
    expect(report.violations[0].kind).toBe("header");
  });

  it("flags a fractional value in a binary column with its row index", () => {
    const dir = workdir();
    const path = join(dir, "bad.csv");
    writeFileSync(path, "X1,X2,X3,X4,A,Y\n0,1,0.3,0.4,1,0\n0.5,1,0.3,0.4,1,0\n");
    const report = validateExchange(path, SCHEMA);
    expect(report.ok).toBe(false);
    expect(report.violations[0]).toMatchObject({
      kind: "binary-domain",
      row: 2,
      column: "X1",
    });
  });

  it("flags width and non-finite problems, capped at ten violations", () => {
    const dir = workdir();
    const path = join(dir, "bad.csv");
    const lines = ["X1,X2,X3,X4,A,Y"];
    for (let i = 0; i < 20; i++) lines.push("0,1,nan,0.4,1");
    writeFileSync(path, lines.join("\n") + "\n");
    const report = validateExchange(path, SCHEMA);
    expect(report.ok).toBe(false);
    expect(report.violations.length).toBe(10);
  });

  it("strict read throws on invalid files and round-trips valid ones", () => {
    const dir = workdir();
    const path = writeFixture(dir, 25);
    const rows = readExchange(path, SCHEMA);
    expect(rows.length).toBe(25);
    const again = join(dir, "again.csv");
    writeExchange(again, SCHEMA, rows);
    expect(readFileSync(again, "utf-8")).toBe(readFileSync(path, "utf-8"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "X1\n0\n");
    expect(() => readExchange(bad, SCHEMA)).toThrow(SchemaError);
  });

  it("writes integral values without decimal points", () => {
    const dir = workdir();
    const path = join(dir, "fmt.csv");
    writeExchange(path, SCHEMA, [[0, 1, 2.5, -0.125, 1, 0]]);
    expect(readFileSync(path, "utf-8")).toBe("X1,X2,X3,X4,A,Y\n0,1,2.5,-0.125,1,0\n");
  });
});
