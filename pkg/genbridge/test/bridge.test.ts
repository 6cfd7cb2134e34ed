import { spawnSync } from "node:child_process";
import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { parseJob, runJob, sampleWithRejection } from "../src/bridge.js";
import { validateExchange } from "../src/csv.js";
import { Rng } from "../src/rng.js";
import { covariateOnlySchema, SchemaError } from "../src/schema.js";
import { SCHEMA, makeRows, workdir, writeFixture, writeSchemaJson } from "./helpers.js";

function pythonHasPrimary(): boolean {
  const probe = spawnSync("python3", ["-c", "import causalsynth"], { timeout: 30_000 });
  return probe.status === 0;
}

const PRIMARY_AVAILABLE = pythonHasPrimary();

function loadInPrimary(csvPath: string, schemaPath: string, covariatesOnly: boolean): number {
  const code = covariatesOnly
    ? `
import json, sys
import numpy as np
from causalsynth.data import ColumnSchema, load_table, schema_from_json, validate_schema
schema = schema_from_json(open(${JSON.stringify(schemaPath)}).read())
covs = [c for c in schema if c.role == "covariate"]
# a covariates-only file has no treatment/outcome; check it column by column
with open(${JSON.stringify(csvPath)}) as fh:
    header = fh.readline().strip().split(",")
    rows = np.loadtxt(fh, delimiter=",", ndmin=2)
assert header == [c.name for c in covs], header
assert np.all(np.isfinite(rows))
for j, c in enumerate(covs):
    if c.kind == "binary":
        assert set(np.unique(rows[:, j])) <= {0.0, 1.0}
print(len(rows))
`
    : `
from causalsynth.data import load_table, schema_from_json
schema = schema_from_json(open(${JSON.stringify(schemaPath)}).read())
ds = load_table(${JSON.stringify(csvPath)}, schema)
print(ds.n)
`;
  const run = spawnSync("python3", ["-c", code], { timeout: 60_000 });
  expect(run.status, String(run.stderr)).toBe(0);
  return Number(String(run.stdout).trim());
}

describe("bridge jobs", () => {
  it("parses and validates job documents", () => {
    const dir = workdir();
    const job = parseJob({
      input: "in.csv",
      schema: SCHEMA,
      generator: "lm-serialized",
      mode: "full-joint",
      n: 10,
      output: join(dir, "out.csv"),
      seed: 1,
    });
    expect(job.generator).toBe("lm-serialized");
    expect(() => parseJob({ ...job, generator: "diffusion" })).toThrow(SchemaError);
    expect(() => parseJob({ ...job, n: 0 })).toThrow(SchemaError);
    expect(() => parseJob({ ...job, schema: 42 })).toThrow(SchemaError);
  });

  it("lm full-joint output passes validation and loads in the primary package", async () => {
    const dir = workdir();
    const input = writeFixture(dir, 250);
    const schemaPath = writeSchemaJson(dir);
    const output = join(dir, "syn.csv");
    const summary = await runJob({
      input, schema: SCHEMA, generator: "lm-serialized", mode: "full-joint",
      n: 400, output, seed: 11, epochs: 3,
    });
    expect(summary.emitted).toBe(400);
    expect(summary.shortfall).toBe(0);
    const report = validateExchange(output, SCHEMA);
    expect(report.ok).toBe(true);
    const sidecar = JSON.parse(readFileSync(summary.sidecar, "utf-8"));
    expect(sidecar).toMatchObject({ generator: "lm-serialized", seed: 11, epochs: 3 });
    expect(existsSync(summary.sidecar)).toBe(true);
    if (PRIMARY_AVAILABLE) {
      expect(loadInPrimary(output, schemaPath, false)).toBe(400);
    }
  });

  it("covariates-only output carries exactly the covariate columns", async () => {
    const dir = workdir();
    const input = writeFixture(dir, 200);
    const schemaPath = writeSchemaJson(dir);
    const output = join(dir, "cov.csv");
    const summary = await runJob({
      input, schema: SCHEMA, generator: "lm-serialized", mode: "covariates-only",
      n: 150, output, seed: 3,
    });
    expect(summary.emitted).toBe(150);
    const header = readFileSync(output, "utf-8").split("\n")[0];
    expect(header).toBe("X1,X2,X3,X4");
    const report = validateExchange(output, covariateOnlySchema(SCHEMA));
    expect(report.ok).toBe(true);
    if (PRIMARY_AVAILABLE) {
      expect(loadInPrimary(output, schemaPath, true)).toBe(150);
    }
  });

  it("lm sampling is deterministic in the seed", async () => {
    const dir = workdir();
    const input = writeFixture(dir, 120);
    const a = join(dir, "a.csv");
    const b = join(dir, "b.csv");
    for (const output of [a, b]) {
      await runJob({
        input, schema: SCHEMA, generator: "lm-serialized", mode: "full-joint",
        n: 80, output, seed: 21,
      });
    }
    expect(readFileSync(a, "utf-8")).toBe(readFileSync(b, "utf-8"));
  });

  it("conditional-gan output respects the schema", async () => {
    const dir = workdir();
    const input = writeFixture(dir, 150);
    const output = join(dir, "gan.csv");
    const summary = await runJob({
      input, schema: SCHEMA, generator: "conditional-gan", mode: "full-joint",
      n: 60, output, seed: 5, epochs: 1, batchSize: 32,
    });
    expect(summary.emitted).toBe(60);
    expect(validateExchange(output, SCHEMA).ok).toBe(true);
  }, 60_000);

  it("schema may be given as a file path", async () => {
    const dir = workdir();
    const input = writeFixture(dir, 100);
    const schemaPath = writeSchemaJson(dir);
    const output = join(dir, "via-path.csv");
    const summary = await runJob({
      input, schema: schemaPath, generator: "lm-serialized", mode: "full-joint",
      n: 50, output, seed: 9,
    });
    expect(summary.emitted).toBe(50);
  });
});

describe("rejection funnel", () => {
  it("resamples malformed rows and reports a shortfall after the budget", () => {
    const good = makeRows(1, 7)[0];
    let calls = 0;
    const flaky = {
      sampleRow: () => {
        calls += 1;
        return calls % 2 === 0 ? good : null; // every other row malformed
      },
    };
    const out = sampleWithRejection(flaky, SCHEMA, SCHEMA.length, 10, new Rng(1));
    expect(out.rows.length).toBe(10);
    expect(out.rejected).toBe(10);

    const hopeless = { sampleRow: () => null };
    const short = sampleWithRejection(hopeless, SCHEMA, SCHEMA.length, 10, new Rng(1));
    expect(short.rows.length).toBe(0);
    expect(short.rejected).toBe(30); // 3x budget exhausted
  });

  it("rejects rows violating binary domains or finiteness", () => {
    const bad = [
      [0.5, 0, 0.1, 0.2, 1, 0], // fractional binary
      [0, 0, Number.NaN, 0.2, 1, 0],
      [0, 0, 0.1, 0.2, 1, 1], // valid
    ];
    let i = 0;
    const sampler = { sampleRow: () => bad[i++ % bad.length] };
    const out = sampleWithRejection(sampler, SCHEMA, SCHEMA.length, 1, new Rng(1));
    expect(out.rows).toEqual([[0, 0, 0.1, 0.2, 1, 1]]);
    expect(out.rejected).toBe(2);
  });
});
