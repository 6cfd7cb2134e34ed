/**
 * Bridge jobs: fit an external-style generator on real data and emit a
 * covariates-only or full-joint synthetic table in the exchange format.
 *
 * Every emitted row passes through a rejection funnel (malformed or
 * out-of-domain rows are dropped and resampled within a 3x attempt
 * budget); the written file is re-validated before the job reports
 * success, and a metadata sidecar records the generator kind, training
 * options, seed, runtime, and any shortfall.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { readExchange, validateExchange, writeExchange } from "./csv.js";
import { TabularGan } from "./gan.js";
import { TokenLm } from "./lm.js";
import { Rng } from "./rng.js";
import {
  covariateOnlySchema,
  parseSchemaJson,
  Schema,
  SchemaError,
  validateSchema,
} from "./schema.js";

export type GeneratorKind = "lm-serialized" | "conditional-gan";
export type BridgeMode = "covariates-only" | "full-joint";

export interface BridgeJob {
  input: string;
  schema: Schema | string; // inline schema array or path to a schema JSON
  generator: GeneratorKind;
  mode: BridgeMode;
  n: number;
  output: string;
  seed: number;
  epochs?: number;
  batchSize?: number;
  bins?: number;
}

export interface BridgeSummary {
  output: string;
  sidecar: string;
  requested: number;
  emitted: number;
  rejected: number;
  shortfall: number;
  runtimeMs: number;
}

const RETRY_BUDGET_FACTOR = 3;

export function parseJob(raw: unknown): BridgeJob {
  const job = raw as Record<string, unknown>;
  const fail = (msg: string) => {
    throw new SchemaError(`malformed bridge job: ${msg}`);
  };
  if (typeof job.input !== "string") fail("'input' must be a path");
  if (typeof job.output !== "string") fail("'output' must be a path");
  if (job.generator !== "lm-serialized" && job.generator !== "conditional-gan") {
    fail("'generator' must be lm-serialized or conditional-gan");
  }
  if (job.mode !== "covariates-only" && job.mode !== "full-joint") {
    fail("'mode' must be covariates-only or full-joint");
  }
  if (typeof job.n !== "number" || job.n < 1) fail("'n' must be a positive count");
  if (typeof job.seed !== "number") fail("'seed' must be an integer");
  let schema: Schema | string;
  if (typeof job.schema === "string") {
    schema = job.schema;
  } else if (Array.isArray(job.schema)) {
    schema = parseSchemaJson(JSON.stringify(job.schema));
  } else {
    fail("'schema' must be an inline schema array or a path");
    throw new Error("unreachable");
  }
  return {
    input: job.input as string,
    schema,
    generator: job.generator as GeneratorKind,
    mode: job.mode as BridgeMode,
    n: job.n as number,
    output: job.output as string,
    seed: job.seed as number,
    epochs: typeof job.epochs === "number" ? job.epochs : undefined,
    batchSize: typeof job.batchSize === "number" ? job.batchSize : undefined,
    bins: typeof job.bins === "number" ? job.bins : undefined,
  };
}

export function resolveSchema(job: BridgeJob): Schema {
  if (typeof job.schema === "string") {
    return parseSchemaJson(readFileSync(job.schema, "utf-8"));
  }
  return validateSchema(job.schema);
}

interface RowSampler {
  sampleRow(rng: Rng): number[] | null;
}

function rowIsValid(row: number[], schema: Schema, width: number): boolean {
  if (row.length !== width) return false;
  for (let j = 0; j < width; j++) {
    const v = row[j];
    if (!Number.isFinite(v)) return false;
    if (schema[j].kind === "binary" && v !== 0 && v !== 1) return false;
  }
  return true;
}

/** Sample through the rejection funnel; stops at n rows or 3n attempts. */
export function sampleWithRejection(
  sampler: RowSampler,
  schema: Schema,
  width: number,
  n: number,
  rng: Rng,
): { rows: number[][]; rejected: number } {
  const rows: number[][] = [];
  let rejected = 0;
  let attempts = 0;
  const budget = RETRY_BUDGET_FACTOR * n;
  while (rows.length < n && attempts < budget) {
    attempts += 1;
    const row = sampler.sampleRow(rng);
    if (row !== null && rowIsValid(row, schema, width)) {
      rows.push(row);
    } else {
      rejected += 1;
    }
  }
  return { rows, rejected };
}

export async function runJob(job: BridgeJob): Promise<BridgeSummary> {
  const started = Date.now();
  const schema = resolveSchema(job);
  const rows = readExchange(job.input, schema);
  const covariatesOnly = job.mode === "covariates-only";
  const outSchema = covariatesOnly ? covariateOnlySchema(schema) : schema;
  const epochs = job.epochs ?? 5;
  const batchSize = job.batchSize ?? 32;

  let sampler: RowSampler;
  if (job.generator === "lm-serialized") {
    const lm = new TokenLm(schema, covariatesOnly, job.bins ?? 12);
    lm.fit(rows, epochs, job.seed);
    sampler = lm;
  } else {
    const gan = new TabularGan(schema, covariatesOnly);
    await gan.fit(rows, epochs, batchSize);
    sampler = gan;
  }

  const rng = new Rng(job.seed);
  const { rows: sampled, rejected } = sampleWithRejection(
    sampler, schema, outSchema.length, job.n, rng,
  );
  writeExchange(job.output, outSchema, sampled);
  const report = validateExchange(job.output, outSchema);
  if (!report.ok) {
    throw new SchemaError(
      `emitted file failed exchange validation: ${JSON.stringify(report.violations[0])}`,
    );
  }

  const summary: BridgeSummary = {
    output: job.output,
    sidecar: job.output + ".meta.json",
    requested: job.n,
    emitted: sampled.length,
    rejected,
    shortfall: job.n - sampled.length,
    runtimeMs: Date.now() - started,
  };
  writeFileSync(
    summary.sidecar,
    JSON.stringify(
      {
        generator: job.generator,
        mode: job.mode,
        epochs,
        batchSize,
        seed: job.seed,
        input: job.input,
        ...summary,
      },
      null,
      2,
    ),
    "utf-8",
  );
  return summary;
}
