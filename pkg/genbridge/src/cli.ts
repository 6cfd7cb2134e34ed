/**
 * bridge CLI: `fit-sample --config job.json` trains a generator and emits
 * a synthetic exchange CSV; `validate --file t.csv --schema s.json
 * [--covariates-only]` checks a file against a schema and prints the
 * report as JSON.  Exit codes: 0 success, 1 failure, 2 bad usage.
 */

import { readFileSync } from "node:fs";

import { runJob, parseJob } from "./bridge.js";
import { validateExchange } from "./csv.js";
import { covariateOnlySchema, parseSchemaJson, SchemaError } from "./schema.js";

function flags(argv: string[]): Map<string, string | boolean> {
  const out = new Map<string, string | boolean>();
  for (let i = 0; i < argv.length; i++) {
    if (!argv[i].startsWith("--")) continue;
    const key = argv[i].slice(2);
    if (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
      out.set(key, argv[i + 1]);
      i += 1;
    } else {
      out.set(key, true);
    }
  }
  return out;
}

const USAGE = `usage:
  bridge fit-sample --config job.json
  bridge validate --file table.csv --schema schema.json [--covariates-only]`;

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  const opts = flags(rest);
  try {
    if (command === "fit-sample") {
      const configPath = opts.get("config");
      if (typeof configPath !== "string") {
        console.error(USAGE);
        return 2;
      }
      const job = parseJob(JSON.parse(readFileSync(configPath, "utf-8")));
      const summary = await runJob(job);
      console.log(JSON.stringify(summary, null, 2));
      if (summary.shortfall > 0) {
        console.error(`warning: ${summary.shortfall} rows short after retry budget`);
      }
      return 0;
    }
    if (command === "validate") {
      const file = opts.get("file");
      const schemaPath = opts.get("schema");
      if (typeof file !== "string" || typeof schemaPath !== "string") {
        console.error(USAGE);
        return 2;
      }
      let schema = parseSchemaJson(readFileSync(schemaPath, "utf-8"));
      if (opts.get("covariates-only") === true) {
        schema = covariateOnlySchema(schema);
      }
      const report = validateExchange(file, schema);
      console.log(JSON.stringify(report, null, 2));
      return report.ok ? 0 : 1;
    }
    console.error(USAGE);
    return 2;
  } catch (err) {
    const kind = err instanceof SchemaError ? "validation" : "runtime";
    console.error(JSON.stringify({ error: { kind, message: (err as Error).message } }));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
