/**
 * Schema descriptors matching the workbench exchange contract: columns are
 * covariates (in order), then one binary treatment, then one outcome.
 */

export type ColumnKind = "binary" | "continuous";
export type ColumnRole = "covariate" | "treatment" | "outcome";

export interface ColumnSchema {
  name: string;
  kind: ColumnKind;
  role: ColumnRole;
}

export type Schema = ColumnSchema[];

export class SchemaError extends Error {}

export function validateSchema(schema: Schema): Schema {
  const names = new Set<string>();
  for (const col of schema) {
    if (!col.name || col.name.includes(",") || col.name.includes("\n")) {
      throw new SchemaError(`invalid column name ${JSON.stringify(col.name)}`);
    }
    if (names.has(col.name)) throw new SchemaError(`duplicate column name ${col.name}`);
    names.add(col.name);
  }
  const roles = schema.map((c) => c.role);
  const d = roles.filter((r) => r === "covariate").length;
  if (d < 1) throw new SchemaError("schema needs at least one covariate");
  if (roles.filter((r) => r === "treatment").length !== 1) {
    throw new SchemaError("schema needs exactly one treatment column");
  }
  if (roles.filter((r) => r === "outcome").length !== 1) {
    throw new SchemaError("schema needs exactly one outcome column");
  }
  const expected = [...Array(d).fill("covariate"), "treatment", "outcome"];
  if (!roles.every((r, i) => r === expected[i])) {
    throw new SchemaError("columns must be ordered covariates, then treatment, then outcome");
  }
  if (schema[d].kind !== "binary") throw new SchemaError("treatment column must be binary");
  return schema;
}

export function parseSchemaJson(text: string): Schema {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`schema document is not valid JSON: ${(err as Error).message}`);
  }
  if (!Array.isArray(raw)) throw new SchemaError("schema document must be a JSON array");
  const schema = raw.map((item) => {
    const col = item as Record<string, unknown>;
    if (
      typeof col.name !== "string" ||
      (col.kind !== "binary" && col.kind !== "continuous") ||
      (col.role !== "covariate" && col.role !== "treatment" && col.role !== "outcome")
    ) {
      throw new SchemaError(`malformed column entry: ${JSON.stringify(item)}`);
    }
    return { name: col.name, kind: col.kind, role: col.role } as ColumnSchema;
  });
  return validateSchema(schema);
}

export function covariateColumns(schema: Schema): Schema {
  return schema.filter((c) => c.role === "covariate");
}

/** Covariates-only output keeps covariate columns and drops treatment/outcome. */
export function covariateOnlySchema(schema: Schema): Schema {
  return covariateColumns(schema);
}
