"""Command-line entry point for the workbench.

Subcommands: dgp-sample, dgp-truth, generate, estimate, diagnose,
check-theory, positivity, simulate, fidelity.  Every command accepts
``--config FILE`` (a JSON object whose keys mirror the flag names with
dashes replaced by underscores); explicit flags override config-file
values, and the resolved merge is recorded alongside every artifact.

Outputs: data tables are exchange CSVs with a ``<name>.meta.json`` sidecar
carrying the resolved configuration and seed; report tables are CSV with
the same sidecar convention; nested diagnostics are JSON documents that
embed the configuration inline.  Exit codes: 0 success, 2 validation
error, 3 numerical failure.  ``CAUSALSYNTH_OUTDIR`` prefixes relative
output paths.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dgp
from .data import (
    ColumnSchema,
    Dataset,
    load_table,
    schema_from_json,
    validate_schema,
    write_table,
)
from .diagnostics import (
    dcr,
    run_loss_identity_suite,
    run_overlap_suite,
    run_pinsker_suite,
    run_sensitivity_suite,
    tstr,
)
from .errors import NumericalError, ValidationError
from .estimators import ESTIMATOR_NAMES, EstimatorConfig, estimate_all
from .generate import GENERATOR_KINDS, HybridConfig, fit_generator, full_generate, hybrid_generate
from .nuisance import fit_nuisances
from .positivity import (
    POSITIVITY_ESTIMATOR_CONFIG,
    PositivityScenario,
    run_positivity_experiment,
)
from .simengine import (
    DgpEnvironment,
    HybridEnvironment,
    MetricTable,
    SimConfig,
    build_reference,
    fidelity_compare,
    run_replications,
    sweep,
)

__all__ = ["main"]


def _out_path(raw: str) -> Path:
    path = Path(raw)
    outdir = os.environ.get("CAUSALSYNTH_OUTDIR")
    if outdir and not path.is_absolute():
        path = Path(outdir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_sidecar(path: Path, config: dict) -> None:
    meta = {"command": config.pop("_command"), "config": config}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")


def _resolved(args: argparse.Namespace, command: str) -> dict:
    resolved = {
        k: v
        for k, v in vars(args).items()
        if k not in ("func", "config", "command") and v is not None
    }
    resolved["_command"] = command
    return resolved


def _merge_config_file(args: argparse.Namespace, parser_defaults: dict) -> argparse.Namespace:
    """Config-file values fill in anything left at its parser default."""
    if not getattr(args, "config", None):
        return args
    try:
        file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config file {args.config}: {exc}") from exc
    if not isinstance(file_values, dict):
        raise ValidationError("config file must hold a JSON object")
    for key, value in file_values.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ValidationError(f"config file key {key!r} matches no option")
        if getattr(args, attr) == parser_defaults.get(attr):
            setattr(args, attr, value)
    return args


def _load_schema_or_infer(path: str, schema_path: str | None) -> tuple:
    if schema_path:
        return schema_from_json(Path(schema_path).read_text(encoding="utf-8"))
    # fall back to the canonical layout: last two columns are treatment, outcome
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    if len(header) < 3:
        raise ValidationError("cannot infer a schema from fewer than 3 columns")
    cols = []
    for j, name in enumerate(header):
        role = "covariate" if j < len(header) - 2 else ("treatment" if j == len(header) - 2 else "outcome")
        binary = bool(np.all(np.isin(rows[:, j], (0.0, 1.0))))
        kind = "binary" if binary else "continuous"
        if role == "treatment" and not binary:
            raise ValidationError(f"inferred treatment column {name!r} is not binary")
        cols.append(ColumnSchema(name, kind, role))
    return validate_schema(cols)


def _cmd_dgp_sample(args) -> int:
    ds = dgp.sample_dataset(dgp.BenchmarkConfig(args.regime, args.n, args.seed))
    out = _out_path(args.out)
    write_table(ds, out)
    _write_sidecar(out, _resolved(args, "dgp-sample"))
    print(f"wrote {ds.n} rows to {out}")
    return 0


def _cmd_dgp_truth(args) -> int:
    value = dgp.true_ate(args.mc_size, args.seed)
    print(f"{value:.6f}")
    return 0


def _cmd_generate(args) -> int:
    seed_schema = _load_schema_or_infer(args.seed_data, args.schema)
    seed_ds = load_table(args.seed_data, seed_schema)
    out = _out_path(args.out)
    if args.mode == "full":
        ds = full_generate(args.generator, seed_ds, args.n, args.seed)
    else:
        nuis = fit_nuisances(seed_ds, interactions=args.interactions)
        cov_kinds = tuple(c.kind for c in seed_ds.covariate_schema)
        if args.generator.startswith("file:"):
            gen = fit_generator(
                "external-file", None, cov_kinds,
                path=args.generator.removeprefix("file:"), schema=seed_schema,
            )
        elif args.generator in GENERATOR_KINDS:
            gen = fit_generator(args.generator, seed_ds.covariates, cov_kinds, sigma=args.sigma)
        else:
            raise ValidationError(f"unknown generator {args.generator!r}")
        ds = hybrid_generate(
            HybridConfig(gen, nuis, args.n, args.seed, args.outcome_mode, seed_schema)
        )
    write_table(ds, out)
    _write_sidecar(out, _resolved(args, "generate"))
    print(f"wrote {ds.n} synthetic rows to {out}")
    return 0


def _estimator_config(args) -> EstimatorConfig:
    return EstimatorConfig(
        ipw_flavor=args.ipw_flavor,
        truncation=(args.truncation_lo, args.truncation_hi),
    )


def _cmd_estimate(args) -> int:
    schema = _load_schema_or_infer(args.infile, args.schema)
    ds = load_table(args.infile, schema)
    nuis = fit_nuisances(
        ds,
        interactions=args.interactions,
        truncation=(args.truncation_lo, args.truncation_hi),
    )
    which = [w.strip().upper() for w in args.estimators.split(",") if w.strip()]
    records = [e.to_dict() for e in estimate_all(ds, nuis, which, _estimator_config(args))]
    payload = json.dumps({"config": _resolved(args, "estimate"), "estimates": records}, indent=2)
    if args.out:
        _out_path(args.out).write_text(payload, encoding="utf-8")
        print(f"wrote {len(records)} estimates to {args.out}")
    else:
        print(payload)
    return 0


def _cmd_diagnose(args) -> int:
    real_schema = _load_schema_or_infer(args.real, args.schema)
    real = load_table(args.real, real_schema)
    syn = load_table(args.syn, real_schema)
    report: dict = {"config": _resolved(args, "diagnose"), "dcr": dcr(real, syn).to_dict()}
    if args.test:
        test = load_table(args.test, real_schema)
        report["tstr_auc"] = tstr(syn, test)
        report["train_on_real_auc"] = tstr(real, test)
    payload = json.dumps(report, indent=2)
    if args.out:
        _out_path(args.out).write_text(payload, encoding="utf-8")
        print(f"wrote diagnostics to {args.out}")
    else:
        print(payload)
    return 0


def _cmd_check_theory(args) -> int:
    report = {
        "config": _resolved(args, "check-theory"),
        "sensitivity_bound": run_sensitivity_suite(args.instances, args.seed),
        "loss_identity": run_loss_identity_suite(args.instances, args.seed + 1),
        "contrast_bound": run_pinsker_suite(min(args.instances, 1000), args.seed + 2),
        "overlap_decomposition": run_overlap_suite(
            args.overlap_scenarios, args.overlap_mc_size, args.seed + 3
        ),
    }
    violations = sum(
        v.get("violations", 0) for k, v in report.items() if isinstance(v, dict)
    )
    payload = json.dumps(report, indent=2)
    if args.out:
        _out_path(args.out).write_text(payload, encoding="utf-8")
        print(f"wrote theory checks to {args.out}")
    else:
        print(payload)
    if violations:
        raise NumericalError(f"{violations} theory-check violations")
    return 0


def _scenario_from_dict(raw: dict) -> PositivityScenario:
    try:
        return PositivityScenario(**raw)
    except TypeError as exc:
        raise ValidationError(f"malformed scenario {raw.get('name', '?')!r}: {exc}") from exc


def _cmd_positivity(args) -> int:
    raw = json.loads(Path(args.scenarios).read_text(encoding="utf-8"))
    if not isinstance(raw, list) or not raw:
        raise ValidationError("scenario file must hold a nonempty JSON array")
    scenarios = [_scenario_from_dict(item) for item in raw]
    config = POSITIVITY_ESTIMATOR_CONFIG if args.ipw_flavor is None else EstimatorConfig(
        ipw_flavor=args.ipw_flavor
    )
    result = run_positivity_experiment(
        scenarios, args.reps, args.seed, n=args.n, estimator_config=config
    )
    out = _out_path(args.out)
    result.to_csv(out)
    meta = _resolved(args, "positivity")
    meta["result"] = result.to_dict()
    _write_sidecar(out, meta)
    print(f"wrote {len(scenarios)}x{len(result.estimators)} MSE table to {out}")
    return 0


def _cmd_simulate(args) -> int:
    sizes = tuple(int(s) for s in str(args.rep_size).split(",") if str(s).strip())
    reference_estimator = args.reference
    if args.env == "dgp-truth":
        env = DgpEnvironment(args.regime)
    else:
        if not args.seed_data:
            raise ValidationError("--env hybrid requires --seed-data")
        seed_schema = _load_schema_or_infer(args.seed_data, args.schema)
        seed_ds = load_table(args.seed_data, seed_schema)
        nuis = fit_nuisances(
            seed_ds,
            interactions=args.interactions,
            truncation=(args.truncation_lo, args.truncation_hi),
        )
        cov_kinds = tuple(c.kind for c in seed_ds.covariate_schema)
        gen = fit_generator(args.generator, seed_ds.covariates, cov_kinds, sigma=args.sigma)
        env = HybridEnvironment(gen, nuis, seed_schema)
        if reference_estimator == "truth-oracle":
            reference_estimator = "large-sample-TMLE"
    cfg = SimConfig(
        environment=env,
        reference_size=args.ref_size,
        replication_sizes=sizes,
        replications=args.reps,
        reference_estimator=reference_estimator,
        seed=args.seed,
        estimator_config=_estimator_config(args),
        nuisance_interactions=args.interactions,
        jobs=args.jobs,
    )
    reference = build_reference(cfg)
    tables = sweep(cfg, reference) if len(sizes) > 1 else (run_replications(cfg, reference),)
    payload = json.dumps(
        {
            "config": _resolved(args, "simulate"),
            "tables": [t.to_dict() for t in tables],
        },
        indent=2,
    )
    _out_path(args.out).write_text(payload, encoding="utf-8")
    print(f"wrote {len(tables)} metric table(s) to {args.out}")
    return 0


def _load_metric_table(path: str) -> MetricTable:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(raw, dict) and "tables" in raw:
        raw = raw["tables"][0]
    return MetricTable.from_dict(raw)


def _cmd_fidelity(args) -> int:
    report = fidelity_compare(_load_metric_table(args.real), _load_metric_table(args.syn))
    out = _out_path(args.out)
    report.to_csv(out)
    _write_sidecar(out, _resolved(args, "fidelity"))
    print(f"wrote fidelity report to {out}")
    return 0


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ipw-flavor", default="horvitz-thompson",
                   choices=("horvitz-thompson", "hajek"))
    p.add_argument("--truncation-lo", type=float, default=0.01)
    p.add_argument("--truncation-hi", type=float, default=0.99)
    p.add_argument("--interactions", action="store_true",
                   help="add treatment-by-covariate interactions to the outcome model")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalsynth",
        description="Causal synthetic-data workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dgp-sample", help="sample the benchmark process")
    p.add_argument("--regime", choices=dgp.REGIMES, default="observational")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_dgp_sample)

    p = sub.add_parser("dgp-truth", help="print the Monte Carlo true ATE")
    p.add_argument("--mc-size", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_dgp_truth)

    p = sub.add_parser("generate", help="hybrid or fully-joint synthesis")
    p.add_argument("--mode", choices=("hybrid", "full"), default="hybrid")
    p.add_argument("--generator", default="gaussian-copula",
                   help="generator kind, full-joint kind, or file:PATH for external covariates")
    p.add_argument("--seed-data", required=True)
    p.add_argument("--schema", help="schema JSON for the seed data")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outcome-mode", choices=("sample", "expected"), default="sample")
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--interactions", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("estimate", help="run ATE estimators on a table")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--schema")
    p.add_argument("--estimators", default=",".join(ESTIMATOR_NAMES))
    _add_estimator_flags(p)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("diagnose", help="DCR and TSTR diagnostics")
    p.add_argument("--real", required=True)
    p.add_argument("--syn", required=True)
    p.add_argument("--test")
    p.add_argument("--schema")
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("check-theory", help="randomized property suites")
    p.add_argument("--instances", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--overlap-scenarios", type=int, default=20)
    p.add_argument("--overlap-mc-size", type=int, default=100_000)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_check_theory)

    p = sub.add_parser("positivity", help="replicated pairing experiment grid")
    p.add_argument("--scenarios", required=True, help="JSON array of scenario objects")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--ipw-flavor", choices=("horvitz-thompson", "hajek"))
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_positivity)

    p = sub.add_parser("simulate", help="finite-sample simulation engine")
    p.add_argument("--env", choices=("dgp-truth", "hybrid"), default="dgp-truth")
    p.add_argument("--regime", choices=dgp.REGIMES, default="randomized")
    p.add_argument("--seed-data", help="seed table for the hybrid environment")
    p.add_argument("--schema", help="schema JSON for the seed table")
    p.add_argument("--generator", default="gaussian-copula",
                   help="covariate generator kind for the hybrid environment")
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--ref-size", type=int, default=50_000)
    p.add_argument("--rep-size", default="1000",
                   help="replication size or comma list for a sweep")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--reference", choices=("truth-oracle", "large-sample-TMLE"),
                   default="truth-oracle",
                   help="hybrid environments always use the TMLE reference")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    _add_estimator_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fidelity", help="real vs synthetic metric comparison")
    p.add_argument("--real", required=True)
    p.add_argument("--syn", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_fidelity)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    defaults = {
        a.dest: a.default
        for sp in parser._subparsers._group_actions
        for a in sp.choices[args.command]._actions
    }
    try:
        args = _merge_config_file(args, defaults)
        return args.func(args)
    except ValidationError as exc:
        json.dump({"error": {"kind": "validation", "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except NumericalError as exc:
        json.dump({"error": {"kind": "numerical", "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
