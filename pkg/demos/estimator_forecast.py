"""Pre-analysis estimator forecasting with the simulation engine.

Builds a large reference population, then repeatedly subsamples
analysis-sized datasets (refitting nuisances each time) to forecast the
bias/variance profile of each estimator before touching real data.  The
sweep shows how the profile moves with sample size in a learned hybrid
environment with limited overlap.
"""

import numpy as np

import causalsynth as cs
from causalsynth.dgp import BENCHMARK_SCHEMA

# 1. randomized benchmark environment, truth-oracle reference
cfg = cs.SimConfig(
    cs.DgpEnvironment("randomized"),
    reference_size=50_000,
    replication_sizes=(1000,),
    replications=200,
    seed=42,
)
table = cs.run_replications(cfg)
print(f"randomized environment, n=1000, {table.replications} replications "
      f"(reference {table.reference_value:.4f}):")
print(f"{'estimator':10s} {'bias':>9s} {'variance':>10s} {'RMSE':>8s}")
for i, e in enumerate(table.estimators):
    print(f"{e:10s} {table.bias[i]:+9.4f} {table.variance[i]:10.6f} {table.rmse[i]:8.4f}")

# 2. hybrid environment learned from an observational seed; sweep sizes
seed_ds = cs.sample_dataset(cs.BenchmarkConfig("observational", 1000, 21))
gen = cs.fit_generator(
    "gaussian-copula", seed_ds.covariates, tuple(c.kind for c in BENCHMARK_SCHEMA[:6])
)
env = cs.HybridEnvironment(gen, cs.fit_nuisances(seed_ds, interactions=True), seed_ds.schema)
sweep_cfg = cs.SimConfig(
    env,
    reference_size=50_000,
    replication_sizes=(100, 250, 500, 1000),
    replications=200,
    reference_estimator="large-sample-TMLE",
    seed=21,
)
tables = cs.sweep(sweep_cfg)
print(f"\nhybrid observational environment (TMLE reference "
      f"{tables[0].reference_value:.4f}):")
print(f"{'n':>5s} " + " ".join(f"{e+'-bias':>11s}" for e in tables[0].estimators)
      + "  " + " ".join(f"{e+'-var':>10s}" for e in tables[0].estimators))
for t in tables:
    print(f"{t.replication_size:5d} "
          + " ".join(f"{b:+11.4f}" for b in t.bias)
          + "  " + " ".join(f"{v:10.5f}" for v in t.variance))

print(
    "\nWeighting is near-unbiased but pays in variance under weak overlap;\n"
    "the targeted update walks its bias down fastest as n grows. This is\n"
    "the forecast an analyst reads before committing to one estimator."
)
