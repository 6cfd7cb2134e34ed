"""Targeted synthetic pairing on small observational samples.

Replicates the pairing experiment at demo scale (25 replications): flag
extreme-propensity units, pair them with near-neighbor synthetic
covariates, assign outcomes from the truth oracle, and compare estimator
MSE against the untouched data.  Label flips show how outcome noise eats
the benefit.
"""

import numpy as np

import causalsynth as cs

oracle = cs.truth_oracle(500_000, 2024)

# one replication, unpacked step by step
ds = cs.sample_dataset(cs.BenchmarkConfig("observational", 200, 3))
models = cs.fit_nuisances(ds)
flagged = cs.detect_extreme(ds, models.propensity_fn())
print(f"n={ds.n}: threshold {flagged.threshold:.4f}, flagged {len(flagged)} units "
      f"({sum(t == 'lower' for t in flagged.tails)} rare-treated)")

pool = cs.fit_generator(
    "gaussian-copula", ds.covariates, tuple(c.kind for c in ds.covariate_schema)
).sample(5000, seed=9)
plan = cs.pair_synthetic(flagged, ds, pool, k=1)
distances = [p.distance for p in plan.pairs]
print(f"paired {len(plan.pairs)} synthetic rows, median distance {np.median(distances):.3f}")
plan = cs.assign_outcomes(plan, oracle.outcome_probability, flip_rate=0.0, seed=10)
augmented = cs.augment_dataset(ds, plan)
print(f"augmented dataset: {augmented.n} rows\n")

# the replicated grid
scenarios = [
    cs.PositivityScenario("Original", paired=False),
    cs.PositivityScenario("Pair Hybrid", outcome_source="oracle"),
    cs.PositivityScenario("Pair Self-Supervised", outcome_source="seed-fit"),
    cs.PositivityScenario("Pair Hybrid Flip 5%", flip_rate=0.05),
    cs.PositivityScenario("Pair Hybrid Flip 20%", flip_rate=0.20),
]
result = cs.run_positivity_experiment(scenarios, reps=25, seed=42, oracle=oracle)
print(f"MSE over {result.replications} replications (true ATE {result.reference_ate:.4f}):")
print(f"{'scenario':24s} " + " ".join(f"{e:>8s}" for e in result.estimators))
for i, name in enumerate(result.scenarios):
    print(f"{name:24s} " + " ".join(f"{v:8.4f}" for v in result.mse[i]))

print(
    "\nOracle-outcome pairing repairs the practical positivity problem;\n"
    "self-supervised outcomes (refit on the same 200 rows) help far less,\n"
    "and a 20% flip rate erodes most of the advantage."
)
