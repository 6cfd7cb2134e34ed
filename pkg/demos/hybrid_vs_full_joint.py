"""Hybrid generation preserves the treatment effect; fully-joint generation
with a factorized model destroys it, even when marginals look fine.

For one randomized seed dataset, builds four synthetic arms and prints the
privacy distance (mean DCR), predictive utility (TSTR AUC), and ATE error
of each, against the known true effect.
"""

import numpy as np

import causalsynth as cs
from causalsynth.dgp import BENCHMARK_SCHEMA

TRUE_ATE = cs.true_ate(1_000_000, 2024)
COV_KINDS = tuple(c.kind for c in BENCHMARK_SCHEMA[:6])

seed_ds = cs.sample_dataset(cs.BenchmarkConfig("randomized", 1000, 5))
test_ds = cs.sample_dataset(cs.BenchmarkConfig("randomized", 1000, 6))
nuisances = cs.fit_nuisances(seed_ds)

arms = {}
for kind in ("gaussian-copula", "bootstrap-jitter", "independent-marginals"):
    gen = cs.fit_generator(kind, seed_ds.covariates, COV_KINDS)
    arms[f"hybrid / {kind}"] = cs.hybrid_generate(
        cs.HybridConfig(gen, nuisances, 10_000, 7, schema=seed_ds.schema)
    )
arms["full joint / independent"] = cs.full_generate(
    "independent-marginals-joint", seed_ds, 10_000, 7
)

print(f"true ATE: {TRUE_ATE:.4f}\n")
print(f"{'arm':32s} {'mean DCR':>9s} {'TSTR AUC':>9s} {'IPW err':>8s} {'TMLE err':>9s}")
for name, syn in arms.items():
    refit = cs.fit_nuisances(syn)
    ipw = cs.estimate_all(syn, refit, ["IPW"])[0].psi
    tmle = cs.estimate_all(syn, refit, ["TMLE"])[0].psi
    report = cs.dcr(seed_ds, syn)
    auc = cs.tstr(syn, test_ds)
    print(
        f"{name:32s} {report.mean:9.3f} {auc:9.3f} "
        f"{abs(ipw - TRUE_ATE):8.3f} {abs(tmle - TRUE_ATE):9.3f}"
    )

print(
    "\nThe factorized full-joint arm keeps plausible marginals (and a decent\n"
    "DCR) while erasing the treatment-outcome link: its ATE error equals the\n"
    "whole effect. Hybrid arms stay within sampling noise of the truth."
)
