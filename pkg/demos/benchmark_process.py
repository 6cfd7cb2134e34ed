"""Tour of the benchmark data-generating process.

Samples both treatment regimes, shows why the observational regime has a
practical positivity problem, and pins the true effect with the Monte
Carlo oracle.
"""

import numpy as np

import causalsynth as cs
from causalsynth.dgp import sample_covariates, true_propensity
from causalsynth.rng import generator

print("=== benchmark process ===")
randomized = cs.sample_dataset(cs.BenchmarkConfig("randomized", 5000, 1))
observational = cs.sample_dataset(cs.BenchmarkConfig("observational", 5000, 1))
print(f"randomized treated fraction:    {randomized.treatment.mean():.3f}")
print(f"observational treated fraction: {observational.treatment.mean():.3f}")

W = sample_covariates(20_000, generator(2))
g = true_propensity(W)
threshold = cs.extreme_threshold(200)
quantiles = np.quantile(g, [0.05, 0.5, 0.95])
print("\npropensity quantiles (5/50/95%): " + ", ".join(f"{q:.2e}" for q in quantiles))
print(f"fraction below the n=200 extreme threshold ({threshold:.4f}): {(g < threshold).mean():.2f}")
print(f"fraction above 1 - threshold: {(1 - g < threshold).mean():.2f}")
print("-> most units live in regions where one treatment arm is practically absent")

psi = cs.true_ate(1_000_000, 2024)
print(f"\ntrue ATE (Monte Carlo, 1e6 draws): {psi:.4f}")

# the randomized regime identifies the effect by a simple difference in means
diff = (
    randomized.outcome[randomized.treatment == 1].mean()
    - randomized.outcome[randomized.treatment == 0].mean()
)
print(f"difference in means on the randomized sample: {diff:.4f}")
