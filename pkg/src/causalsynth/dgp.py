"""Benchmark data-generating process with a known average treatment effect.

Six covariates, one binary treatment, one binary outcome.  The covariate
law mixes correlated binaries and a correlated Gaussian triple; the
observational treatment rule is a steep logistic in the covariates, which
produces severe practical positivity problems (most units have propensity
below 0.0134 or above 0.9866).  The randomized regime replaces that rule
with a fair coin.

Covariate law::

    V1, V2 ~ Bernoulli(0.5)
    P(V3 = 1 | V1, V2) = 0.3 + 0.35 (V1 + V2) / 2
    V4, V5 ~ N(0, 1)
    V6 = 0.5 V4 + 0.5 V5 + N(0, 1)

Treatment and outcome mechanisms::

    P(A = 1 | V) = expit(-30 + 16 V1 - 24 V2 + 12 V3 + 6 V4 - 10 V5 + 16 V6)
    shift(V)     = 2.0 + 0.5 sin V1 + 0.3 ln(|V2| + 1) - 0.2 V3^2
                   + 0.1 exp V4 - 0.3 tanh V5 + 0.2 cos V6
    P(Y = 1 | A, V) = expit(-0.5 + shift(V) A + 0.5 V1 + V2 - V3
                            + 0.2 V4 - 0.3 V5 + 0.1 V6)

``log`` is the natural logarithm.  The true ATE is the population mean of
``P(Y=1 | 1, V) - P(Y=1 | 0, V)``, about 0.4184, computed by Monte Carlo
in :func:`true_ate`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import ColumnSchema, Dataset, validate_schema
from .errors import ValidationError
from .rng import bernoulli, generator, standard_normal

__all__ = [
    "BENCHMARK_SCHEMA",
    "BenchmarkConfig",
    "TruthOracle",
    "true_propensity",
    "randomized_propensity",
    "log_odds_effect",
    "outcome_probability",
    "probability_contrast",
    "third_covariate_probability",
    "sample_covariates",
    "sample_dataset",
    "true_ate",
    "truth_oracle",
]

REGIMES = ("randomized", "observational")

BENCHMARK_SCHEMA = validate_schema(
    [
        ColumnSchema("W1", "binary", "covariate"),
        ColumnSchema("W2", "binary", "covariate"),
        ColumnSchema("W3", "binary", "covariate"),
        ColumnSchema("W4", "continuous", "covariate"),
        ColumnSchema("W5", "continuous", "covariate"),
        ColumnSchema("W6", "continuous", "covariate"),
        ColumnSchema("A", "binary", "treatment"),
        ColumnSchema("Y", "binary", "outcome"),
    ]
)


@dataclass(frozen=True)
class BenchmarkConfig:
    regime: str
    n: int
    seed: int

    def __post_init__(self) -> None:
        if self.regime not in REGIMES:
            raise ValidationError(f"unknown regime {self.regime!r}")
        if self.n < 1:
            raise ValidationError("n must be >= 1")


def third_covariate_probability(w1, w2):
    """P(V3 = 1 | V1, V2) = 0.3 + 0.35 (V1 + V2) / 2."""
    return 0.3 + 0.35 * (np.asarray(w1, float) + np.asarray(w2, float)) / 2.0


def true_propensity(W: np.ndarray) -> np.ndarray:
    """Observational treatment probability given covariates."""
    W = np.atleast_2d(np.asarray(W, float))
    return expit(
        -30.0
        + 16.0 * W[:, 0]
        - 24.0 * W[:, 1]
        + 12.0 * W[:, 2]
        + 6.0 * W[:, 3]
        - 10.0 * W[:, 4]
        + 16.0 * W[:, 5]
    )


def randomized_propensity(W: np.ndarray) -> np.ndarray:
    """Treatment probability under the randomized regime (a fair coin)."""
    return np.full(np.atleast_2d(np.asarray(W, float)).shape[0], 0.5)


def log_odds_effect(W: np.ndarray) -> np.ndarray:
    """Treatment coefficient inside the outcome logit (heterogeneous)."""
    W = np.atleast_2d(np.asarray(W, float))
    return (
        2.0
        + 0.5 * np.sin(W[:, 0])
        + 0.3 * np.log(np.abs(W[:, 1]) + 1.0)
        - 0.2 * W[:, 2] ** 2
        + 0.1 * np.exp(W[:, 3])
        - 0.3 * np.tanh(W[:, 4])
        + 0.2 * np.cos(W[:, 5])
    )


def outcome_probability(a, W: np.ndarray) -> np.ndarray:
    """P(Y = 1 | A = a, V = W); ``a`` is a scalar or a per-row vector."""
    W = np.atleast_2d(np.asarray(W, float))
    a = np.asarray(a, float)
    return expit(
        -0.5
        + log_odds_effect(W) * a
        + 0.5 * W[:, 0]
        + W[:, 1]
        - W[:, 2]
        + 0.2 * W[:, 3]
        - 0.3 * W[:, 4]
        + 0.1 * W[:, 5]
    )


def probability_contrast(W: np.ndarray) -> np.ndarray:
    """Per-unit effect on the probability scale."""
    return outcome_probability(1.0, W) - outcome_probability(0.0, W)


def sample_covariates(n: int, gen: np.random.Generator) -> np.ndarray:
    w1 = bernoulli(gen, np.full(n, 0.5))
    w2 = bernoulli(gen, np.full(n, 0.5))
    w3 = bernoulli(gen, third_covariate_probability(w1, w2))
    w4 = standard_normal(gen, n)
    w5 = standard_normal(gen, n)
    w6 = 0.5 * w4 + 0.5 * w5 + standard_normal(gen, n)
    return np.column_stack([w1, w2, w3, w4, w5, w6])


def sample_dataset(cfg: BenchmarkConfig) -> Dataset:
    """Draw a benchmark dataset under the configured treatment regime."""
    gen = generator(cfg.seed)
    W = sample_covariates(cfg.n, gen)
    if cfg.regime == "randomized":
        A = bernoulli(gen, np.full(cfg.n, 0.5))
    else:
        A = bernoulli(gen, true_propensity(W))
    Y = bernoulli(gen, outcome_probability(A, W))
    return Dataset(BENCHMARK_SCHEMA, np.column_stack([W, A, Y]))


def true_ate(mc_size: int, seed: int) -> float:
    """Monte Carlo true ATE: mean probability contrast over fresh covariates."""
    if mc_size < 1:
        raise ValidationError("mc_size must be >= 1")
    gen = generator(seed)
    W = sample_covariates(int(mc_size), gen)
    return float(np.mean(probability_contrast(W)))


@dataclass(frozen=True)
class TruthOracle:
    """True nuisance functions plus the Monte Carlo ATE they imply.

    ``ate`` is reproducible from the recorded ``mc_size`` and ``seed``.
    """

    propensity: callable
    log_odds_effect: callable
    outcome_probability: callable
    ate: float
    mc_size: int
    seed: int


def truth_oracle(mc_size: int = 1_000_000, seed: int = 2024) -> TruthOracle:
    return TruthOracle(
        propensity=true_propensity,
        log_odds_effect=log_odds_effect,
        outcome_probability=outcome_probability,
        ate=true_ate(mc_size, seed),
        mc_size=int(mc_size),
        seed=int(seed),
    )
