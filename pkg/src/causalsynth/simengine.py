"""Pre-analysis simulation engine for finite-sample estimator evaluation.

The engine builds one large reference dataset from a configured environment
(the benchmark truth, or a hybrid synthetic environment learned from a seed
dataset), pins a high-precision reference effect, and then repeatedly
subsamples replication-sized datasets, refitting nuisances inside every
replication so that the measured error includes nuisance estimation noise.
It reports per-estimator bias, variance, RMSE, and MSE against the
reference, using the population-variance convention so that
``MSE = bias^2 + variance`` holds exactly.

Replications use seeds derived from ``(seed, replication index)`` and the
reduction is ordered by index, so parallel and serial runs produce
byte-identical tables.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import dgp
from .data import Dataset, subsample
from .errors import NumericalError, ValidationError
from .estimators import ESTIMATOR_NAMES, EstimatorConfig, estimate_all, estimate_tmle
from .generate import HybridConfig, hybrid_generate
from .nuisance import NuisancePair, fit_nuisances
from .rng import generator

__all__ = [
    "DgpEnvironment",
    "HybridEnvironment",
    "SimConfig",
    "MetricTable",
    "FidelityReport",
    "build_reference",
    "run_replications",
    "sweep",
    "fidelity_compare",
]

REFERENCE_ESTIMATORS = ("truth-oracle", "large-sample-TMLE")


@dataclass(frozen=True)
class DgpEnvironment:
    """Reference data drawn from the benchmark truth."""

    regime: str = "observational"

    def __post_init__(self) -> None:
        if self.regime not in dgp.REGIMES:
            raise ValidationError(f"unknown regime {self.regime!r}")


@dataclass(frozen=True)
class HybridEnvironment:
    """Reference data drawn from a learned hybrid generator.

    ``generator`` and ``nuisances`` are the fitted pieces of the hybrid
    pipeline; the schema describes the emitted columns.
    """

    generator: object
    nuisances: NuisancePair
    schema: tuple
    outcome_mode: str = "sample"


Environment = Union[DgpEnvironment, HybridEnvironment]


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; defaults follow the reference protocol
    (50,000-row reference, 1,000-row replications)."""

    environment: Environment
    reference_size: int = 50_000
    replication_sizes: tuple[int, ...] = (1_000,)
    replications: int = 500
    reference_estimator: str = "truth-oracle"
    estimators: tuple[str, ...] = ESTIMATOR_NAMES
    seed: int = 0
    estimator_config: EstimatorConfig = field(default_factory=EstimatorConfig)
    nuisance_interactions: bool = True
    nuisance_mode: str = "refit"
    oracle_mc_size: int = 1_000_000
    jobs: int = 1

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.replication_sizes)
        object.__setattr__(self, "replication_sizes", sizes)
        object.__setattr__(self, "estimators", tuple(e.upper() for e in self.estimators))
        if self.replications < 2:
            raise ValidationError("replications must be >= 2")
        if not sizes:
            raise ValidationError("at least one replication size required")
        if any(s < 1 for s in sizes):
            raise ValidationError("replication sizes must be >= 1")
        if self.reference_size < max(sizes):
            raise ValidationError("reference size must cover the largest replication")
        if self.reference_estimator not in REFERENCE_ESTIMATORS:
            raise ValidationError(
                f"unknown reference estimator {self.reference_estimator!r}"
            )
        if isinstance(self.environment, HybridEnvironment) and (
            self.reference_estimator == "truth-oracle"
        ):
            raise ValidationError(
                "hybrid environments need the large-sample-TMLE reference; "
                "the truth oracle only describes the benchmark process"
            )
        if self.nuisance_mode not in ("refit", "oracle-truth"):
            raise ValidationError(f"unknown nuisance mode {self.nuisance_mode!r}")
        if self.nuisance_mode == "oracle-truth" and not isinstance(
            self.environment, DgpEnvironment
        ):
            raise ValidationError(
                "oracle-truth nuisances describe the benchmark process only"
            )
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")


@dataclass(frozen=True)
class MetricTable:
    """Per-estimator finite-sample metrics against the reference effect."""

    estimators: tuple[str, ...]
    bias: np.ndarray
    variance: np.ndarray
    rmse: np.ndarray
    mse: np.ndarray
    replications: int
    failures: np.ndarray
    reference_value: float
    replication_size: int
    config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, arr in (("rmse", self.rmse), ("mse", self.mse)):
            if np.any(np.asarray(arr) < 0):
                raise ValidationError(f"{name} must be nonnegative")
        if np.max(np.abs(self.rmse - np.sqrt(self.mse))) > 1e-12:
            raise ValidationError("RMSE must equal sqrt(MSE)")
        if np.max(np.abs(self.mse - (self.bias**2 + self.variance))) > 1e-12:
            raise ValidationError("MSE must decompose as bias^2 + variance")

    def metric(self, estimator: str, name: str) -> float:
        i = self.estimators.index(estimator.upper())
        return float(getattr(self, name)[i])

    def to_dict(self) -> dict:
        return {
            "estimators": list(self.estimators),
            "bias": self.bias.tolist(),
            "variance": self.variance.tolist(),
            "rmse": self.rmse.tolist(),
            "mse": self.mse.tolist(),
            "replications": self.replications,
            "failures": self.failures.tolist(),
            "reference_value": self.reference_value,
            "replication_size": self.replication_size,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, raw: dict) -> "MetricTable":
        try:
            return cls(
                tuple(raw["estimators"]),
                np.asarray(raw["bias"], float),
                np.asarray(raw["variance"], float),
                np.asarray(raw["rmse"], float),
                np.asarray(raw["mse"], float),
                int(raw["replications"]),
                np.asarray(raw["failures"], int),
                float(raw["reference_value"]),
                int(raw["replication_size"]),
                dict(raw.get("config", {})),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed metric table: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "MetricTable":
        return cls.from_dict(json.loads(text))


def build_reference(cfg: SimConfig) -> tuple[Dataset, float]:
    """Materialize the reference dataset and its reference effect.

    Truth environments may pin the reference with the Monte Carlo oracle;
    hybrid environments use TMLE on the full reference sample.
    """
    env = cfg.environment
    if isinstance(env, DgpEnvironment):
        ds = dgp.sample_dataset(
            dgp.BenchmarkConfig(env.regime, cfg.reference_size, int(generator(cfg.seed, 0).integers(2**31)))
        )
    else:
        ds = hybrid_generate(
            HybridConfig(
                env.generator,
                env.nuisances,
                cfg.reference_size,
                int(generator(cfg.seed, 0).integers(2**31)),
                env.outcome_mode,
                tuple(env.schema),
            )
        )
    if cfg.reference_estimator == "truth-oracle":
        psi_ref = dgp.true_ate(cfg.oracle_mc_size, cfg.seed)
    else:
        nuis = fit_nuisances(
            ds,
            interactions=cfg.nuisance_interactions,
            truncation=cfg.estimator_config.truncation,
        )
        try:
            psi_ref = estimate_tmle(
                ds, nuis.outcome_fn(), nuis.propensity_fn(), cfg.estimator_config
            ).psi
        except NumericalError as exc:
            raise NumericalError(f"reference TMLE failed: {exc}") from exc
    return ds, float(psi_ref)


def _oracle_nuisances(regime: str):
    propensity = (
        dgp.randomized_propensity if regime == "randomized" else dgp.true_propensity
    )
    return (dgp.outcome_probability, propensity)


def _replicate(
    reference: Dataset,
    rep: int,
    size: int,
    estimators: tuple[str, ...],
    config: EstimatorConfig,
    interactions: bool,
    nuisances_spec,
    seed: int,
) -> list[float]:
    """One subsample, nuisance fit (or oracle lookup), and estimator pass.

    ``nuisances_spec`` is "refit" or a fixed (outcome, propensity) pair.
    Returns NaN for estimators that fail in this replication.
    """
    sub = subsample(reference, size, int(generator(seed, 1, rep).integers(2**31)))
    if nuisances_spec == "refit":
        try:
            nuisances = fit_nuisances(
                sub, interactions=interactions, truncation=config.truncation
            )
        except Exception:
            return [float("nan")] * len(estimators)
    else:
        nuisances = nuisances_spec
    values: list[float] = []
    for name in estimators:
        try:
            values.append(estimate_all(sub, nuisances, [name], config)[0].psi)
        except Exception:
            values.append(float("nan"))
    return values


def _nuisances_spec(cfg: "SimConfig"):
    if cfg.nuisance_mode == "refit":
        return "refit"
    return _oracle_nuisances(cfg.environment.regime)


_WORKER: dict = {}


def _init_worker(rows, schema, estimators, config, interactions, nuisances_spec, seed) -> None:
    _WORKER["reference"] = Dataset(schema, rows)
    _WORKER["estimators"] = estimators
    _WORKER["config"] = config
    _WORKER["interactions"] = interactions
    _WORKER["nuisances_spec"] = nuisances_spec
    _WORKER["seed"] = seed


def _worker_replicate(args: tuple[int, int]) -> tuple[int, list[float]]:
    rep, size = args
    return rep, _replicate(
        _WORKER["reference"],
        rep,
        size,
        _WORKER["estimators"],
        _WORKER["config"],
        _WORKER["interactions"],
        _WORKER["nuisances_spec"],
        _WORKER["seed"],
    )


def _metric_table(
    estimates: np.ndarray, psi_ref: float, size: int, cfg: SimConfig
) -> MetricTable:
    reps, n_est = estimates.shape
    bias = np.empty(n_est)
    variance = np.empty(n_est)
    mse = np.empty(n_est)
    failures = np.empty(n_est, int)
    for j in range(n_est):
        col = estimates[:, j]
        ok = col[np.isfinite(col)]
        failures[j] = reps - ok.shape[0]
        if ok.shape[0] == 0:
            bias[j] = variance[j] = mse[j] = np.nan
            continue
        err = ok - psi_ref
        bias[j] = err.mean()
        variance[j] = np.mean((err - err.mean()) ** 2)
        mse[j] = bias[j] ** 2 + variance[j]
    rmse = np.sqrt(mse)
    return MetricTable(
        cfg.estimators,
        bias,
        variance,
        rmse,
        mse,
        reps,
        failures,
        float(psi_ref),
        int(size),
        config={
            "environment": type(cfg.environment).__name__,
            "regime": getattr(cfg.environment, "regime", None),
            "reference_size": cfg.reference_size,
            "reference_estimator": cfg.reference_estimator,
            "seed": cfg.seed,
            "ipw_flavor": cfg.estimator_config.ipw_flavor,
            "truncation": list(cfg.estimator_config.truncation),
            "interactions": cfg.nuisance_interactions,
            "nuisance_mode": cfg.nuisance_mode,
        },
    )


def run_replications(
    cfg: SimConfig,
    reference: Optional[tuple[Dataset, float]] = None,
    size: Optional[int] = None,
) -> MetricTable:
    """Replicated finite-sample metrics at one replication size.

    ``reference`` can be passed to reuse an already built reference pair;
    ``size`` defaults to the first configured replication size.
    """
    ds, psi_ref = reference or build_reference(cfg)
    size = int(size or cfg.replication_sizes[0])
    if size > ds.n:
        raise ValidationError("replication size exceeds the reference size")
    spec = _nuisances_spec(cfg)
    estimates = np.full((cfg.replications, len(cfg.estimators)), np.nan)
    if cfg.jobs == 1:
        for rep in range(cfg.replications):
            estimates[rep] = _replicate(
                ds, rep, size, cfg.estimators, cfg.estimator_config,
                cfg.nuisance_interactions, spec, cfg.seed,
            )
    else:
        init_args = (
            ds.rows, ds.schema, cfg.estimators, cfg.estimator_config,
            cfg.nuisance_interactions, spec, cfg.seed,
        )
        with ProcessPoolExecutor(
            max_workers=cfg.jobs, initializer=_init_worker, initargs=init_args
        ) as pool:
            tasks = [(rep, size) for rep in range(cfg.replications)]
            for rep, values in pool.map(_worker_replicate, tasks, chunksize=8):
                estimates[rep] = values
    return _metric_table(estimates, psi_ref, size, cfg)


def sweep(cfg: SimConfig, reference: Optional[tuple[Dataset, float]] = None) -> tuple[MetricTable, ...]:
    """One metric table per configured replication size (ascending order).

    Replication seeds depend only on the replication index, so the sweep at
    a single size reproduces :func:`run_replications` exactly and draws are
    nested across sizes (common random numbers).
    """
    sizes = cfg.replication_sizes
    if list(sizes) != sorted(sizes):
        raise ValidationError("replication sizes must be sorted ascending")
    ref = reference or build_reference(cfg)
    return tuple(run_replications(cfg, ref, size) for size in sizes)


@dataclass(frozen=True)
class FidelityReport:
    """Side-by-side real vs synthetic finite-sample behavior."""

    estimators: tuple[str, ...]
    sign_correct: tuple[bool, ...]
    real: MetricTable
    synthetic: MetricTable

    def to_csv(self, path) -> None:
        header = (
            "estimator,sign_correct,real_bias,syn_bias,real_var,syn_var,"
            "real_rmse,syn_rmse,real_mse,syn_mse"
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for i, name in enumerate(self.estimators):
                fh.write(
                    f"{name},{'yes' if self.sign_correct[i] else 'no'},"
                    f"{self.real.bias[i]:.6g},{self.synthetic.bias[i]:.6g},"
                    f"{self.real.variance[i]:.6g},{self.synthetic.variance[i]:.6g},"
                    f"{self.real.rmse[i]:.6g},{self.synthetic.rmse[i]:.6g},"
                    f"{self.real.mse[i]:.6g},{self.synthetic.mse[i]:.6g}\n"
                )

    def to_dict(self) -> dict:
        return {
            "estimators": list(self.estimators),
            "sign_correct": list(self.sign_correct),
            "real": self.real.to_dict(),
            "synthetic": self.synthetic.to_dict(),
        }


def fidelity_compare(real: MetricTable, synthetic: MetricTable) -> FidelityReport:
    """Compare synthetic finite-sample behavior against a real benchmark.

    Bias signs count as matching when they agree or either bias is zero.
    """
    if real.estimators != synthetic.estimators:
        raise ValidationError("metric tables cover different estimator sets")
    signs = tuple(
        bool(rb * sb > 0 or rb == 0 or sb == 0)
        for rb, sb in zip(real.bias, synthetic.bias)
    )
    return FidelityReport(real.estimators, signs, real, synthetic)
