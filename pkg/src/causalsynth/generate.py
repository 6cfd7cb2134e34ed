"""Covariate generators, the hybrid synthesis pipeline, and a fully-joint
baseline for contrast experiments.

Hybrid synthesis draws covariates from a fitted generator, then treatments
from the fitted propensity model (truncated) and outcomes from the fitted
outcome model, so the conditional treatment/outcome structure of the
synthetic data comes from models trained directly on the seed data rather
than from the covariate generator.  The fully-joint baseline instead runs a
single generator over all columns including treatment and outcome, which is
exactly the construction that destroys treatment-effect structure when the
generator factorizes (see the independent-marginals case).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from .data import ColumnSchema, Dataset, load_table, validate_schema
from .errors import ValidationError
from .nuisance import NuisancePair, truncate
from .rng import bernoulli, generator, standard_normal

__all__ = [
    "GENERATOR_KINDS",
    "BootstrapJitterGenerator",
    "GaussianCopulaGenerator",
    "IndependentMarginalsGenerator",
    "ExternalFileGenerator",
    "HybridConfig",
    "fit_generator",
    "hybrid_generate",
    "full_generate",
]

GENERATOR_KINDS = (
    "bootstrap-jitter",
    "gaussian-copula",
    "independent-marginals",
    "external-file",
)
FULL_JOINT_KINDS = ("independent-marginals-joint", "gaussian-copula-joint")
DEFAULT_JITTER = 0.1


def _check_fit_input(values: np.ndarray, kinds: tuple[str, ...]) -> np.ndarray:
    values = np.atleast_2d(np.asarray(values, float))
    if values.shape[0] < 1:
        raise ValidationError("generator needs a nonempty seed sample")
    if values.shape[1] != len(kinds):
        raise ValidationError("column kinds do not match the seed sample width")
    return values


@dataclass(frozen=True)
class BootstrapJitterGenerator:
    """Row resampling with Gaussian noise on continuous columns.

    Noise standard deviation is ``sigma`` in units of each column's sample
    standard deviation; ``sigma = 0`` reproduces exact seed rows.
    """

    pool: np.ndarray
    sigma: float
    scales: np.ndarray
    kinds: tuple[str, ...]
    kind: str = "bootstrap-jitter"

    def sample(self, n: int, seed: int) -> np.ndarray:
        if n < 1:
            raise ValidationError("sample size must be >= 1")
        gen = generator(seed)
        rows = self.pool[gen.integers(0, self.pool.shape[0], n)].copy()
        if self.sigma > 0:
            for j, kind in enumerate(self.kinds):
                if kind == "continuous":
                    rows[:, j] += self.sigma * self.scales[j] * standard_normal(gen, n)
        return rows


def _nearest_correlation(corr: np.ndarray, floor: float = 1e-6) -> tuple[np.ndarray, bool]:
    """Eigenvalue clipping repair onto the positive-definite cone."""
    eigval, eigvec = np.linalg.eigh(corr)
    if eigval.min() >= floor:
        return corr, False
    clipped = eigvec @ np.diag(np.maximum(eigval, floor)) @ eigvec.T
    d = np.sqrt(np.diag(clipped))
    return clipped / np.outer(d, d), True


@dataclass(frozen=True)
class GaussianCopulaGenerator:
    """Normal-scores correlation with empirical-marginal inversion.

    Fitting ranks each column (average ranks on ties), maps ranks through
    the standard normal quantile, and estimates the correlation matrix of
    those scores; sampling draws correlated normals and inverts each
    empirical marginal by the inverted-CDF quantile, so sampled values are
    always observed seed values (binary columns stay 0/1).
    """

    marginals: tuple[np.ndarray, ...]
    cholesky: np.ndarray
    kinds: tuple[str, ...]
    repaired: bool
    kind: str = "gaussian-copula"

    def sample(self, n: int, seed: int) -> np.ndarray:
        if n < 1:
            raise ValidationError("sample size must be >= 1")
        gen = generator(seed)
        d = len(self.kinds)
        scores = standard_normal(gen, (n, d)) @ self.cholesky.T
        u = ndtr(scores)
        out = np.empty((n, d))
        for j, marginal in enumerate(self.marginals):
            m = marginal.shape[0]
            idx = np.minimum((u[:, j] * m).astype(int), m - 1)
            out[:, j] = marginal[idx]
        return out


@dataclass(frozen=True)
class IndependentMarginalsGenerator:
    """Each column resampled independently from its empirical marginal."""

    pool: np.ndarray
    kinds: tuple[str, ...]
    kind: str = "independent-marginals"

    def sample(self, n: int, seed: int) -> np.ndarray:
        if n < 1:
            raise ValidationError("sample size must be >= 1")
        gen = generator(seed)
        m, d = self.pool.shape
        out = np.empty((n, d))
        for j in range(d):
            out[:, j] = self.pool[gen.integers(0, m, n), j]
        return out


@dataclass(frozen=True)
class ExternalFileGenerator:
    """Covariate rows served from an externally produced exchange file."""

    pool: np.ndarray
    kinds: tuple[str, ...]
    path: str
    kind: str = "external-file"

    def sample(self, n: int, seed: int) -> np.ndarray:
        if n < 1:
            raise ValidationError("sample size must be >= 1")
        if n > self.pool.shape[0]:
            raise ValidationError(
                f"external pool has {self.pool.shape[0]} rows, {n} requested"
            )
        idx = generator(seed).permutation(self.pool.shape[0])[:n]
        return self.pool[idx]


def _fit_copula(values: np.ndarray, kinds: tuple[str, ...]) -> GaussianCopulaGenerator:
    n, d = values.shape
    scores = np.empty_like(values)
    from scipy.special import ndtri

    for j in range(d):
        scores[:, j] = ndtri(rankdata(values[:, j]) / (n + 1))
    if n == 1 or d == 1:
        corr = np.eye(d)
        repaired = False
    else:
        corr = np.corrcoef(scores, rowvar=False)
        corr = np.where(np.isfinite(corr), corr, 0.0)
        np.fill_diagonal(corr, 1.0)
        corr, repaired = _nearest_correlation(corr)
    chol = np.linalg.cholesky(corr)
    marginals = tuple(np.sort(values[:, j]) for j in range(d))
    return GaussianCopulaGenerator(marginals, chol, kinds, repaired)


def fit_generator(
    kind: str,
    seed_values: Optional[np.ndarray],
    kinds: tuple[str, ...],
    sigma: float = DEFAULT_JITTER,
    path: Optional[str] = None,
    schema: Optional[tuple[ColumnSchema, ...]] = None,
):
    """Fit a covariate generator of the requested kind.

    ``seed_values`` are the seed covariate rows (ignored for
    ``external-file``, which instead loads covariate columns from ``path``
    using ``schema`` to drop treatment/outcome columns when present).
    """
    if kind == "external-file":
        if path is None:
            raise ValidationError("external-file generator requires a path")
        if schema is None:
            raise ValidationError("external-file generator requires a schema")
        ds = load_table(path, schema)
        return ExternalFileGenerator(
            np.array(ds.covariates), tuple(c.kind for c in ds.covariate_schema), str(path)
        )
    values = _check_fit_input(seed_values, kinds)
    if kind == "bootstrap-jitter":
        scales = np.ones(values.shape[1])
        for j, k in enumerate(kinds):
            if k == "continuous" and values.shape[0] > 1:
                sd = values[:, j].std(ddof=1)
                scales[j] = sd if sd > 0 else 1.0
        if sigma < 0:
            raise ValidationError("jitter sigma must be nonnegative")
        return BootstrapJitterGenerator(values.copy(), float(sigma), scales, kinds)
    if kind == "gaussian-copula":
        return _fit_copula(values, kinds)
    if kind == "independent-marginals":
        return IndependentMarginalsGenerator(values.copy(), kinds)
    raise ValidationError(f"unknown generator kind {kind!r}")


@dataclass(frozen=True)
class HybridConfig:
    """Settings for one hybrid synthesis run.

    ``nuisances`` is a fitted :class:`NuisancePair` or an
    ``(outcome, propensity)`` callable pair (oracle functions, say); bare
    pairs use the default truncation bounds and a zero residual scale.
    ``outcome_mode='sample'`` draws outcomes from the conditional law
    (keeping the schema valid for downstream estimation); ``'expected'``
    stores the conditional mean itself, flagging the outcome column as
    continuous.
    """

    generator: object
    nuisances: object
    n: int
    seed: int
    outcome_mode: str = "sample"
    schema: tuple[ColumnSchema, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if self.outcome_mode not in ("sample", "expected"):
            raise ValidationError(f"unknown outcome mode {self.outcome_mode!r}")
        object.__setattr__(self, "schema", validate_schema(self.schema))


def _resolve_hybrid_nuisances(nuisances, d: int):
    if isinstance(nuisances, NuisancePair):
        if len(nuisances.covariate_names) not in (0, d):
            raise ValidationError("nuisance covariate width does not match the schema")
        return (
            nuisances.outcome_fn(),
            nuisances.propensity_fn(),
            nuisances.truncation,
            nuisances.outcome_residual_sd,
        )
    try:
        outcome, propensity = nuisances
    except (TypeError, ValueError) as exc:
        raise ValidationError(
            "nuisances must be a NuisancePair or an (outcome, propensity) pair"
        ) from exc
    return outcome, propensity, (0.01, 0.99), 0.0


def hybrid_generate(cfg: HybridConfig) -> Dataset:
    """Covariates from the generator; treatment and outcome from the
    separately fitted models."""
    schema = cfg.schema
    d = len(schema) - 2
    cov_kinds = tuple(c.kind for c in schema[:d])
    if getattr(cfg.generator, "kinds", cov_kinds) != cov_kinds:
        raise ValidationError("generator column kinds do not match the schema")
    outcome, propensity, bounds, residual_sd = _resolve_hybrid_nuisances(cfg.nuisances, d)

    W = cfg.generator.sample(cfg.n, cfg.seed)
    gen = generator(cfg.seed, 1)
    p_treat = truncate(np.asarray(propensity(W), float), *bounds)
    A = bernoulli(gen, p_treat)
    q = np.asarray(outcome(A, W), float)

    outcome_kind = schema[d + 1].kind
    if cfg.outcome_mode == "expected":
        Y = q
        out_schema = schema[: d + 1] + (
            ColumnSchema(schema[d + 1].name, "continuous", "outcome"),
        )
    elif outcome_kind == "binary":
        Y = bernoulli(gen, np.clip(q, 0.0, 1.0))
        out_schema = schema
    else:
        Y = q + residual_sd * standard_normal(gen, cfg.n)
        out_schema = schema
    return Dataset(out_schema, np.column_stack([W, A, Y]))


def full_generate(kind: str, seed_ds: Dataset, n: int, seed: int) -> Dataset:
    """Fully-joint baseline: one generator over all columns, treatment and
    outcome included, with binary columns thresholded at 0.5 afterwards."""
    if kind not in FULL_JOINT_KINDS:
        raise ValidationError(f"unknown full-joint kind {kind!r}")
    if n < 1:
        raise ValidationError("n must be >= 1")
    kinds = tuple(c.kind for c in seed_ds.schema)
    base = kind.removesuffix("-joint")
    gen_obj = fit_generator(base, seed_ds.rows, kinds)
    rows = gen_obj.sample(n, seed)
    for j, k in enumerate(kinds):
        if k == "binary":
            rows[:, j] = (rows[:, j] >= 0.5).astype(float)
    return Dataset(seed_ds.schema, rows)
