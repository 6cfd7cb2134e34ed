"""Average-treatment-effect estimators: plug-in outcome regression,
inverse-probability weighting, augmented IPW, and targeted maximum
likelihood, each with an efficient-influence-function diagnostic.

All estimators consume nuisances as plain callables: a propensity function
``g(W) -> P(A=1 | W)`` and an outcome function ``q(a, W) -> E[Y | A=a, W]``
(``a`` scalar or per-row vector).  Fitted :class:`~causalsynth.nuisance.
NuisancePair` objects expose such callables via ``propensity_fn()`` /
``outcome_fn()``; oracle functions may be passed directly.  Propensity
predictions are truncated inside each estimator according to the
:class:`EstimatorConfig`.

The targeting step fluctuates the initial outcome fit along the
inverse-weight covariate ``h(a, W) = a / g - (1 - a) / (1 - g)`` by solving
the one-dimensional offset-logistic score equation exactly, so the mean
influence function after the update is zero to solver precision (asserted
at 1e-8).  Bounded continuous outcomes are mapped onto [0, 1] before the
fluctuation and the estimate is mapped back.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, logit

from .data import Dataset
from .errors import NumericalError, ValidationError
from .nuisance import NuisancePair, truncate

__all__ = [
    "ESTIMATOR_NAMES",
    "ATEEstimate",
    "EstimatorConfig",
    "estimate_or",
    "estimate_ipw",
    "estimate_aipw",
    "estimate_tmle",
    "estimate_all",
    "eif_values",
    "ipw_from_weights",
]

ESTIMATOR_NAMES = ("OR", "IPW", "AIPW", "TMLE")
IPW_FLAVORS = ("horvitz-thompson", "hajek")
OUTCOME_FAMILIES = ("binary", "bounded-continuous")

INITIAL_FIT_CLAMP = (0.005, 0.995)
TMLE_SCORE_TOL = 1e-8


@dataclass(frozen=True)
class EstimatorConfig:
    """Shared estimator options, recorded in every estimate."""

    ipw_flavor: str = "horvitz-thompson"
    truncation: tuple[float, float] = (0.01, 0.99)
    outcome_family: str = "binary"
    outcome_bounds: Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        if self.ipw_flavor not in IPW_FLAVORS:
            raise ValidationError(f"unknown IPW flavor {self.ipw_flavor!r}")
        lo, hi = self.truncation
        if not (0.0 < lo < hi < 1.0):
            raise ValidationError(f"invalid truncation bounds ({lo}, {hi})")
        if self.outcome_family not in OUTCOME_FAMILIES:
            raise ValidationError(f"unknown outcome family {self.outcome_family!r}")
        if self.outcome_bounds is not None:
            a, b = self.outcome_bounds
            if not a < b:
                raise ValidationError("outcome bounds must satisfy a < b")

    def snapshot(self) -> dict:
        return {
            "ipw_flavor": self.ipw_flavor,
            "truncation": list(self.truncation),
            "outcome_family": self.outcome_family,
            "outcome_bounds": list(self.outcome_bounds) if self.outcome_bounds else None,
        }


DEFAULT_CONFIG = EstimatorConfig()


@dataclass(frozen=True)
class ATEEstimate:
    """One estimator's point estimate plus diagnostics."""

    psi: float
    estimator: str
    n: int
    mean_eif: float
    epsilon: float = 0.0
    config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not np.isfinite(self.mean_eif):
            raise ValidationError("mean_eif must be finite")
        if self.estimator == "TMLE" and abs(self.mean_eif) > TMLE_SCORE_TOL:
            raise NumericalError(
                f"TMLE mean influence function {self.mean_eif:.3e} exceeds "
                f"{TMLE_SCORE_TOL:.0e} after fluctuation"
            )

    def to_dict(self) -> dict:
        return {
            "psi": self.psi,
            "estimator": self.estimator,
            "n": self.n,
            "mean_eif": self.mean_eif,
            "epsilon": self.epsilon,
            "config": self.config,
        }


def _truncated_propensity(propensity: Callable, W: np.ndarray, config: EstimatorConfig):
    return truncate(np.asarray(propensity(W), float), *config.truncation)


def _inverse_weight_covariate(A, g):
    return A / g - (1.0 - A) / (1.0 - g)


def eif_values(
    ds: Dataset,
    outcome: Callable,
    propensity: Callable,
    psi: float,
    truncation: tuple[float, float] = DEFAULT_CONFIG.truncation,
) -> np.ndarray:
    """Per-row efficient influence function at the supplied nuisances.

    ``D = q(1, W) - q(0, W) + h(A, W) (Y - q(A, W)) - psi``.
    """
    W, A, Y = ds.covariates, ds.treatment, ds.outcome
    g = truncate(np.asarray(propensity(W), float), *truncation)
    q1 = np.asarray(outcome(1.0, W), float)
    q0 = np.asarray(outcome(0.0, W), float)
    qa = np.where(A == 1.0, q1, q0)
    return q1 - q0 + _inverse_weight_covariate(A, g) * (Y - qa) - psi


def estimate_or(
    ds: Dataset,
    outcome: Callable,
    propensity: Optional[Callable] = None,
    config: EstimatorConfig = DEFAULT_CONFIG,
) -> ATEEstimate:
    """Plug-in outcome-regression (G-computation) estimate.

    ``mean_eif`` is evaluated against the full influence function when a
    propensity function is supplied (a nonzero value signals an unsolved
    score equation); without one the residual term is dropped and the mean
    is zero by construction.
    """
    W = ds.covariates
    q1 = np.asarray(outcome(1.0, W), float)
    q0 = np.asarray(outcome(0.0, W), float)
    psi = float(np.mean(q1 - q0))
    if propensity is None:
        mean_eif = 0.0
    else:
        mean_eif = float(np.mean(eif_values(ds, outcome, propensity, psi, config.truncation)))
    return ATEEstimate(psi, "OR", ds.n, mean_eif, 0.0, config.snapshot() | {"n": ds.n})


def ipw_from_weights(
    A: np.ndarray,
    Y: np.ndarray,
    treated_weight: np.ndarray,
    control_weight: np.ndarray,
    flavor: str = "horvitz-thompson",
) -> float:
    """IPW point estimate from explicit per-row arm weights.

    Horvitz-Thompson averages ``A w1 Y - (1 - A) w0 Y`` directly; the Hajek
    variant normalizes each arm by its realized weight sum (and is therefore
    invariant to rescaling all weights by a constant).
    """
    A = np.asarray(A, float)
    Y = np.asarray(Y, float)
    w1 = A * np.asarray(treated_weight, float)
    w0 = (1.0 - A) * np.asarray(control_weight, float)
    if flavor == "horvitz-thompson":
        return float(np.mean(w1 * Y - w0 * Y))
    if flavor == "hajek":
        s1, s0 = w1.sum(), w0.sum()
        if s1 == 0.0 or s0 == 0.0:
            raise NumericalError("Hajek IPW undefined: a treatment arm is empty")
        return float((w1 @ Y) / s1 - (w0 @ Y) / s0)
    raise ValidationError(f"unknown IPW flavor {flavor!r}")


def estimate_ipw(
    ds: Dataset,
    propensity: Callable,
    flavor: Optional[str] = None,
    config: EstimatorConfig = DEFAULT_CONFIG,
) -> ATEEstimate:
    """Inverse-probability-weighting estimate with truncated propensities."""
    flavor = flavor or config.ipw_flavor
    W, A, Y = ds.covariates, ds.treatment, ds.outcome
    g = _truncated_propensity(propensity, W, config)
    psi = ipw_from_weights(A, Y, 1.0 / g, 1.0 / (1.0 - g), flavor)
    # influence function with a null outcome model
    mean_eif = float(np.mean(_inverse_weight_covariate(A, g) * Y) - psi)
    return ATEEstimate(
        psi, "IPW", ds.n, mean_eif, 0.0, config.snapshot() | {"flavor": flavor, "n": ds.n}
    )


def estimate_aipw(
    ds: Dataset,
    outcome: Callable,
    propensity: Callable,
    config: EstimatorConfig = DEFAULT_CONFIG,
) -> ATEEstimate:
    """Augmented IPW (doubly robust) estimate."""
    W, A, Y = ds.covariates, ds.treatment, ds.outcome
    g = _truncated_propensity(propensity, W, config)
    q1 = np.asarray(outcome(1.0, W), float)
    q0 = np.asarray(outcome(0.0, W), float)
    psi = float(
        np.mean(
            q1 - q0 + A * (Y - q1) / g - (1.0 - A) * (Y - q0) / (1.0 - g)
        )
    )
    mean_eif = float(np.mean(eif_values(ds, outcome, propensity, psi, config.truncation)))
    return ATEEstimate(psi, "AIPW", ds.n, mean_eif, 0.0, config.snapshot() | {"n": ds.n})


def _default_bounds(Y: np.ndarray) -> tuple[float, float]:
    lo, hi = float(Y.min()), float(Y.max())
    pad = 0.01 * (hi - lo)
    if pad == 0.0:
        pad = 0.01 if hi == lo else pad
    return lo - pad, hi + pad


def _solve_fluctuation(H: np.ndarray, Y: np.ndarray, qa: np.ndarray) -> float:
    """Root of the offset-logistic score in the fluctuation parameter.

    At eps = 0 the fluctuated fit is the initial fit by definition, so the
    score is evaluated on ``qa`` directly rather than through the
    logit/expit round trip (which is off by an ulp).
    """
    offset = logit(qa)

    def score(eps: float) -> float:
        p = qa if eps == 0.0 else expit(offset + eps * H)
        return float(np.mean(H * (Y - p)))

    s0 = score(0.0)
    if s0 == 0.0:
        return 0.0
    bracket = 1.0
    while score(-bracket) * score(bracket) > 0.0:
        bracket *= 2.0
        if bracket > 1024.0:
            raise NumericalError(
                "targeting fluctuation diverged (extreme weights); "
                "consider tighter propensity truncation"
            )
    eps = brentq(score, -bracket, bracket, xtol=1e-14, maxiter=200)
    return float(eps)


def estimate_tmle(
    ds: Dataset,
    outcome: Callable,
    propensity: Callable,
    config: EstimatorConfig = DEFAULT_CONFIG,
) -> ATEEstimate:
    """Targeted maximum likelihood estimate (single fluctuation).

    For ``outcome_family='bounded-continuous'`` the outcome and its model
    are mapped onto [0, 1] using ``config.outcome_bounds`` (default:
    observed min/max extended by 1% of the range) and the estimate is
    scaled back; ``mean_eif`` is reported on the unit-interval analysis
    scale, where the fluctuation drives it to zero.
    """
    W, A, Y = ds.covariates, ds.treatment, ds.outcome
    g = _truncated_propensity(propensity, W, config)
    q1 = np.asarray(outcome(1.0, W), float)
    q0 = np.asarray(outcome(0.0, W), float)

    if config.outcome_family == "bounded-continuous":
        lo, hi = config.outcome_bounds or _default_bounds(Y)
        if Y.min() < lo or Y.max() > hi:
            raise ValidationError("outcome bounds do not cover the observed range")
        span = hi - lo
        Ys = (Y - lo) / span
        q1 = (q1 - lo) / span
        q0 = (q0 - lo) / span
        used_bounds = (lo, hi)
    else:
        if not np.all(np.isin(Y, (0.0, 1.0))) and (Y.min() < 0.0 or Y.max() > 1.0):
            raise ValidationError("binary-family TMLE requires outcomes in [0, 1]")
        Ys = Y
        span = 1.0
        used_bounds = None

    clamp_lo, clamp_hi = INITIAL_FIT_CLAMP
    q1 = np.clip(q1, clamp_lo, clamp_hi)
    q0 = np.clip(q0, clamp_lo, clamp_hi)
    qa = np.where(A == 1.0, q1, q0)

    H = _inverse_weight_covariate(A, g)
    eps = _solve_fluctuation(H, Ys, qa)
    if eps == 0.0:
        q1_star, q0_star = q1, q0
    else:
        q1_star = expit(logit(q1) + eps / g)
        q0_star = expit(logit(q0) - eps / (1.0 - g))
    psi_scaled = float(np.mean(q1_star - q0_star))
    psi = psi_scaled * span

    qa_star = np.where(A == 1.0, q1_star, q0_star)
    mean_eif = float(np.mean(q1_star - q0_star + H * (Ys - qa_star)) - psi_scaled)
    snapshot = config.snapshot() | {"n": ds.n}
    if used_bounds is not None:
        snapshot["outcome_bounds"] = list(used_bounds)
    return ATEEstimate(psi, "TMLE", ds.n, mean_eif, eps, snapshot)


def _resolve_nuisances(nuisances) -> tuple[Callable, Callable]:
    if isinstance(nuisances, NuisancePair):
        return nuisances.outcome_fn(), nuisances.propensity_fn()
    try:
        outcome, propensity = nuisances
    except (TypeError, ValueError) as exc:
        raise ValidationError(
            "nuisances must be a NuisancePair or an (outcome, propensity) pair"
        ) from exc
    return outcome, propensity


def estimate_all(
    ds: Dataset,
    nuisances,
    which: Iterable[str] = ESTIMATOR_NAMES,
    config: EstimatorConfig = DEFAULT_CONFIG,
) -> list[ATEEstimate]:
    """Run several estimators against one set of nuisances.

    ``nuisances`` is a :class:`NuisancePair` or an ``(outcome, propensity)``
    callable pair.  When the pair carries truncation bounds they replace the
    config's bounds so the recorded configuration matches what was used.
    """
    outcome, propensity = _resolve_nuisances(nuisances)
    if isinstance(nuisances, NuisancePair) and nuisances.truncation != config.truncation:
        config = replace(config, truncation=nuisances.truncation)
    results = []
    for name in which:
        key = name.upper()
        if key == "OR":
            results.append(estimate_or(ds, outcome, propensity, config))
        elif key == "IPW":
            results.append(estimate_ipw(ds, propensity, config=config))
        elif key == "AIPW":
            results.append(estimate_aipw(ds, outcome, propensity, config))
        elif key == "TMLE":
            results.append(estimate_tmle(ds, outcome, propensity, config))
        else:
            raise ValidationError(f"unknown estimator {name!r}")
    return results
