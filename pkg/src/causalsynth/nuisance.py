"""Nuisance models: ridge-penalized GLMs for propensity and outcome, plus AUC.

Logistic models are fit by iteratively reweighted least squares (Newton
steps with step halving), minimizing the mean negative log-likelihood plus
``(ridge / 2) * ||coef||^2`` over the non-intercept coefficients.  The mean
scale makes the default ridge of 1e-4 essentially invisible on well-posed
problems while still taming separation in small, imbalanced samples.  The
penalized objective is non-increasing across iterations by construction
(step halving), and at convergence the penalized score is numerically zero.

Linear models use the closed-form penalized least-squares solution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .data import Dataset
from .errors import NumericalError, ValidationError

__all__ = [
    "GeneralizedLinearModel",
    "NuisancePair",
    "fit_glm",
    "predict_prob",
    "predict_mean",
    "truncate",
    "auc",
    "outcome_features",
    "fit_nuisances",
    "model_to_json",
    "model_from_json",
]

FAMILIES = ("logistic", "linear")
DEFAULT_RIDGE = 1e-4
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
DEFAULT_TRUNCATION = (0.01, 0.99)


@dataclass(frozen=True)
class GeneralizedLinearModel:
    """Fitted GLM; ``coefficients[0]`` is the intercept."""

    coefficients: np.ndarray
    family: str
    ridge: float
    converged: bool
    iterations: int
    feature_names: Optional[tuple[str, ...]] = None

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != len(self.coefficients) - 1:
            raise ValidationError(
                f"feature width {X.shape[1]} does not match model "
                f"({len(self.coefficients) - 1} features)"
            )
        return self.coefficients[0] + X @ self.coefficients[1:]


def _design(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, float))
    return np.column_stack([np.ones(X.shape[0]), X])


def _penalized_nll(Xd, y, beta, ridge, mask):
    eta = Xd @ beta
    nll = float(np.mean(np.logaddexp(0.0, eta) - y * eta))
    return nll + 0.5 * ridge * float(np.sum(mask * beta * beta))


def _solve_spd(H, g):
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "normal equations are rank-deficient; increase the ridge penalty"
        ) from exc
    z = np.linalg.solve(L, g)
    return np.linalg.solve(L.T, z)


def fit_glm(
    X: np.ndarray,
    y: np.ndarray,
    family: str = "logistic",
    ridge: float = DEFAULT_RIDGE,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    feature_names: Optional[Sequence[str]] = None,
) -> GeneralizedLinearModel:
    """Fit a ridge-penalized GLM (intercept unpenalized).

    Logistic fits stop when the largest coefficient change falls below
    ``tol`` or ``max_iter`` is reached; linear fits are closed form.
    """
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}")
    if ridge < 0:
        raise ValidationError("ridge penalty must be nonnegative")
    Xd = _design(X)
    y = np.asarray(y, float).ravel()
    if Xd.shape[0] != y.shape[0]:
        raise ValidationError("X and y row counts differ")
    n, p = Xd.shape
    names = tuple(feature_names) if feature_names is not None else None
    if names is not None and len(names) != p - 1:
        raise ValidationError("feature_names length does not match X width")
    mask = np.ones(p)
    mask[0] = 0.0

    if family == "linear":
        H = Xd.T @ Xd / n + ridge * np.diag(mask)
        g = Xd.T @ y / n
        beta = _solve_spd(H, g)
        return GeneralizedLinearModel(beta, family, float(ridge), True, 0, names)

    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValidationError("logistic family requires a 0/1 response")

    beta = np.zeros(p)
    obj = _penalized_nll(Xd, y, beta, ridge, mask)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        mu = expit(Xd @ beta)
        grad = Xd.T @ (y - mu) / n - ridge * mask * beta
        w = mu * (1.0 - mu)
        H = (Xd.T * w) @ Xd / n + ridge * np.diag(mask)
        if ridge == 0.0:
            # guard against a flat Hessian from saturated probabilities
            H = H + 0.0
        step = _solve_spd(H, grad)
        # step halving keeps the penalized objective non-increasing
        t = 1.0
        while True:
            candidate = beta + t * step
            cand_obj = _penalized_nll(Xd, y, candidate, ridge, mask)
            if cand_obj <= obj + 1e-15 or t < 1e-10:
                break
            t *= 0.5
        delta = float(np.max(np.abs(candidate - beta)))
        beta, obj = candidate, cand_obj
        if delta < tol:
            converged = True
            break
    return GeneralizedLinearModel(beta, "logistic", float(ridge), converged, iterations, names)


def predict_prob(model: GeneralizedLinearModel, X: np.ndarray) -> np.ndarray:
    """Probabilities from a logistic model."""
    if model.family != "logistic":
        raise ValidationError("predict_prob requires a logistic model")
    return expit(model.linear_predictor(X))


def predict_mean(model: GeneralizedLinearModel, X: np.ndarray) -> np.ndarray:
    """Conditional mean: probabilities for logistic, fitted values for linear."""
    eta = model.linear_predictor(X)
    return expit(eta) if model.family == "logistic" else eta


def truncate(p: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Clamp probabilities to [lo, hi]."""
    if not (0.0 < lo < hi < 1.0):
        raise ValidationError(f"invalid truncation bounds ({lo}, {hi})")
    return np.clip(np.asarray(p, float), lo, hi)


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC: fraction of (positive, negative) pairs correctly
    ordered, ties counted one half."""
    scores = np.asarray(scores, float).ravel()
    labels = np.asarray(labels, float).ravel()
    if scores.shape != labels.shape:
        raise ValidationError("scores and labels lengths differ")
    pos = labels == 1.0
    n_pos = int(pos.sum())
    n_neg = int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC requires both classes present")
    ranks = rankdata(scores)
    u = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def penalized_score(model: GeneralizedLinearModel, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of the penalized mean log-likelihood at the fitted coefficients."""
    Xd = _design(X)
    y = np.asarray(y, float).ravel()
    mask = np.ones(len(model.coefficients))
    mask[0] = 0.0
    if model.family == "logistic":
        resid = y - expit(Xd @ model.coefficients)
    else:
        resid = y - Xd @ model.coefficients
    return Xd.T @ resid / len(y) - model.ridge * mask * model.coefficients


def outcome_features(a, W: np.ndarray, interactions: bool = False) -> np.ndarray:
    """Design matrix (A, W) or (A, W, A*W) for the outcome model."""
    W = np.atleast_2d(np.asarray(W, float))
    a = np.asarray(a, float)
    if a.ndim == 0:
        a = np.full(W.shape[0], float(a))
    cols = [a[:, None], W]
    if interactions:
        cols.append(W * a[:, None])
    return np.column_stack(cols)


@dataclass(frozen=True)
class PropensityFunction:
    """Picklable callable: raw (untruncated) propensity predictions."""

    model: GeneralizedLinearModel

    def __call__(self, W: np.ndarray) -> np.ndarray:
        return predict_prob(self.model, W)


@dataclass(frozen=True)
class OutcomeFunction:
    """Picklable callable: outcome mean at (a, W) under the fitted model."""

    model: GeneralizedLinearModel
    interactions: bool = False

    def __call__(self, a, W: np.ndarray) -> np.ndarray:
        return predict_mean(self.model, outcome_features(a, W, self.interactions))


@dataclass(frozen=True)
class NuisancePair:
    """Fitted propensity and outcome models with truncation metadata."""

    propensity: GeneralizedLinearModel
    outcome: GeneralizedLinearModel
    truncation: tuple[float, float] = DEFAULT_TRUNCATION
    interactions: bool = False
    outcome_residual_sd: float = 0.0
    covariate_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        lo, hi = self.truncation
        if not (0.0 < lo < hi < 1.0):
            raise ValidationError(f"invalid truncation bounds ({lo}, {hi})")

    def propensity_fn(self) -> PropensityFunction:
        return PropensityFunction(self.propensity)

    def outcome_fn(self) -> OutcomeFunction:
        return OutcomeFunction(self.outcome, self.interactions)

    def truncated_propensity(self, W: np.ndarray) -> np.ndarray:
        return truncate(predict_prob(self.propensity, W), *self.truncation)


def fit_nuisances(
    ds: Dataset,
    interactions: bool = False,
    ridge: float = DEFAULT_RIDGE,
    truncation: tuple[float, float] = DEFAULT_TRUNCATION,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> NuisancePair:
    """Fit propensity (A ~ W) and outcome (Y ~ A, W) models on a dataset.

    The outcome family follows the outcome column kind: logistic for binary,
    linear otherwise.  For linear outcomes the residual standard deviation
    is recorded for use by the hybrid generator.
    """
    W, A, Y = ds.covariates, ds.treatment, ds.outcome
    cov_names = tuple(c.name for c in ds.covariate_schema)
    treatment_name = ds.schema[ds.d].name
    prop = fit_glm(W, A, "logistic", ridge, tol, max_iter, cov_names)
    feats = outcome_features(A, W, interactions)
    feat_names = (treatment_name,) + cov_names
    if interactions:
        feat_names = feat_names + tuple(f"{treatment_name}*{c}" for c in cov_names)
    outcome_kind = ds.schema[ds.d + 1].kind
    family = "logistic" if outcome_kind == "binary" else "linear"
    out = fit_glm(feats, Y, family, ridge, tol, max_iter, feat_names)
    resid_sd = 0.0
    if family == "linear":
        resid = Y - predict_mean(out, feats)
        resid_sd = float(resid.std(ddof=1)) if ds.n > 1 else 0.0
    return NuisancePair(prop, out, truncation, interactions, resid_sd, cov_names)


def model_to_json(model: GeneralizedLinearModel) -> str:
    return json.dumps(
        {
            "family": model.family,
            "ridge": model.ridge,
            "coefficients": [float(c) for c in model.coefficients],
            "feature_names": list(model.feature_names) if model.feature_names else None,
            "converged": model.converged,
            "iterations": model.iterations,
        },
        indent=2,
    )


def model_from_json(text: str) -> GeneralizedLinearModel:
    try:
        raw = json.loads(text)
        return GeneralizedLinearModel(
            np.asarray(raw["coefficients"], float),
            raw["family"],
            float(raw["ridge"]),
            bool(raw["converged"]),
            int(raw["iterations"]),
            tuple(raw["feature_names"]) if raw.get("feature_names") else None,
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"malformed model document: {exc}") from exc
