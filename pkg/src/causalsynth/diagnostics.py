"""Data-quality diagnostics and executable versions of the theory results.

Two families live here.  The first is empirical: distance-to-closest-record
(DCR) privacy/similarity summaries and train-on-synthetic-test-on-real
(TSTR) predictive utility.  The second is analytic: finite-support
evaluators for the ATE sensitivity bound, the joint-reconstruction loss
identity with its Pinsker-style contrast bound, and the overlap-support
error decomposition, each paired with a randomized property suite that
hunts for counterexamples.

Finite-support convention: densities are given as probability vectors over
the support points, and the covariate-density term of the sensitivity bound
is the L2 norm of the density difference with respect to the *uniform
reference measure* on the support, ``sqrt(m * sum((p - p*)^2))`` for ``m``
points.  That is the exact discrete analogue of the continuous statement
(whose reference measure has total mass one) and is what makes the bound a
theorem rather than a heuristic on discrete instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .data import Dataset, Standardizer, fit_standardizer
from .errors import ValidationError
from .estimators import EstimatorConfig
from .nuisance import auc, fit_glm, outcome_features, predict_prob
from .rng import generator

__all__ = [
    "DCRReport",
    "dcr",
    "tstr",
    "BoundReport",
    "ate_sensitivity_check",
    "LossDecomposition",
    "joint_loss_identity",
    "bernoulli_kl",
    "outcome_kl_loss",
    "pinsker_contrast_bound",
    "contrast_l2",
    "OverlapDecomposition",
    "overlap_decomposition",
    "run_sensitivity_suite",
    "run_loss_identity_suite",
    "run_pinsker_suite",
    "run_overlap_suite",
]

KL_CLAMP = 1e-9


# ---------------------------------------------------------------------------
# distance to closest record
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DCRReport:
    """Per-synthetic-row minimum distances to the real data."""

    distances: np.ndarray
    mean: float
    q05: float
    q50: float
    q95: float
    standardizer: Standardizer

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "q05": self.q05,
            "q50": self.q50,
            "q95": self.q95,
            "n_synthetic": int(self.distances.shape[0]),
        }


def dcr(real: Dataset, synthetic: Dataset, std: Optional[Standardizer] = None) -> DCRReport:
    """Exact nearest-neighbor Euclidean distances on standardized covariates.

    ``std`` defaults to a standardizer fitted on the real data.
    """
    if real.d != synthetic.d:
        raise ValidationError("covariate widths differ between real and synthetic")
    std = std or fit_standardizer(real)
    real_w = std.apply(real.covariates)
    syn_w = std.apply(synthetic.covariates)
    distances, _ = cKDTree(real_w).query(syn_w, k=1)
    distances = np.asarray(distances, float)
    q05, q50, q95 = np.quantile(distances, (0.05, 0.50, 0.95))
    return DCRReport(distances, float(distances.mean()), float(q05), float(q50), float(q95), std)


def tstr(
    synthetic: Dataset,
    real_test: Dataset,
    interactions: bool = False,
    ridge: float = 1e-4,
) -> float:
    """Train-on-synthetic-test-on-real AUC.

    Fits a logistic model of the outcome on (treatment, covariates) using
    the synthetic rows, scores the real test rows, and returns the AUC of
    those scores against the real outcomes.
    """
    for name, ds in (("synthetic", synthetic), ("real test", real_test)):
        y = ds.outcome
        if not np.all(np.isin(y, (0.0, 1.0))) or len(np.unique(y)) < 2:
            raise ValidationError(f"{name} outcome must be binary with both classes")
    model = fit_glm(
        outcome_features(synthetic.treatment, synthetic.covariates, interactions),
        synthetic.outcome,
        "logistic",
        ridge,
    )
    scores = predict_prob(
        model, outcome_features(real_test.treatment, real_test.covariates, interactions)
    )
    return auc(scores, real_test.outcome)


# ---------------------------------------------------------------------------
# ATE sensitivity bound on finite supports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """Both sides of the sensitivity bound, validated at construction."""

    lhs: float
    covariate_term: float
    contrast_term: float

    def __post_init__(self) -> None:
        if self.lhs > self.covariate_term + self.contrast_term + 1e-12:
            raise ValidationError(
                f"sensitivity bound violated: {self.lhs} > "
                f"{self.covariate_term} + {self.contrast_term}"
            )

    @property
    def rhs(self) -> float:
        return self.covariate_term + self.contrast_term

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def _check_density(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, float).ravel()
    if np.any(p < -1e-12):
        raise ValidationError(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValidationError(f"{name} does not sum to 1 (tolerance 1e-9)")
    return p


def ate_sensitivity_check(
    p: np.ndarray,
    p_star: np.ndarray,
    delta: np.ndarray,
    delta_star: np.ndarray,
) -> BoundReport:
    """Evaluate the ATE sensitivity bound on a common finite support.

    ``p``/``p_star`` are probability vectors; ``delta``/``delta_star`` are
    treatment-effect contrasts with magnitude at most 1 (contrasts built
    from outcomes in [0, 1]).  Returns both sides; construction asserts the
    inequality lhs <= covariate term + contrast term.
    """
    p = _check_density(p, "p")
    p_star = _check_density(p_star, "p_star")
    delta = np.asarray(delta, float).ravel()
    delta_star = np.asarray(delta_star, float).ravel()
    m = p.shape[0]
    if not (p_star.shape[0] == delta.shape[0] == delta_star.shape[0] == m):
        raise ValidationError("all inputs must share one support")
    if np.any(np.abs(delta) > 1.0 + 1e-12) or np.any(np.abs(delta_star) > 1.0 + 1e-12):
        raise ValidationError("contrast magnitudes must not exceed 1")
    lhs = abs(float(p @ delta - p_star @ delta_star))
    covariate_term = float(np.sqrt(m * np.sum((p - p_star) ** 2)))
    contrast_term = float(np.sqrt(np.sum(p_star * (delta - delta_star) ** 2)))
    return BoundReport(lhs, covariate_term, contrast_term)


# ---------------------------------------------------------------------------
# joint-reconstruction loss identity and contrast bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LossDecomposition:
    """Joint reconstruction loss split into covariate and outcome shares."""

    joint_loss: float
    covariate_loss: float
    outcome_loss: float
    covariate_count: int

    def __post_init__(self) -> None:
        if min(self.joint_loss, self.covariate_loss, self.outcome_loss) < 0:
            raise ValidationError("losses must be nonnegative")
        if self.covariate_count < 1:
            raise ValidationError("covariate count must be >= 1")
        expected = self.covariate_loss + self.outcome_loss / (self.covariate_count + 1)
        if abs(self.joint_loss - expected) > 1e-12:
            raise ValidationError(
                "joint loss does not equal covariate loss + outcome loss / (d + 1)"
            )

    @classmethod
    def from_components(
        cls, covariate_loss: float, outcome_loss: float, covariate_count: int
    ) -> "LossDecomposition":
        joint = covariate_loss + outcome_loss / (covariate_count + 1)
        return cls(joint, covariate_loss, outcome_loss, covariate_count)


def joint_loss_identity(
    joint_f: float, joint_g: float, cov_f: float, cov_g: float, d: int
) -> float:
    """Outcome-loss difference implied by joint and covariate losses.

    Returns ``(d + 1) * [joint_f - joint_g + cov_g - cov_f]``, which equals
    the directly computed outcome-loss difference of the two models.
    """
    if min(joint_f, joint_g, cov_f, cov_g) < 0:
        raise ValidationError("losses must be nonnegative")
    if d < 1:
        raise ValidationError("covariate count must be >= 1")
    return (d + 1) * (joint_f - joint_g + cov_g - cov_f)


def bernoulli_kl(p_true, p_model) -> np.ndarray:
    """KL(Bern(p_true) || Bern(p_model)) with probabilities clamped away
    from 0 and 1 (at 1e-9) so saturated models stay finite."""
    p = np.clip(np.asarray(p_true, float), KL_CLAMP, 1.0 - KL_CLAMP)
    q = np.clip(np.asarray(p_model, float), KL_CLAMP, 1.0 - KL_CLAMP)
    return p * np.log(p / q) + (1.0 - p) * np.log((1.0 - p) / (1.0 - q))


def outcome_kl_loss(
    q_model: np.ndarray, q_true: np.ndarray, weights: Optional[np.ndarray] = None
) -> float:
    """Balanced conditional outcome loss: expected KL summed over both arms.

    ``q_model`` and ``q_true`` are ``(points, 2)`` tables of outcome
    probabilities per treatment arm; ``weights`` is a probability vector
    over the points (uniform when omitted).
    """
    q_model = np.atleast_2d(np.asarray(q_model, float))
    q_true = np.atleast_2d(np.asarray(q_true, float))
    if q_model.shape != q_true.shape or q_model.shape[1] != 2:
        raise ValidationError("arm tables must share a (points, 2) shape")
    kl = bernoulli_kl(q_true, q_model).sum(axis=1)
    if weights is None:
        return float(kl.mean())
    weights = _check_density(weights, "weights")
    return float(weights @ kl)


def pinsker_contrast_bound(outcome_loss: float) -> float:
    """Contrast-error bound ``2 sqrt(L)`` from the balanced KL outcome loss."""
    if outcome_loss < 0:
        raise ValidationError("outcome loss must be nonnegative")
    return 2.0 * float(np.sqrt(outcome_loss))


def contrast_l2(
    q_model: np.ndarray, q_true: np.ndarray, weights: Optional[np.ndarray] = None
) -> float:
    """Weighted L2 error of the treatment-effect contrast between models."""
    q_model = np.atleast_2d(np.asarray(q_model, float))
    q_true = np.atleast_2d(np.asarray(q_true, float))
    if q_model.shape != q_true.shape or q_model.shape[1] != 2:
        raise ValidationError("arm tables must share a (points, 2) shape")
    diff = (q_model[:, 1] - q_model[:, 0]) - (q_true[:, 1] - q_true[:, 0])
    if weights is None:
        return float(np.sqrt(np.mean(diff**2)))
    weights = _check_density(weights, "weights")
    return float(np.sqrt(weights @ diff**2))


# ---------------------------------------------------------------------------
# overlap-support decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OverlapDecomposition:
    """Monte Carlo decomposition of the augmented-analysis ATE error.

    ``augmented_error = conditional_term + shift_term`` by construction;
    the recorded standard errors quantify the Monte Carlo tolerance.
    ``improves`` flags whether augmentation beats the original analysis.
    """

    original_error: float
    conditional_term: float
    shift_term: float
    original_se: float
    conditional_se: float
    shift_se: float

    @property
    def augmented_error(self) -> float:
        return self.conditional_term + self.shift_term

    @property
    def improves(self) -> bool:
        return abs(self.augmented_error) < abs(self.original_error)

    def to_dict(self) -> dict:
        return {
            "original_error": self.original_error,
            "conditional_term": self.conditional_term,
            "shift_term": self.shift_term,
            "augmented_error": self.augmented_error,
            "improves": self.improves,
            "original_se": self.original_se,
            "conditional_se": self.conditional_se,
            "shift_se": self.shift_se,
        }


def overlap_decomposition(
    tau_true: Callable,
    tau_orig: Callable,
    tau_aug: Callable,
    target_sample: np.ndarray,
    augmented_sample: np.ndarray,
) -> OverlapDecomposition:
    """Estimate the two-term error decomposition by Monte Carlo.

    ``target_sample`` is drawn from the target covariate law and
    ``augmented_sample`` from the augmentation-induced law; the three
    ``tau`` callables map covariate matrices to per-row effects.
    """
    target_sample = np.atleast_2d(np.asarray(target_sample, float))
    augmented_sample = np.atleast_2d(np.asarray(augmented_sample, float))
    if target_sample.shape[0] < 2 or augmented_sample.shape[0] < 2:
        raise ValidationError("samples must contain at least two rows")

    orig_gap = np.asarray(tau_orig(target_sample), float) - np.asarray(
        tau_true(target_sample), float
    )
    cond_gap = np.asarray(tau_aug(augmented_sample), float) - np.asarray(
        tau_true(augmented_sample), float
    )
    true_on_aug = np.asarray(tau_true(augmented_sample), float)
    true_on_target = np.asarray(tau_true(target_sample), float)

    def _se(x: np.ndarray) -> float:
        return float(x.std(ddof=1) / np.sqrt(x.shape[0]))

    return OverlapDecomposition(
        original_error=float(orig_gap.mean()),
        conditional_term=float(cond_gap.mean()),
        shift_term=float(true_on_aug.mean() - true_on_target.mean()),
        original_se=_se(orig_gap),
        conditional_se=_se(cond_gap),
        shift_se=float(np.sqrt(_se(true_on_aug) ** 2 + _se(true_on_target) ** 2)),
    )


# ---------------------------------------------------------------------------
# randomized property suites
# ---------------------------------------------------------------------------


def run_sensitivity_suite(instances: int, seed: int, max_support: int = 5) -> dict:
    """Randomized search for sensitivity-bound counterexamples.

    Draws Dirichlet density pairs and uniform contrasts in [-1, 1] on
    supports of 2..max_support points.  Returns the violation count (which
    must be zero) and the smallest observed margin.
    """
    gen = generator(seed)
    violations = 0
    min_margin = np.inf
    for _ in range(int(instances)):
        m = int(gen.integers(2, max_support + 1))
        p = gen.dirichlet(np.ones(m))
        p_star = gen.dirichlet(np.ones(m))
        delta = gen.uniform(-1.0, 1.0, m)
        delta_star = gen.uniform(-1.0, 1.0, m)
        try:
            report = ate_sensitivity_check(p, p_star, delta, delta_star)
            min_margin = min(min_margin, report.margin)
        except ValidationError:
            violations += 1
    return {"instances": int(instances), "violations": violations, "min_margin": float(min_margin)}


def run_loss_identity_suite(instances: int, seed: int, tol: float = 1e-12) -> dict:
    """Check the loss identity on random loss tuples; returns violations."""
    gen = generator(seed)
    violations = 0
    max_gap = 0.0
    for _ in range(int(instances)):
        d = int(gen.integers(1, 21))
        cov_f, cov_g = gen.uniform(0.0, 5.0, 2)
        out_f, out_g = gen.uniform(0.0, 5.0, 2)
        f = LossDecomposition.from_components(cov_f, out_f, d)
        g = LossDecomposition.from_components(cov_g, out_g, d)
        implied = joint_loss_identity(
            f.joint_loss, g.joint_loss, f.covariate_loss, g.covariate_loss, d
        )
        gap = abs(implied - (out_f - out_g))
        max_gap = max(max_gap, gap)
        if gap > tol:
            violations += 1
    return {"instances": int(instances), "violations": violations, "max_gap": max_gap}


def run_pinsker_suite(instances: int, seed: int, points: int = 10) -> dict:
    """Check the contrast bound on random model/truth table pairs."""
    gen = generator(seed)
    violations = 0
    min_margin = np.inf
    for _ in range(int(instances)):
        q_true = gen.uniform(0.02, 0.98, (points, 2))
        q_model = gen.uniform(0.02, 0.98, (points, 2))
        weights = gen.dirichlet(np.ones(points))
        loss = outcome_kl_loss(q_model, q_true, weights)
        bound = pinsker_contrast_bound(loss)
        error = contrast_l2(q_model, q_true, weights)
        min_margin = min(min_margin, bound - error)
        if error > bound + 1e-12:
            violations += 1
    return {"instances": int(instances), "violations": violations, "min_margin": float(min_margin)}


def run_overlap_suite(scenarios: int, mc_size: int, seed: int) -> dict:
    """Check the overlap decomposition against directly computed errors.

    Each scenario perturbs the benchmark effect function and covariate law
    at random, estimates the decomposition on one pair of samples, and
    recomputes the augmented error directly on an independent pair; the two
    must agree within 3 combined Monte Carlo standard errors.
    """
    from . import dgp

    violations = 0
    max_ratio = 0.0
    for s in range(int(scenarios)):
        gen = generator(seed, s)
        shift = gen.normal(0.0, 0.5, 3)
        wobble = gen.uniform(-0.3, 0.3)
        scale = gen.uniform(0.7, 1.3)

        def tau_true(W):
            return dgp.probability_contrast(W)

        def tau_aug(W, wobble=wobble, scale=scale):
            W = np.atleast_2d(W)
            return scale * dgp.probability_contrast(W) + wobble * np.cos(W[:, 3])

        def tau_orig(W, wobble=wobble):
            return dgp.probability_contrast(W) + wobble

        def draw_aug(g, size, shift=shift):
            W = dgp.sample_covariates(size, g)
            W = W.copy()
            W[:, 3:] += shift
            return W

        mu0_a = dgp.sample_covariates(mc_size, generator(seed, s, 1))
        aug_a = draw_aug(generator(seed, s, 2), mc_size)
        decomp = overlap_decomposition(tau_true, tau_orig, tau_aug, mu0_a, aug_a)

        mu0_b = dgp.sample_covariates(mc_size, generator(seed, s, 3))
        aug_b = draw_aug(generator(seed, s, 4), mc_size)
        psi_aug = float(np.mean(tau_aug(aug_b)))
        psi_true = float(np.mean(tau_true(mu0_b)))
        direct = psi_aug - psi_true
        direct_se = float(
            np.sqrt(
                np.var(tau_aug(aug_b), ddof=1) / mc_size
                + np.var(tau_true(mu0_b), ddof=1) / mc_size
            )
        )
        decomp_se = float(np.sqrt(decomp.conditional_se**2 + decomp.shift_se**2))
        tol = 3.0 * float(np.sqrt(direct_se**2 + decomp_se**2))
        gap = abs(decomp.augmented_error - direct)
        max_ratio = max(max_ratio, gap / tol if tol > 0 else np.inf)
        if gap > tol:
            violations += 1
    return {"scenarios": int(scenarios), "violations": violations, "max_gap_ratio": max_ratio}
