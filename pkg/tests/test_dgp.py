import math

import numpy as np
import pytest
from scipy.special import expit

from causalsynth import BenchmarkConfig, ValidationError, sample_dataset, true_ate, truth_oracle
from causalsynth.dgp import (
    log_odds_effect,
    outcome_probability,
    probability_contrast,
    sample_covariates,
    third_covariate_probability,
    true_propensity,
)
from causalsynth.rng import generator

ORIGIN = np.zeros((1, 6))


class TestMechanisms:
    def test_third_covariate_probability_at_ones(self):
        # 0.3 + 0.35 * (1 + 1) / 2
        assert third_covariate_probability(1, 1) == pytest.approx(0.65)
        assert third_covariate_probability(0, 0) == pytest.approx(0.3)

    def test_propensity_at_origin(self):
        # direct evaluation: expit(-30)
        assert true_propensity(ORIGIN)[0] == pytest.approx(expit(-30.0), rel=1e-12)
        assert true_propensity(ORIGIN)[0] == pytest.approx(9.357622968839299e-14, rel=1e-9)

    def test_effect_shift_hand_values(self):
        # at the origin: 2.0 + 0.1 e^0 + 0.2 cos 0
        assert log_odds_effect(ORIGIN)[0] == pytest.approx(2.3, abs=1e-12)
        e1 = np.array([[1.0, 0, 0, 0, 0, 0]])
        assert log_odds_effect(e1)[0] == pytest.approx(2.3 + 0.5 * math.sin(1.0), abs=1e-12)
        assert log_odds_effect(e1)[0] == pytest.approx(2.7207354924039483, abs=1e-12)

    def test_outcome_probability_uses_effect_only_when_treated(self):
        w = np.array([[1.0, 1.0, 0.0, 0.5, -0.5, 0.2]])
        lp0 = -0.5 + 0.5 * 1 + 1 - 0 + 0.2 * 0.5 - 0.3 * -0.5 + 0.1 * 0.2
        assert outcome_probability(0.0, w)[0] == pytest.approx(expit(lp0), rel=1e-12)
        assert outcome_probability(1.0, w)[0] == pytest.approx(
            expit(lp0 + log_odds_effect(w)[0]), rel=1e-12
        )


class TestSampling:
    def test_randomized_regime_is_balanced(self):
        ds = sample_dataset(BenchmarkConfig("randomized", 100_000, 7))
        assert abs(ds.treatment.mean() - 0.5) < 0.01

    def test_observational_regime_has_practical_positivity_problem(self):
        gen = generator(13)
        W = sample_covariates(10_000, gen)
        g = true_propensity(W)
        assert (g < 0.013).mean() > 0.5  # the rare-treated tail is massive

    def test_dataset_shape_and_schema(self):
        ds = sample_dataset(BenchmarkConfig("observational", 50, 1))
        assert (ds.n, ds.d) == (50, 6)
        assert [c.name for c in ds.schema] == ["W1", "W2", "W3", "W4", "W5", "W6", "A", "Y"]

    def test_same_seed_same_dataset(self):
        a = sample_dataset(BenchmarkConfig("observational", 100, 5))
        b = sample_dataset(BenchmarkConfig("observational", 100, 5))
        assert np.array_equal(a.rows, b.rows)

    def test_invalid_config_rejected(self):
        with pytest.raises(ValidationError):
            BenchmarkConfig("bogus", 10, 0)
        with pytest.raises(ValidationError):
            BenchmarkConfig("randomized", 0, 0)


class TestTrueAte:
    def test_matches_published_value(self):
        assert true_ate(1_000_000, 2024) == pytest.approx(0.4183, abs=0.005)

    def test_null_effect_gives_zero(self):
        # with the effect shift removed, the contrast is identically zero
        gen = generator(3)
        W = sample_covariates(1000, gen)
        null_contrast = outcome_probability(0.0, W) - outcome_probability(0.0, W)
        assert np.all(null_contrast == 0.0)

    def test_deterministic_in_seed(self):
        assert true_ate(10_000, 9) == true_ate(10_000, 9)

    def test_monotone_convergence_in_mc_size(self):
        reference = true_ate(4_000_000, 555)
        sizes = (10_000, 100_000, 1_000_000)
        mean_abs_dev = []
        for size in sizes:
            devs = [abs(true_ate(size, 1000 + s) - reference) for s in range(20)]
            mean_abs_dev.append(np.mean(devs))
        assert mean_abs_dev[0] > mean_abs_dev[1] > mean_abs_dev[2]

    def test_oracle_reproducible_from_recorded_settings(self):
        oracle = truth_oracle(50_000, 17)
        assert oracle.ate == true_ate(oracle.mc_size, oracle.seed)
        assert oracle.propensity is true_propensity
        W = sample_covariates(10, generator(0))
        assert np.allclose(
            oracle.outcome_probability(1.0, W) - oracle.outcome_probability(0.0, W),
            probability_contrast(W),
        )
