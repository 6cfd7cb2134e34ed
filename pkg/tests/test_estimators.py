import numpy as np
import pytest

from causalsynth import (
    BenchmarkConfig,
    ColumnSchema,
    Dataset,
    EstimatorConfig,
    NumericalError,
    eif_values,
    estimate_aipw,
    estimate_all,
    estimate_ipw,
    estimate_or,
    estimate_tmle,
    sample_dataset,
    truth_oracle,
)
from causalsynth.estimators import ipw_from_weights
from causalsynth.nuisance import fit_nuisances

TRUE_ATE = 0.4183


def _dataset(W, A, Y):
    d = W.shape[1]
    schema = [ColumnSchema(f"X{j + 1}", "continuous", "covariate") for j in range(d)]
    schema += [ColumnSchema("A", "binary", "treatment"), ColumnSchema("Y", "binary", "outcome")]
    return Dataset(schema, np.column_stack([W, A, Y]))


def _const_outcome(q1, q0):
    def fn(a, W):
        a = np.asarray(a, float)
        n = np.atleast_2d(W).shape[0]
        if a.ndim == 0:
            a = np.full(n, float(a))
        return np.where(a == 1.0, q1, q0)

    return fn


def _const_propensity(g):
    return lambda W: np.full(np.atleast_2d(W).shape[0], g)


@pytest.fixture(scope="module")
def randomized_10k():
    return sample_dataset(BenchmarkConfig("randomized", 10_000, 42))


@pytest.fixture(scope="module")
def oracle():
    return truth_oracle(1_000_000, 2024)


class TestOutcomeRegression:
    def test_constant_contrast(self, tiny_dataset):
        est = estimate_or(tiny_dataset, _const_outcome(1.0, 0.0))
        assert est.psi == 1.0

    def test_null_contrast(self, tiny_dataset):
        est = estimate_or(tiny_dataset, _const_outcome(0.4, 0.4))
        assert est.psi == 0.0

    def test_randomized_benchmark_with_fitted_models(self, randomized_10k):
        pair = fit_nuisances(randomized_10k, interactions=True)
        est = estimate_or(randomized_10k, pair.outcome_fn(), pair.propensity_fn())
        assert est.psi == pytest.approx(TRUE_ATE, abs=0.03)


class TestIpw:
    def test_symmetric_arms_give_zero(self):
        W = np.zeros((4, 1))
        ds = _dataset(W, np.array([1.0, 1, 0, 0]), np.array([1.0, 0, 1, 0]))
        for flavor in ("horvitz-thompson", "hajek"):
            est = estimate_ipw(ds, _const_propensity(0.5), flavor)
            assert est.psi == pytest.approx(0.0, abs=1e-12)

    def test_two_row_hand_arithmetic(self):
        # A=(1,0), Y=(1,0), g=0.5: HT is mean(2, 0) = 1; Hajek identical here
        ds = _dataset(np.zeros((2, 1)), np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        ht = estimate_ipw(ds, _const_propensity(0.5), "horvitz-thompson")
        hajek = estimate_ipw(ds, _const_propensity(0.5), "hajek")
        assert ht.psi == pytest.approx(1.0, abs=1e-12)
        assert hajek.psi == pytest.approx(1.0, abs=1e-12)

    def test_randomized_benchmark_known_propensity(self, randomized_10k):
        est = estimate_ipw(randomized_10k, _const_propensity(0.5))
        assert est.psi == pytest.approx(TRUE_ATE, abs=0.03)

    def test_hajek_invariant_to_weight_rescaling_ht_not(self):
        gen = np.random.Generator(np.random.PCG64(3))
        A = (gen.random(50) < 0.5).astype(float)
        Y = gen.random(50).round()
        w1 = gen.uniform(1, 4, 50)
        w0 = gen.uniform(1, 4, 50)
        hajek = ipw_from_weights(A, Y, w1, w0, "hajek")
        hajek_scaled = ipw_from_weights(A, Y, 7.3 * w1, 7.3 * w0, "hajek")
        assert hajek_scaled == pytest.approx(hajek, abs=1e-12)
        ht = ipw_from_weights(A, Y, w1, w0, "horvitz-thompson")
        ht_scaled = ipw_from_weights(A, Y, 7.3 * w1, 7.3 * w0, "horvitz-thompson")
        assert abs(ht_scaled - 7.3 * ht) < 1e-12 and ht != pytest.approx(ht_scaled)

    def test_empty_arm_fails_hajek(self):
        ds = _dataset(np.zeros((3, 1)), np.ones(3), np.array([1.0, 0, 1]))
        with pytest.raises(NumericalError, match="arm"):
            estimate_ipw(ds, _const_propensity(0.5), "hajek")


class TestAipw:
    def test_zero_residuals_reduce_to_or(self):
        gen = np.random.Generator(np.random.PCG64(0))
        W = gen.normal(size=(40, 2))
        A = (gen.random(40) < 0.5).astype(float)
        Y = A.copy()  # Y = A exactly
        ds = _dataset(W, A, Y)
        outcome = _const_outcome(1.0, 0.0)
        for g in (0.3, 0.5, 0.7):
            est = estimate_aipw(ds, outcome, _const_propensity(g))
            assert est.psi == pytest.approx(1.0, abs=1e-12)

    def test_null_outcome_model_collapses_to_ht(self, randomized_10k):
        prop = _const_propensity(0.5)
        aipw = estimate_aipw(randomized_10k, _const_outcome(0.0, 0.0), prop)
        ht = estimate_ipw(randomized_10k, prop, "horvitz-thompson")
        assert aipw.psi == pytest.approx(ht.psi, abs=1e-12)

    def test_randomized_benchmark_with_fitted_models(self, randomized_10k):
        pair = fit_nuisances(randomized_10k, interactions=True)
        est = estimate_aipw(randomized_10k, pair.outcome_fn(), pair.propensity_fn())
        assert est.psi == pytest.approx(TRUE_ATE, abs=0.03)
        assert abs(est.mean_eif) < 1e-12  # zero by construction


class TestTmle:
    def test_zero_residuals_mean_zero_fluctuation(self):
        """Interior outcome values hit exactly: TMLE == OR, epsilon == 0."""
        gen = np.random.Generator(np.random.PCG64(4))
        W = gen.normal(size=(60, 2))
        A = (gen.random(60) < 0.5).astype(float)
        q1 = 1.0 / (1.0 + np.exp(-(0.4 + 0.6 * W[:, 0])))
        q0 = 1.0 / (1.0 + np.exp(-(-0.2 + 0.6 * W[:, 0])))

        def outcome(a, Wx):
            a = np.asarray(a, float)
            z1 = 1.0 / (1.0 + np.exp(-(0.4 + 0.6 * Wx[:, 0])))
            z0 = 1.0 / (1.0 + np.exp(-(-0.2 + 0.6 * Wx[:, 0])))
            if a.ndim == 0:
                return z1 if a == 1.0 else z0
            return np.where(a == 1.0, z1, z0)

        Y = np.where(A == 1.0, q1, q0)
        schema = [
            ColumnSchema("X1", "continuous", "covariate"),
            ColumnSchema("X2", "continuous", "covariate"),
            ColumnSchema("A", "binary", "treatment"),
            ColumnSchema("Y", "continuous", "outcome"),
        ]
        ds = Dataset(schema, np.column_stack([W, A, Y]))
        config = EstimatorConfig(outcome_family="bounded-continuous", outcome_bounds=(0.0, 1.0))
        tmle = estimate_tmle(ds, outcome, _const_propensity(0.5), config)
        plug_in = estimate_or(ds, outcome)
        assert tmle.epsilon == 0.0
        assert tmle.psi == pytest.approx(plug_in.psi, abs=1e-13)

    def test_binary_degenerate_balanced_case(self):
        # Y = clamped fit exactly on a balanced design: epsilon solves at 0
        ds = _dataset(np.zeros((4, 1)), np.array([1.0, 1, 0, 0]), np.array([1.0, 0, 1, 0]))

        def outcome(a, W):
            a = np.asarray(a, float)
            n = np.atleast_2d(W).shape[0]
            if a.ndim == 0:
                a = np.full(n, float(a))
            return np.array([1.0, 0.0, 1.0, 0.0])[:n]

        est = estimate_tmle(ds, lambda a, W: ds.outcome, _const_propensity(0.5))
        assert est.epsilon == 0.0

    def test_close_to_aipw_on_randomized_benchmark(self, randomized_10k):
        pair = fit_nuisances(randomized_10k, interactions=True)
        tmle = estimate_tmle(randomized_10k, pair.outcome_fn(), pair.propensity_fn())
        aipw = estimate_aipw(randomized_10k, pair.outcome_fn(), pair.propensity_fn())
        assert tmle.psi == pytest.approx(aipw.psi, abs=0.01)
        assert tmle.psi == pytest.approx(TRUE_ATE, abs=0.03)
        assert abs(tmle.mean_eif) <= 1e-8

    def test_affine_rescaling_invariance(self):
        gen = np.random.Generator(np.random.PCG64(10))
        W = gen.normal(size=(300, 2))
        A = (gen.random(300) < 0.5).astype(float)
        Y = 2.0 + A + 0.5 * W[:, 0] + gen.normal(0, 0.3, 300)
        schema = [
            ColumnSchema("X1", "continuous", "covariate"),
            ColumnSchema("X2", "continuous", "covariate"),
            ColumnSchema("A", "binary", "treatment"),
            ColumnSchema("Y", "continuous", "outcome"),
        ]
        base = Dataset(schema, np.column_stack([W, A, Y]))
        scaled = Dataset(schema, np.column_stack([W, A, 3.0 * Y - 5.0]))
        pair = fit_nuisances(base)
        pair_scaled = fit_nuisances(scaled)
        cfg = EstimatorConfig(outcome_family="bounded-continuous")
        psi = estimate_tmle(base, pair.outcome_fn(), pair.propensity_fn(), cfg).psi
        psi_scaled = estimate_tmle(
            scaled, pair_scaled.outcome_fn(), pair_scaled.propensity_fn(), cfg
        ).psi
        assert psi_scaled / 3.0 == pytest.approx(psi, abs=1e-8)

    def test_bounds_must_cover_outcomes(self):
        ds = _dataset(np.zeros((4, 1)), np.array([1.0, 0, 1, 0]), np.array([1.0, 0, 1, 0]))
        cfg = EstimatorConfig(outcome_family="bounded-continuous", outcome_bounds=(0.2, 0.8))
        with pytest.raises(Exception):
            estimate_tmle(ds, _const_outcome(0.5, 0.5), _const_propensity(0.5), cfg)


class TestEif:
    def test_centering_by_construction(self, randomized_10k):
        pair = fit_nuisances(randomized_10k)
        outcome, prop = pair.outcome_fn(), pair.propensity_fn()
        W = randomized_10k.covariates
        q1, q0 = outcome(1.0, W), outcome(0.0, W)
        g = np.clip(prop(W), 0.01, 0.99)
        A, Y = randomized_10k.treatment, randomized_10k.outcome
        qa = np.where(A == 1, q1, q0)
        h = A / g - (1 - A) / (1 - g)
        psi = float(np.mean(q1 - q0 + h * (Y - qa)))
        values = eif_values(randomized_10k, outcome, prop, psi)
        assert abs(values.mean()) < 1e-12

    def test_degenerate_constant_case(self):
        ds = _dataset(np.zeros((5, 1)), np.array([1.0, 0, 1, 0, 1]), np.zeros(5))
        values = eif_values(ds, _const_outcome(0.0, 0.0), _const_propensity(0.5), psi=0.7)
        assert np.allclose(values, -0.7)

    def test_tmle_solves_score_equation(self, randomized_10k):
        pair = fit_nuisances(randomized_10k, interactions=True)
        est = estimate_tmle(randomized_10k, pair.outcome_fn(), pair.propensity_fn())
        assert abs(est.mean_eif) <= 1e-8


class TestAllEstimatorsAgainstOracle:
    def test_oracle_nuisances_at_1e5(self, oracle):
        ds = sample_dataset(BenchmarkConfig("randomized", 100_000, 77))
        results = estimate_all(ds, (oracle.outcome_probability, _const_propensity(0.5)))
        for est in results:
            assert est.psi == pytest.approx(oracle.ate, abs=0.01), est.estimator

    def test_estimate_all_selects_and_orders(self, randomized_10k):
        pair = fit_nuisances(randomized_10k)
        out = estimate_all(randomized_10k, pair, ["tmle", "or"])
        assert [e.estimator for e in out] == ["TMLE", "OR"]
