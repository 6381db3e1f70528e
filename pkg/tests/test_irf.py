import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lplab import (
    QarParams,
    QvarParams,
    SpecKind,
    car,
    ccar_region,
    ccar_slice,
    cmr,
    girf,
    horizon_coeffs,
    irf_value,
    kp_weight,
    pop_irf,
    qar_moments,
    qvar_car,
    qvar_car_oracle,
    qvar_linear_pop_irf,
    stationary_state_variance,
)

M_CONST = 2.1957291567607653
# population coefficients at the benchmark calibration, h=1 (frozen from the
# closed forms; cross-checked against 2e6-observation OLS in the acceptance run)
BETA_PLUS_1 = 0.5 + M_CONST * 0.2
BETA_MINUS_1 = 0.5 - M_CONST * 0.2
BETA1_LAG_1 = 0.25 * (4.0 / 3.0) / (368.0 / 225.0)   # 0.20380434...
BETA0_LAG_1 = 0.5 - BETA1_LAG_1 * (8.0 / 15.0)       # 0.39130434...


class TestTrueResponses:
    def test_benchmark_point(self, p33):
        assert_allclose(car(p33, 2.0, 1.0, 1), 1.2, rtol=1e-12)

    def test_impact_at_zero_state(self, p33):
        for delta in (-1.5, 0.3, 2.0):
            assert_allclose(car(p33, 0.0, delta, 0), p33.sigma * delta, rtol=1e-12)

    def test_asymmetry_in_shock_sign(self, p33):
        for h in (1, 2, 5):
            q = horizon_coeffs(p33, h).q_h
            for d in (0.5, 1.0, 2.0):
                total = car(p33, 0.0, d, h) + car(p33, 0.0, -d, h)
                assert_allclose(total, 2 * q * d * d, rtol=1e-12)
                assert total != 0.0

    def test_cmr_benchmark(self, p33):
        assert_allclose(cmr(p33, 2.0, 1), 1.0, rtol=1e-12)
        for h in (0, 1, 3):
            assert_allclose(cmr(p33, 0.0, h), p33.sigma * p33.phi1**h, rtol=1e-12)

    def test_cmr_is_small_shock_limit(self, p33):
        # Taylor remainder bound and a central finite difference
        for s in (-2.0, 0.5):
            for h in (1, 4):
                q = horizon_coeffs(p33, h).q_h
                d = 1e-4
                assert abs(car(p33, s, d, h) / d - cmr(p33, s, h)) <= q * d * (1 + 1e-9)
                eps = 1e-6
                fd = (car(p33, s, eps, h) - car(p33, s, -eps, h)) / (2 * eps)
                assert_allclose(fd, cmr(p33, s, h), rtol=1e-8)

    def test_girf_offset_is_state_and_shock_free(self, p33):
        for h in (1, 2, 6):
            offs = {girf(p33, s, d, h) - car(p33, s, d, h) for s in (-2.0, 1.0) for d in (0.5, 2.0)}
            assert len({round(o, 14) for o in offs}) == 1
        assert_allclose(girf(p33, 1.0, 2.0, 1) - car(p33, 1.0, 2.0, 1), -0.2, rtol=1e-12)
        assert girf(p33, 1.5, 0.7, 0) == car(p33, 1.5, 0.7, 0)


class TestPopulationCoefficients:
    def test_linear(self, p33):
        for h in range(5):
            assert_allclose(pop_irf(SpecKind.LINEAR, p33, h).coefficients["beta"], 0.5**h)

    def test_sign_split_h1(self, p33):
        co = pop_irf(SpecKind.ASYM, p33, 1).coefficients
        assert_allclose(co["beta_plus"], BETA_PLUS_1, rtol=1e-12)
        assert_allclose(co["beta_minus"], BETA_MINUS_1, rtol=1e-12)

    def test_sign_split_symmetry(self, p33):
        # beta_plus - baseline = baseline - beta_minus at every horizon
        for h in range(11):
            base = horizon_coeffs(p33, h).baseline
            co = pop_irf(SpecKind.ASYM, p33, h).coefficients
            assert_allclose(co["beta_plus"] - base, base - co["beta_minus"], atol=1e-14)

    def test_lag_h1(self, p33):
        co = pop_irf(SpecKind.LAG, p33, 1).coefficients
        assert_allclose(co["beta1"], BETA1_LAG_1, rtol=1e-12)
        assert_allclose(co["beta0"], BETA0_LAG_1, rtol=1e-12)

    def test_feasible_reuses_lag_slopes(self, p33):
        for h in range(11):
            lag = pop_irf(SpecKind.LAG, p33, h).coefficients
            feas = pop_irf(SpecKind.FEAS, p33, h).coefficients
            assert feas["theta1"] == lag["beta0"]
            assert feas["theta2"] == lag["beta1"]
            assert feas["theta3"] == horizon_coeffs(p33, h).q_h

    def test_infeasible_matches_true_decomposition(self, p33):
        for h in (0, 1, 4):
            c = horizon_coeffs(p33, h)
            co = pop_irf(SpecKind.INFEAS, p33, h).coefficients
            assert (co["kappa1"], co["kappa2"], co["kappa3"]) == (c.baseline, c.a_h, c.q_h)

    def test_mixed_rejected(self, p33):
        with pytest.raises(ValueError, match="estimation only"):
            pop_irf(SpecKind.MIXED, p33, 1)

    def test_linear_coincides_with_linear_model(self, p33):
        stripped = QarParams(phi1=p33.phi1, phi2=0.0, gamma=0.0, sigma=p33.sigma)
        for h in range(8):
            assert pop_irf(SpecKind.LINEAR, p33, h) == pop_irf(SpecKind.LINEAR, stripped, h)


class TestIrfValue:
    def test_infeasible_recovers_truth_exactly(self, p33):
        for s in (-2.0, 0.0, 1.5):
            for d in (-1.0, 0.5, 2.0):
                for h in range(11):
                    assert abs(irf_value(SpecKind.INFEAS, p33, d, h, s=s) - car(p33, s, d, h)) <= 1e-14

    def test_feasible_at_mean_observable(self, p33):
        mom = qar_moments(p33)
        for h in (0, 1, 3):
            c = horizon_coeffs(p33, h)
            val = irf_value(SpecKind.FEAS, p33, 1.5, h, y=mom.mean_y)
            assert_allclose(val, c.baseline * 1.5 + c.q_h * 2.25, rtol=1e-12)

    def test_sign_split_gap(self, p33):
        for h in (1, 2, 5):
            q = horizon_coeffs(p33, h).q_h
            gap = irf_value(SpecKind.ASYM, p33, 1.0, h) - (-irf_value(SpecKind.ASYM, p33, -1.0, h))
            assert_allclose(gap, 2 * M_CONST * q, rtol=1e-12)

    def test_conditioning_validation(self, p33):
        with pytest.raises(ValueError, match="no conditioning"):
            irf_value(SpecKind.LINEAR, p33, 1.0, 1, y=0.5)
        with pytest.raises(ValueError, match="lagged observable"):
            irf_value(SpecKind.LAG, p33, 1.0, 1)
        with pytest.raises(ValueError, match="latent state"):
            irf_value(SpecKind.INFEAS, p33, 1.0, 1)
        with pytest.raises(ValueError, match="shock sign"):
            irf_value(SpecKind.ASYM, p33, 1.0, 1, y=0.1)


class TestKpWeight:
    def test_at_zero(self):
        assert_allclose(kp_weight(0.0), 0.3989422804014327, rtol=1e-12)

    def test_matches_covariance_definition(self):
        rng = np.random.default_rng(21)
        u = rng.standard_normal(2_000_000)
        for a in (-1.0, 0.0, 0.7):
            prods = (u >= a) * u
            se = prods.std(ddof=1) / math.sqrt(len(u))
            assert abs(prods.mean() - kp_weight(a)) <= 3 * se

    def test_quadrature_facts(self):
        grid = np.linspace(-8.0, 8.0, 400_001)
        w = kp_weight(grid)
        assert abs(np.trapezoid(w, grid) - 1.0) <= 1e-8
        assert abs(np.trapezoid(w * grid, grid)) <= 1e-8

    def test_symmetry(self):
        u = np.linspace(0.0, 5.0, 101)
        assert_allclose(kp_weight(u), kp_weight(-u), atol=0)


class TestQvarCar:
    def test_impact_no_heteroskedasticity(self, qvar2):
        p = QvarParams(n=2, Phi1=qvar2.Phi1, Phi2=qvar2.Phi2, Gamma=np.zeros((2, 2)), Sigma=qvar2.Sigma)
        got = qvar_car(p, np.array([3.0, -1.0]), 0.8, 1, 0)
        assert_allclose(got, p.Sigma_tr @ np.array([0.0, 0.8]), atol=1e-15)

    def test_linear_var_all_horizons(self, qvar2):
        p = QvarParams(n=2, Phi1=qvar2.Phi1, Phi2=np.zeros((2, 3)), Gamma=np.zeros((2, 2)), Sigma=qvar2.Sigma)
        for h in (0, 1, 4):
            got = qvar_car(p, np.array([1.0, 2.0]), 1.1, 0, h)
            ref = np.linalg.matrix_power(p.Phi1, h) @ p.Sigma_tr @ np.array([1.1, 0.0])
            assert_allclose(got, ref, atol=1e-14)

    def test_impact_linear_in_shock_size(self, qvar2):
        s = np.array([0.7, -0.2])
        assert_allclose(
            qvar_car(qvar2, s, 2.0, 0, 0), 2.0 * qvar_car(qvar2, s, 1.0, 0, 0), rtol=1e-12
        )

    def test_against_paired_path_oracle(self, qvar2):
        s = np.array([1.0, -1.0])
        est, se = qvar_car_oracle(qvar2, s, 1.5, 0, 3, n_draws=300_000, seed=17)
        ref = qvar_car(qvar2, s, 1.5, 0, 3)
        assert np.all(np.abs(est - ref) <= 3 * se + 1e-10)


class TestQvarLinear:
    def test_impact_identity_covariance(self):
        p = QvarParams(n=2, Phi1=0.4 * np.eye(2), Phi2=np.zeros((2, 3)), Gamma=np.zeros((2, 2)), Sigma=np.eye(2))
        assert qvar_linear_pop_irf(p, 0, 0, 0) == 1.0
        assert qvar_linear_pop_irf(p, 0, 1, 0) == 0.0

    def test_matches_var_response(self, qvar2):
        for h in (0, 2):
            for i in (0, 1):
                for j in (0, 1):
                    ref = (np.linalg.matrix_power(qvar2.Phi1, h) @ qvar2.Sigma_tr)[j, i]
                    assert qvar_linear_pop_irf(qvar2, i, j, h) == pytest.approx(ref, abs=1e-15)


class TestConditionalAverages:
    def test_slice_full_conditioning_is_exact(self, qvar2):
        s = np.array([0.9, -1.4])
        got = ccar_slice(qvar2, [0, 1], s, 1.2, 0, 2)
        assert_allclose(got, qvar_car(qvar2, s, 1.2, 0, 2), atol=0)

    def test_slice_uses_conditional_mean(self, qvar2):
        V = stationary_state_variance(qvar2)
        c0 = 1.0
        cond_mean = np.array([c0, V[1, 0] / V[0, 0] * c0])
        got = ccar_slice(qvar2, [0], np.array([c0]), 1.0, 0, 2)
        assert_allclose(got, qvar_car(qvar2, cond_mean, 1.0, 0, 2), rtol=1e-10)

    def test_slice_matches_conditional_gaussian_sampling(self, qvar2):
        V = stationary_state_variance(qvar2)
        c0 = 1.0
        mu2 = V[1, 0] / V[0, 0] * c0
        v2 = V[1, 1] - V[1, 0] ** 2 / V[0, 0]
        rng = np.random.default_rng(30)
        s2 = mu2 + math.sqrt(v2) * rng.standard_normal(100_000)
        vals = np.array([qvar_car(qvar2, np.array([c0, x]), 1.0, 0, 2) for x in s2[:4000]])
        se = vals.std(axis=0, ddof=1) / math.sqrt(len(vals))
        got = ccar_slice(qvar2, [0], np.array([c0]), 1.0, 0, 2)
        assert np.all(np.abs(vals.mean(axis=0) - got) <= 3 * se)

    def test_region_state_free_case(self, qvar2):
        p = QvarParams(n=2, Phi1=qvar2.Phi1, Phi2=np.zeros((2, 3)), Gamma=np.zeros((2, 2)), Sigma=qvar2.Sigma)
        val, se = ccar_region(p, lambda s: np.ones(len(s), dtype=bool), 1.0, 0, 3, n_draws=20_000, seed=4)
        ref = np.linalg.matrix_power(p.Phi1, 3) @ p.Sigma_tr @ np.array([1.0, 0.0])
        assert_allclose(val, ref, atol=1e-12)

    def test_region_matches_direct_average(self, qvar2):
        predicate = lambda s: s[:, 0] > 0.5
        val, se = ccar_region(qvar2, predicate, 1.0, 0, 2, n_draws=100_000, seed=5)
        # independent check: evaluate the exact response draw by draw
        V = stationary_state_variance(qvar2)
        L = np.linalg.cholesky(V)
        rng = np.random.default_rng(99)
        draws = rng.standard_normal((30_000, 2)) @ L.T
        kept = draws[predicate(draws)]
        vals = np.array([qvar_car(qvar2, s, 1.0, 0, 2) for s in kept[:3000]])
        se2 = vals.std(axis=0, ddof=1) / math.sqrt(len(vals))
        assert np.all(np.abs(val - vals.mean(axis=0)) <= 3 * np.hypot(se, se2))

    def test_region_too_small_rejected(self, qvar2):
        with pytest.raises(ValueError, match="probability"):
            ccar_region(qvar2, lambda s: s[:, 0] > 50.0, 1.0, 0, 1, n_draws=50_000, seed=6)
