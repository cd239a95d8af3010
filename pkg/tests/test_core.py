import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from garchboot.core import (
    GarchSpec,
    InnovationDistribution,
    check_identifiability,
    companion_matrix,
    estimate_lyapunov,
    is_second_order_stationary,
    simulate,
)
from garchboot.seeding import make_rng


class TestGarchSpec:
    def test_orders(self):
        s = GarchSpec(1.0, (0.3, 0.2), (0.4,))
        assert (s.p, s.q, s.dim) == (1, 2, 4)
        np.testing.assert_array_equal(s.theta, [1.0, 0.3, 0.2, 0.4])

    @pytest.mark.parametrize(
        "omega, alpha, beta",
        [(0.0, (0.1,), ()), (-1.0, (0.1,), ()), (1.0, (-0.1,), ()), (1.0, (0.1,), (-0.2,))],
    )
    def test_invalid(self, omega, alpha, beta):
        with pytest.raises(ValueError):
            GarchSpec(omega, alpha, beta)

    def test_from_theta_roundtrip(self):
        s = GarchSpec(0.2, (0.1, 0.05), (0.7,))
        assert GarchSpec.from_theta(s.theta, 2) == s


class TestInnovations:
    def test_kurtosis(self):
        assert InnovationDistribution.gaussian().kurtosis() == 3.0
        assert InnovationDistribution.student_t(5).kurtosis() == pytest.approx(9.0)
        assert InnovationDistribution.student_t(6).kurtosis() == pytest.approx(6.0)
        assert math.isinf(InnovationDistribution.student_t(3).kurtosis())
        assert math.isinf(InnovationDistribution.student_t(4).kurtosis())

    def test_df_must_exceed_two(self):
        with pytest.raises(ValueError):
            InnovationDistribution.student_t(2)

    @pytest.mark.parametrize("text, label", [("gaussian", "gaussian"), ("normal", "gaussian"),
                                             ("t5", "t5"), ("t:3", "t3"), ("t(7.5)", "t7.5")])
    def test_parse(self, text, label):
        assert InnovationDistribution.parse(text).label == label

    @pytest.mark.parametrize("dist", [InnovationDistribution.gaussian(),
                                      InnovationDistribution.student_t(5)])
    def test_unit_variance(self, dist):
        z = dist.draw(make_rng(1), 1_000_000)
        assert abs(z.mean()) < 0.005
        assert z.var() == pytest.approx(1.0, abs=0.01)


class TestSimulate:
    def test_constant_variance_reduction(self, gaussian):
        spec = GarchSpec(1.0)
        path = simulate(spec, gaussian, 200_000, seed=3)
        np.testing.assert_array_equal(path.true_variances, 1.0)
        assert path.values.var() == pytest.approx(1.0, abs=0.01)

    def test_scaled_innovation_stream(self, gaussian):
        path = simulate(GarchSpec(4.0), gaussian, 500, burn_in=100, seed=9)
        eta = gaussian.draw(make_rng(9), 600)[100:]
        np.testing.assert_allclose(path.values, 2.0 * eta, rtol=0, atol=1e-15)

    def test_arch1_variance_and_kurtosis(self, arch1, gaussian):
        x = simulate(arch1, gaussian, 1_000_000, seed=11).values
        assert x.var() == pytest.approx(2.0, rel=0.02)
        kurt = np.mean(x**4) / np.mean(x**2) ** 2
        # analytic ARCH(1) kurtosis 3(1 - a^2)/(1 - 3a^2) = 9 at a = 0.5
        assert kurt > 3.0
        assert kurt == pytest.approx(9.0, rel=0.25)

    def test_garch11_variance(self, gaussian):
        spec = GarchSpec(0.1, (0.1,), (0.8,))
        x = simulate(spec, gaussian, 1_000_000, seed=12).values
        assert x.var() == pytest.approx(1.0, rel=0.03)

    def test_deterministic(self, arch1, gaussian):
        a = simulate(arch1, gaussian, 1000, burn_in=50, seed=5)
        b = simulate(arch1, gaussian, 1000, burn_in=50, seed=5)
        np.testing.assert_array_equal(a.values, b.values)
        c = simulate(arch1, gaussian, 1000, burn_in=50, seed=6)
        assert not np.array_equal(a.values, c.values)

    def test_errors(self, arch1, gaussian):
        with pytest.raises(ValueError):
            simulate(arch1, gaussian, 0)

    def test_recursion_matches_definition(self, gaussian):
        spec = GarchSpec(0.3, (0.2, 0.1), (0.3,))
        path = simulate(spec, gaussian, 50, burn_in=0, seed=2)
        eta = gaussian.draw(make_rng(2), 50)
        h0 = 0.3 / (1 - 0.6)
        x, h = np.empty(50), np.empty(50)
        for t in range(50):
            x2 = [x[t - i] ** 2 if t - i >= 0 else h0 for i in (1, 2)]
            hl = h[t - 1] if t >= 1 else h0
            h[t] = 0.3 + 0.2 * x2[0] + 0.1 * x2[1] + 0.3 * hl
            x[t] = math.sqrt(h[t]) * eta[t]
        np.testing.assert_allclose(path.values, x, rtol=1e-14)
        np.testing.assert_allclose(path.true_variances, h, rtol=1e-14)


class TestStationarity:
    def test_examples(self):
        assert is_second_order_stationary(GarchSpec(1.0, (0.5,)))
        assert not is_second_order_stationary(GarchSpec(1.0, (0.6,), (0.4,)))
        assert is_second_order_stationary(GarchSpec(1.0, (0.3, 0.2), (0.4,)))


class TestCompanionMatrix:
    def test_arch1(self):
        np.testing.assert_array_equal(companion_matrix(GarchSpec(1.0, (0.5,)), 2.0), [[1.0]])

    def test_garch11(self):
        A = companion_matrix(GarchSpec(1.0, (0.3,), (0.2,)), 1.0)
        np.testing.assert_array_equal(A, [[0.3, 0.2], [0.3, 0.2]])

    def test_garch22_layout(self):
        A = companion_matrix(GarchSpec(1.0, (0.1, 0.2), (0.3, 0.4)), 2.0)
        expected = [
            [0.2, 0.4, 0.6, 0.8],
            [1.0, 0.0, 0.0, 0.0],
            [0.1, 0.2, 0.3, 0.4],
            [0.0, 0.0, 1.0, 0.0],
        ]
        np.testing.assert_allclose(A, expected)

    @given(q=st.integers(1, 4), p=st.integers(0, 3))
    def test_shape(self, q, p):
        spec = GarchSpec(1.0, (0.1,) * q, (0.1,) * p)
        assert companion_matrix(spec, 1.3).shape == (q + p, q + p)

    @pytest.mark.parametrize(
        "spec",
        [GarchSpec(1.0, (0.5,)), GarchSpec(0.1, (0.1,), (0.8,)), GarchSpec(1.0, (0.2, 0.1), (0.3, 0.2))],
    )
    def test_mean_matrix_spectral_radius(self, spec):
        draws = InnovationDistribution.gaussian().draw(make_rng(4), 20_000) ** 2
        mean_A = np.mean([companion_matrix(spec, e) for e in draws], axis=0)
        rho = max(abs(np.linalg.eigvals(mean_A)))
        # largest root of z^m - sum_i (alpha_i + beta_i) z^(m-i); equals the
        # coefficient sum when m = 1
        m = max(spec.p, spec.q)
        c = np.zeros(m)
        c[: spec.q] += spec.alpha
        c[: spec.p] += spec.beta
        oracle = max(abs(np.roots(np.concatenate(([1.0], -c)))))
        assert rho == pytest.approx(oracle, abs=0.02)
        if m == 1:
            assert oracle == pytest.approx(spec.persistence)
        assert rho < 1.0

    def test_consistent_with_recursion(self, gaussian):
        # z_t = b_t + A_t z_{t-1} reproduces the simulated squares and variances
        spec = GarchSpec(0.3, (0.2, 0.1), (0.3,))
        path = simulate(spec, gaussian, 30, burn_in=0, seed=8)
        x, h = path.values, path.true_variances
        eta2 = x**2 / h
        for t in range(3, 30):
            z_prev = np.array([x[t - 1] ** 2, x[t - 2] ** 2, h[t - 1]])
            b = np.array([0.3 * eta2[t], 0.0, 0.3])
            z = b + companion_matrix(spec, eta2[t]) @ z_prev
            np.testing.assert_allclose(z, [x[t] ** 2, x[t - 1] ** 2, h[t]], rtol=1e-12)


class TestLyapunov:
    @pytest.mark.parametrize("alpha", [0.5, 1.0])
    def test_scalar_case(self, alpha, gaussian, e_log_eta2):
        lam = estimate_lyapunov(GarchSpec(1.0, (alpha,)), gaussian, 1_000_000, seed=1)
        assert lam == pytest.approx(math.log(alpha) + e_log_eta2, abs=0.02)
        assert lam < 0

    def test_explosive(self, gaussian, e_log_eta2):
        lam = estimate_lyapunov(GarchSpec(1.0, (10.0,)), gaussian, 100_000, seed=1)
        assert lam > 0
        assert lam == pytest.approx(math.log(10) + e_log_eta2, abs=0.05)

    def test_degenerate(self, gaussian):
        assert estimate_lyapunov(GarchSpec(1.0, (0.0,), (0.0,)), gaussian, 1000) == -math.inf

    def test_t_max_floor(self, gaussian):
        with pytest.raises(ValueError):
            estimate_lyapunov(GarchSpec(1.0, (0.5,)), gaussian, 999)

    @pytest.mark.parametrize(
        "spec",
        [GarchSpec(1.0, (0.5,)), GarchSpec(0.1, (0.1,), (0.8,)), GarchSpec(0.1, (0.05,), (0.94,)),
         GarchSpec(1.0, (0.2, 0.1), (0.3, 0.2)), GarchSpec(1.0, (0.9,))],
    )
    def test_second_order_stationary_implies_negative(self, spec, gaussian):
        assert estimate_lyapunov(spec, gaussian, 200_000, seed=2) < 0.05

    def test_garch11_against_scalar_recursion(self, gaussian):
        # for GARCH(1,1) the exponent equals E log(alpha eta^2 + beta)
        spec = GarchSpec(0.1, (0.3,), (0.6,))
        z2 = np.random.default_rng(5).standard_normal(2_000_000) ** 2
        oracle = np.mean(np.log(0.3 * z2 + 0.6))
        assert estimate_lyapunov(spec, gaussian, 500_000, seed=3) == pytest.approx(oracle, abs=0.01)

    def test_reproducible(self, gaussian):
        spec = GarchSpec(0.1, (0.1,), (0.8,))
        assert estimate_lyapunov(spec, gaussian, 5000, seed=4) == estimate_lyapunov(spec, gaussian, 5000, seed=4)


class TestIdentifiability:
    def test_arch1_passes(self):
        assert check_identifiability(GarchSpec(1.0, (0.5,))).ok

    def test_zero_alpha_fails(self):
        rep = check_identifiability(GarchSpec(1.0, (0.0,), (0.5,)))
        assert not rep.alpha_poly_nonzero_at_one
        assert not rep.ok

    def test_garch11_passes(self):
        rep = check_identifiability(GarchSpec(1.0, (0.2,), (0.3,)))
        assert rep.ok
        # A(z)/z = 0.2 has no roots; B(z) = 1 - 0.3 z has its root at 10/3
        assert np.roots([-0.3, 1.0])[0] == pytest.approx(10 / 3)

    def test_common_root_nonnegative_coefficients(self):
        # A(z)/z = 0.1 + 0.1 z has root -1; B(z) = 1 - 0.5 z^2 has roots +-sqrt(2)
        assert check_identifiability(GarchSpec(1.0, (0.1, 0.1), (0.0, 0.5))).no_common_roots
        # A(z)/z = 0.5 + 0.5 z (root -1) and B(z) = 1 - z^2 (roots +-1) share z = -1
        rep = check_identifiability(GarchSpec(1.0, (0.5, 0.5), (0.0, 1.0)))
        assert not rep.no_common_roots
        assert not rep.beta_sum_below_one

    def test_last_coefficients(self):
        assert not check_identifiability(GarchSpec(1.0, (0.2, 0.0), (0.3, 0.0))).last_coefficients_nonzero


@settings(max_examples=30, deadline=None)
@given(
    omega=st.floats(0.01, 10.0),
    alpha=st.floats(0.0, 0.6),
    beta=st.floats(0.0, 0.39),
)
def test_simulated_variances_bounded_below(omega, alpha, beta):
    path = simulate(GarchSpec(omega, (alpha,), (beta,)), InnovationDistribution.gaussian(), 200, seed=1)
    assert np.all(path.true_variances >= omega)
