"""Concave minorants: tightness, domination, concavity and gradients."""

import numpy as np
import pytest

from ris_see.filters import normalized_columns
from ris_see.model import (Allocation, ChannelSet, Receiver,
                           reflection_gram_diag, secrecy_rate_unclamped,
                           sinr_all, total_power)
from ris_see.surrogates import (DegenerateExpansionError, build_power_state,
                                concave_secrecy_surrogate, f1_eve, f2_bob,
                                grad_f1_eve, grad_f2_bob,
                                log_ratio_lower_bound, power_numerator_exact,
                                power_objective_exact, power_surrogate,
                                power_surrogate_numerator,
                                rate_surrogate_coeffs, trace_linearization)

from conftest import make_instance, random_allocation, random_feasible_gamma


def surrogate_setup(seed, **kwargs):
    rng = np.random.default_rng(seed)
    params, channels = make_instance(seed, **kwargs)
    alloc = random_allocation(rng, params, channels)
    alloc = alloc.with_filters(normalized_columns(alloc.C_B),
                               normalized_columns(alloc.C_E))
    coeffs = rate_surrogate_coeffs(alloc, channels, params, alloc.gamma)
    return rng, params, channels, alloc, coeffs


def stable_central_diff(which, state, p0, e, h):
    """Central difference of the log-sum terms, evaluated per term as a
    log ratio so the huge constant offsets cancel exactly instead of
    losing them to floating-point subtraction."""
    if which == "f2b":
        a, d = state.a_bob.copy(), state.d_bob
        np.fill_diagonal(a, 0.0)
    else:
        a, d = state.a_eve, state.d_eve
    den = lambda p: d + a @ p
    ratio = den(p0 + e) / den(p0 - e)
    return float(np.sum(np.log(ratio))) / (np.log(2.0) * 2 * h)


class TestLogRatioLowerBound:
    def test_tight_at_expansion_point(self):
        np.testing.assert_allclose(log_ratio_lower_bound(1, 1, 1, 1), np.log(2.0))
        np.testing.assert_allclose(log_ratio_lower_bound(0.3, 2.1, 0.3, 2.1),
                                   np.log(1 + 0.3 / 2.1), rtol=1e-14)

    def test_hand_case(self):
        got = log_ratio_lower_bound(4.0, 1.0, 1.0, 1.0)
        np.testing.assert_allclose(got, np.log(2.0) + 0.5, rtol=1e-14)
        assert got <= np.log(5.0)

    def test_monte_carlo_domination(self, rng):
        x, y, xb, yb = rng.uniform(1e-3, 1e3, size=(4, 100_000))
        s = xb / yb
        bound = np.log1p(s) + s * (2 * np.sqrt(x / xb) - (x + y) / (xb + yb) - 1)
        assert np.all(bound <= np.log1p(x / y) + 1e-12)

    def test_positive_arguments_required(self):
        with pytest.raises(ValueError):
            log_ratio_lower_bound(0.0, 1.0, 1.0, 1.0)


class TestRateSurrogateCoeffs:
    def test_b_bar_equals_sinr(self):
        _, params, channels, alloc, coeffs = surrogate_setup(21)
        for rc, receiver in ((coeffs.bob, Receiver.BOB), (coeffs.eve, Receiver.EVE)):
            np.testing.assert_allclose(
                rc.b_bar, sinr_all(alloc, channels, params, receiver), rtol=1e-12)

    def test_f_bar_identity(self):
        _, params, channels, alloc, coeffs = surrogate_setup(22)
        for rc, s2 in ((coeffs.bob, params.sigma2_B), (coeffs.eve, params.sigma2_E)):
            np.testing.assert_allclose(rc.f_bar, rc.e_bar * s2 * rc.cnorm2 + 1.0,
                                       rtol=1e-14)

    def test_d_bar_definition(self):
        _, params, channels, alloc, coeffs = surrogate_setup(23)
        for rc in (coeffs.bob, coeffs.eve):
            sig = np.abs(np.diagonal(rc.s_bar))
            np.testing.assert_allclose(rc.d_bar * sig, 2.0, rtol=1e-12)

    def test_scalar_case(self):
        from conftest import make_params
        params = make_params(K=1, N=1, N_B=1, N_E=1, sigma2_ris=0.0,
                             p_r_max_w=1.0)
        channels = ChannelSet(h=np.ones((1, 1)), G_B=np.ones((1, 1)),
                              G_E=np.ones((1, 1)) * 0.5)
        alloc = Allocation(gamma=[1.0], p=[params.sigma2_B], C_B=[[1.0]],
                           C_E=[[1.0]])
        coeffs = rate_surrogate_coeffs(alloc, channels, params, alloc.gamma)
        np.testing.assert_allclose(coeffs.bob.b_bar, [1.0], rtol=1e-12)
        np.testing.assert_allclose(coeffs.bob.a_bar, [1.0], rtol=1e-12)

    def test_degenerate_expansion_raises(self):
        rng, params, channels, alloc, _ = surrogate_setup(24, K=1)
        # craft a gamma orthogonal to the Bob-side folded vector
        U = channels.G_B.conj().T @ alloc.C_B
        v = channels.h[0].conj() * U[:, 0]
        gamma = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        gamma -= (v.conj() @ gamma) / (v.conj() @ v) * v
        with pytest.raises(DegenerateExpansionError):
            rate_surrogate_coeffs(alloc, channels, params, gamma)

    def test_zero_power_user_is_inactive(self):
        rng, params, channels, alloc, _ = surrogate_setup(25)
        alloc = alloc.with_p(np.array([0.0, alloc.p[1]]))
        coeffs = rate_surrogate_coeffs(alloc, channels, params, alloc.gamma)
        assert not coeffs.bob.active[0] and coeffs.bob.active[1]
        assert coeffs.bob.a_bar[0] == 0.0 and coeffs.bob.b_bar[0] == 0.0


class TestConcaveSecrecySurrogate:
    def test_tight_at_expansion_point(self):
        for seed in range(26, 31):
            _, params, channels, alloc, coeffs = surrogate_setup(seed)
            val, _ = concave_secrecy_surrogate(alloc.gamma, coeffs, alloc,
                                               channels, params)
            want = secrecy_rate_unclamped(alloc, channels, params)
            np.testing.assert_allclose(val, want, atol=1e-8, rtol=1e-10)

    def test_minorant_on_sampled_feasible_points(self):
        rng, params, channels, alloc, coeffs = surrogate_setup(31, N=8)
        r = reflection_gram_diag(channels, alloc.p, params)
        tr_r = float(np.sum(r))
        gammas = random_feasible_gamma(rng, r, tr_r, tr_r + params.P_R_max,
                                       size=2000)
        for gamma in gammas:
            val, _ = concave_secrecy_surrogate(gamma, coeffs, alloc, channels,
                                               params)
            exact = secrecy_rate_unclamped(alloc.with_gamma(gamma), channels,
                                           params)
            assert val <= exact + 1e-9

    def test_midpoint_concavity(self):
        rng, params, channels, alloc, coeffs = surrogate_setup(32)
        r = reflection_gram_diag(channels, alloc.p, params)
        tr_r = float(np.sum(r))

        def val(g):
            return concave_secrecy_surrogate(g, coeffs, alloc, channels, params)[0]

        for _ in range(200):
            g1 = random_feasible_gamma(rng, r, tr_r, tr_r + params.P_R_max)
            g2 = random_feasible_gamma(rng, r, tr_r, tr_r + params.P_R_max)
            t = rng.uniform(0.1, 0.9)
            mid = t * g1 + (1 - t) * g2
            assert val(mid) >= t * val(g1) + (1 - t) * val(g2) - 1e-9

    def test_gradient_matches_directional_differences(self):
        rng, params, channels, alloc, coeffs = surrogate_setup(33)

        def val(g):
            return concave_secrecy_surrogate(g, coeffs, alloc, channels, params)[0]

        gamma0 = alloc.gamma
        _, grad = concave_secrecy_surrogate(gamma0, coeffs, alloc, channels,
                                            params)
        h = 1e-6 * float(np.linalg.norm(gamma0))
        for _ in range(10):
            d = rng.standard_normal(16) + 1j * rng.standard_normal(16)
            d /= np.linalg.norm(d)
            fd = (val(gamma0 + h * d) - val(gamma0 - h * d)) / (2 * h)
            analytic = 2.0 * float(np.real(np.vdot(grad, d)))
            np.testing.assert_allclose(analytic, fd, rtol=1e-5, atol=1e-10)

    def test_dimension_mismatch_raises(self):
        _, params, channels, alloc, coeffs = surrogate_setup(34)
        with pytest.raises(ValueError):
            concave_secrecy_surrogate(np.ones(4), coeffs, alloc, channels, params)


class TestTraceLinearization:
    def test_exact_at_expansion(self, rng):
        R = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        R = R @ R.conj().T
        g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        np.testing.assert_allclose(trace_linearization(g, g, R),
                                   np.real(g.conj() @ R @ g), rtol=1e-12)

    def test_unit_basis_hand_case(self):
        R = np.eye(2)
        e1, e2 = np.eye(2)[:, 0], np.eye(2)[:, 1]
        got = trace_linearization(e2, e1, R)
        np.testing.assert_allclose(got, -1.0)
        assert got <= np.real(e2 @ R @ e2)

    def test_psd_residual_identity(self, rng):
        for _ in range(50):
            A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
            R = A @ A.conj().T
            g = rng.standard_normal(5) + 1j * rng.standard_normal(5)
            gb = rng.standard_normal(5) + 1j * rng.standard_normal(5)
            lin = trace_linearization(g, gb, R)
            quad = float(np.real(g.conj() @ R @ g))
            resid = float(np.real((g - gb).conj() @ R @ (g - gb)))
            np.testing.assert_allclose(quad - lin, resid, rtol=1e-10, atol=1e-12)
            assert quad >= lin - 1e-9 * max(1.0, abs(quad))


class TestPowerState:
    def test_unit_modulus_keeps_mu(self):
        rng, params, channels, alloc, _ = surrogate_setup(35, sigma2_ris=0.0)
        theta = rng.uniform(0, 2 * np.pi, params.N)
        alloc = alloc.with_gamma(np.exp(1j * theta))
        state = build_power_state(alloc, channels, params)
        np.testing.assert_allclose(state.mu_eq, params.mu, rtol=1e-12)

    def test_affine_identity_with_total_power(self):
        rng, params, channels, alloc, _ = surrogate_setup(36)
        state = build_power_state(alloc, channels, params)
        for _ in range(5):
            p = rng.uniform(0, 1, params.K)
            den = float(state.mu_eq @ p) + state.p_c_eq
            want = total_power(alloc.with_p(p), channels, params)
            np.testing.assert_allclose(den, want, rtol=1e-10)

    def test_zero_power_denominator(self):
        _, params, channels, alloc, _ = surrogate_setup(37)
        state = build_power_state(alloc, channels, params)
        den0 = state.p_c_eq
        want = total_power(alloc.with_p(np.zeros(params.K)), channels, params)
        np.testing.assert_allclose(den0, want, rtol=1e-10)

    def test_nearly_passive_state(self):
        from ris_see.model import RisMode
        rng = np.random.default_rng(38)
        params, channels = make_instance(38, ris_mode=RisMode.NEARLY_PASSIVE)
        alloc = random_allocation(rng, params, channels)
        state = build_power_state(alloc, channels, params)
        np.testing.assert_allclose(state.mu_eq, params.mu)
        np.testing.assert_allclose(state.p_c_eq, params.P_c)


class TestPowerSurrogate:
    def test_tight_at_expansion(self):
        from ris_see.model import see
        _, params, channels, alloc, _ = surrogate_setup(39)
        state = build_power_state(alloc, channels, params)
        val, _ = power_surrogate(alloc.p, state)
        np.testing.assert_allclose(val, power_objective_exact(alloc.p, state),
                                   rtol=1e-12)
        # equals the clamped SEE/B here because the secrecy rate is positive
        see_b = see(alloc, channels, params) / params.bandwidth_hz
        if see_b > 0:
            np.testing.assert_allclose(val, see_b, rtol=1e-10)

    def test_minorant_on_box_samples(self):
        rng, params, channels, alloc, _ = surrogate_setup(40)
        state = build_power_state(alloc, channels, params)
        for _ in range(2000):
            p = rng.uniform(0, 1, params.K) * params.P_max
            assert (power_surrogate_numerator(p, state)
                    <= power_numerator_exact(p, state) + 1e-9)

    def test_gradients_match_finite_differences(self):
        rng, params, channels, alloc, _ = surrogate_setup(41)
        state = build_power_state(alloc, channels, params)
        p0 = alloc.p
        h = 1e-6
        for which, grad_fn in (("f2b", grad_f2_bob), ("f1e", grad_f1_eve)):
            g = grad_fn(p0, state)
            for j in range(params.K):
                e = np.zeros(params.K)
                e[j] = h
                fd = stable_central_diff(which, state, p0, e, h)
                np.testing.assert_allclose(g[j], fd, rtol=1e-5)

    def test_analytic_stationary_point_shape(self):
        """K=1 with no eavesdropper and unit coefficients: the surrogate
        reduces to log2(1+p)/(1+p), maximized at p = e - 1."""
        from ris_see.surrogates import PowerSurrogateState
        state = PowerSurrogateState(
            expansion_point_p=np.array([1.0]),
            a_bob=np.array([[1.0]]), a_eve=np.array([[0.0]]),
            d_bob=np.array([1.0]), d_eve=np.array([1.0]),
            mu_eq=np.array([1.0]), p_c_eq=1.0)
        p_grid = np.linspace(1e-6, 10, 200_001)
        vals = np.log2(1 + p_grid) / (1 + p_grid)
        p_star = p_grid[int(np.argmax(vals))]
        np.testing.assert_allclose(p_star, np.e - 1.0, atol=1e-4)
        got = [power_objective_exact(np.array([p]), state)
               for p in (p_star, np.e - 1.0)]
        np.testing.assert_allclose(got[0], np.log2(np.e) / np.e, atol=1e-8)

    def test_nonpositive_denominator_raises(self):
        from ris_see.surrogates import PowerSurrogateState
        state = PowerSurrogateState(
            expansion_point_p=np.array([1.0]),
            a_bob=np.array([[1.0]]), a_eve=np.array([[0.0]]),
            d_bob=np.array([1.0]), d_eve=np.array([1.0]),
            mu_eq=np.array([-2.0]), p_c_eq=1.0)
        with pytest.raises(ValueError, match="denominator"):
            power_surrogate(np.array([1.0]), state)
