import numpy as np
import pytest

from fluidqoe import (
    DomainError,
    InfeasiblePlayout,
    SimConfig,
    ZeroArrivalState,
    expected_startup_delay,
    prefetch_end_distribution,
    prefetch_times,
    startup_delay_cdf,
    startup_transform,
    validate_model,
)


class TestStartupTransform:
    def test_zero_threshold_is_identity(self, reference_model):
        np.testing.assert_array_equal(
            startup_transform(reference_model, 0.0, 1.0), np.eye(2)
        )

    def test_single_state_deterministic_fill(self):
        m = validate_model([[0.0]], [20.0], 25.0)
        for om in (0.3, 2.0, 1.0 + 1.0j):
            U = startup_transform(m, 100.0, om)
            assert U[0, 0] == pytest.approx(np.exp(-om * 100.0 / 20.0), abs=1e-12)

    def test_identical_rates_reduce_to_single_state(self):
        # fill time is deterministic when every state delivers the same rate
        m = validate_model([[-1.5, 1.5], [2.5, -2.5]], [20.0, 20.0], 25.0)
        for om in (0.2, 1.0, 3.0 + 0.5j):
            U = startup_transform(m, 60.0, om)
            np.testing.assert_allclose(
                U.sum(axis=1), np.exp(-om * 3.0) * np.ones(2), atol=1e-10
            )

    def test_silent_state_rejected(self, onoff_model):
        with pytest.raises(ZeroArrivalState):
            startup_transform(onoff_model, 10.0, 1.0)


class TestStartupDelayCdf:
    def test_zero_before_fastest_fill(self, reference_model):
        # threshold 40 at top rate 30 fps needs at least 4/3 seconds
        U = startup_delay_cdf(reference_model, 40.0, 1.2)
        assert np.all(U == 0.0)

    def test_row_sums_approach_one(self, reference_model):
        U = startup_delay_cdf(reference_model, 40.0, 200.0)
        np.testing.assert_allclose(U.sum(axis=1), 1.0, atol=1e-7)

    def test_stochastic_ordering_in_threshold(self, reference_model):
        # A taller threshold delays pathwise, ordering the delay law itself
        # (row sums).  Individual (start, end-state) entries are not ordered:
        # the end-state mix also changes with the threshold.  High Euler
        # order keeps plateau noise below the 1e-7 comparison band.
        from fluidqoe import InversionParams

        sharp = InversionParams(l=1, m=25, n=70, A=18.4)
        for t in (2.0, 5.0, 10.0):
            u_small = startup_delay_cdf(reference_model, 20.0, t, sharp).sum(axis=1)
            u_large = startup_delay_cdf(reference_model, 50.0, t, sharp).sum(axis=1)
            assert np.all(u_large <= u_small + 1e-7)

    def test_matches_empirical_cdf(self, reference_model):
        delays, _ = prefetch_times(
            reference_model, 40.0, SimConfig(replications=40000, seed=13)
        )
        from fluidqoe import stationary_distribution

        pi = stationary_distribution(reference_model)
        for t in (1.5, 2.0, 3.0, 6.0):
            analytic = float(pi @ startup_delay_cdf(reference_model, 40.0, t).sum(axis=1))
            empirical = float((delays <= t).mean())
            assert analytic == pytest.approx(empirical, abs=0.02)


class TestExpectedStartupDelay:
    def test_single_state_exact(self):
        m = validate_model([[0.0]], [20.0], 25.0)
        assert expected_startup_delay(m, 100.0) == pytest.approx(5.0, abs=1e-9)

    def test_linear_in_threshold(self):
        m = validate_model([[0.0]], [16.0], 25.0)
        d1 = expected_startup_delay(m, 32.0)
        d2 = expected_startup_delay(m, 64.0)
        assert d2 == pytest.approx(2.0 * d1, rel=1e-9)
        assert d1 == pytest.approx(2.0, abs=1e-9)

    def test_matches_survival_integral(self, reference_model):
        from fluidqoe import stationary_distribution

        pi = stationary_distribution(reference_model)
        mean = expected_startup_delay(reference_model, 40.0)
        ts = np.linspace(1e-3, 40.0, 1500)
        survival = [
            1.0 - float(pi @ startup_delay_cdf(reference_model, 40.0, float(t)).sum(axis=1))
            for t in ts
        ]
        assert mean == pytest.approx(np.trapezoid(survival, ts), rel=1e-3)

    def test_matches_monte_carlo(self, reference_model):
        delays, _ = prefetch_times(
            reference_model, 40.0, SimConfig(replications=60000, seed=29)
        )
        mean = expected_startup_delay(reference_model, 40.0)
        assert mean == pytest.approx(float(delays.mean()), rel=0.01)

    def test_explicit_entry_distribution(self, reference_model):
        fast = expected_startup_delay(reference_model, 40.0, [0.0, 1.0])
        slow = expected_startup_delay(reference_model, 40.0, [1.0, 0.0])
        assert fast < slow


class TestPrefetchEndDistribution:
    def test_boundary_identity(self, reference_model):
        np.testing.assert_array_equal(
            prefetch_end_distribution(reference_model, 40.0, 40.0), np.eye(2)
        )

    def test_rows_stochastic(self, reference_model):
        V = prefetch_end_distribution(reference_model, 0.0, 40.0)
        np.testing.assert_allclose(V.sum(axis=1), 1.0, atol=1e-10)
        assert np.all(V >= 0.0) and np.all(V <= 1.0)

    def test_single_state_scalar_one(self):
        m = validate_model([[0.0]], [5.0], 1.0)
        np.testing.assert_array_equal(prefetch_end_distribution(m, 0.0, 10.0), [[1.0]])

    def test_semigroup_property(self, reference_model):
        V_full = prefetch_end_distribution(reference_model, 0.0, 40.0)
        for q in (10.0, 25.0, 39.0):
            left = prefetch_end_distribution(reference_model, 0.0, q)
            right = prefetch_end_distribution(reference_model, q, 40.0)
            np.testing.assert_allclose(left @ right, V_full, atol=1e-9)

    def test_silent_states_censored(self, onoff_model):
        V = prefetch_end_distribution(onoff_model, 0.0, 40.0)
        np.testing.assert_allclose(V, [[1.0, 0.0], [1.0, 0.0]], atol=1e-12)

    def test_matches_empirical_end_states(self, reference_model):
        _, states = prefetch_times(
            reference_model, 40.0, SimConfig(replications=40000, seed=31,
                                             initial_state_mode=0)
        )
        V = prefetch_end_distribution(reference_model, 0.0, 40.0)
        freq = np.bincount(states, minlength=2) / states.size
        np.testing.assert_allclose(V[0], freq, atol=0.01)

    def test_invalid_levels(self, reference_model):
        with pytest.raises(DomainError):
            prefetch_end_distribution(reference_model, 10.0, 5.0)
        with pytest.raises(DomainError):
            prefetch_end_distribution(reference_model, -1.0, 5.0)

    def test_all_silent_unreachable(self):
        m = validate_model([[-1, 1], [2, -2]], [0.0, 0.0], 1.0)
        with pytest.raises(InfeasiblePlayout):
            prefetch_end_distribution(m, 0.0, 10.0)
