"""Moment solvers against independent references and closed forms."""

import numpy as np
import pytest

from qgd import (
    ChannelSet,
    DegenerateSpectrumWarning,
    DimensionError,
    DivergenceError,
    DomainError,
    EvolutionProblem,
    GaussianBaseline,
    GaussianMoments,
    NormalizationError,
    NotNormalError,
    NotPassiveError,
    NotSymplecticError,
    ResonanceError,
    TermBudgetError,
    UnitaryChannel,
    check_uncertainty,
    classify_asymptotics,
    ode_evolve,
    rotation_generator,
    series_evolve,
    spectral_evolve,
    stationary_state,
    vacuum_moments,
)

import oracles


def two_channel_mix():
    """A rotation mixed with a mild squeeze, weights 0.6 / 0.4."""
    rot = UnitaryChannel.from_generator(0.6, rotation_generator(0.9))
    sq = UnitaryChannel.from_generator(0.4, np.array([[0.3, 0.0], [0.0, -0.3]]))
    return ChannelSet((rot, sq))


class TestChannelConstruction:
    def test_weight_bounds(self):
        with pytest.raises(NormalizationError):
            UnitaryChannel(weight=0.0, kick=np.eye(2))
        with pytest.raises(NormalizationError):
            UnitaryChannel(weight=1.5, kick=np.eye(2))

    def test_kick_must_be_symplectic(self):
        with pytest.raises(NotSymplecticError):
            UnitaryChannel(weight=1.0, kick=2.0 * np.eye(2))

    def test_generator_kick_consistency(self):
        with pytest.raises(NotSymplecticError):
            UnitaryChannel(
                weight=1.0, kick=np.eye(2), generator=rotation_generator(0.3)
            )

    def test_weights_must_normalize(self):
        half = UnitaryChannel(weight=0.5, kick=np.eye(2))
        with pytest.raises(NormalizationError):
            ChannelSet((half,))

    def test_empty_set_rejected(self):
        with pytest.raises(NormalizationError):
            ChannelSet(())

    def test_mixed_dimensions_rejected(self):
        a = UnitaryChannel(weight=0.5, kick=np.eye(2))
        b = UnitaryChannel(weight=0.5, kick=np.eye(4))
        with pytest.raises(DimensionError):
            ChannelSet((a, b))

    def test_from_generator_round_trip(self):
        s = rotation_generator(0.4)
        channels = ChannelSet.from_generator(s)
        assert len(channels.channels) == 1
        assert channels.channels[0].weight == 1.0
        np.testing.assert_allclose(channels.channels[0].generator, s)


class TestSeriesEvolve:
    """Poisson expansion against literal sequence enumeration."""

    def test_single_channel_matches_enumeration(self):
        channels = ChannelSet.from_generator(
            np.array([[0.4, 0.1], [0.1, -0.4]])
        )
        v0 = np.diag([0.9, 0.5])
        xi0 = np.array([0.3, -0.1])
        got = series_evolve(channels, v0, xi0, 0.8, tol=1e-13)
        v_ref, xi_ref = oracles.enumerate_jump_series(
            [1.0], channels.kicks, v0, xi0, 0.8, kmax=30
        )
        np.testing.assert_allclose(got.cov, v_ref, atol=1e-11)
        np.testing.assert_allclose(got.mean, xi_ref, atol=1e-11)

    def test_two_channels_match_enumeration(self):
        channels = two_channel_mix()
        v0 = np.diag([1.1, 0.6])
        xi0 = np.array([-0.4, 0.2])
        got = series_evolve(channels, v0, xi0, 0.4, tol=1e-13)
        v_ref, xi_ref = oracles.enumerate_jump_series(
            channels.weights, channels.kicks, v0, xi0, 0.4, kmax=12
        )
        np.testing.assert_allclose(got.cov, v_ref, atol=1e-10)
        np.testing.assert_allclose(got.mean, xi_ref, atol=1e-10)

    def test_time_zero_returns_initial(self):
        channels = two_channel_mix()
        got = series_evolve(channels, np.diag([1.0, 0.7]), None, 0.0)
        np.testing.assert_array_equal(got.cov, np.diag([1.0, 0.7]))

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            series_evolve(two_channel_mix(), np.eye(2), None, -0.1)

    def test_term_budget_guard(self):
        with pytest.raises(TermBudgetError):
            series_evolve(two_channel_mix(), np.eye(2), None, 30.0, max_terms=100)

    def test_output_is_physical(self):
        got = series_evolve(two_channel_mix(), 0.5 * np.eye(2), None, 2.0)
        assert check_uncertainty(got.cov, tol=1e-9)


class TestOdeEvolve:
    def test_matches_rk4_reference(self):
        channels = two_channel_mix()
        v0 = np.diag([1.2, 0.5])
        xi0 = np.array([0.5, 0.3])
        problem = EvolutionProblem(
            channels, GaussianMoments(v0, xi0), np.array([1.0])
        )
        got = ode_evolve(problem, rtol=1e-11, atol=1e-13)[0]
        v_ref, xi_ref = oracles.rk4_moments(
            channels.weights, channels.kicks, v0, xi0, 1.0, n_steps=4000
        )
        np.testing.assert_allclose(got.cov, v_ref, atol=1e-9)
        np.testing.assert_allclose(got.mean, xi_ref, atol=1e-9)

    def test_matches_series_on_grid(self):
        channels = two_channel_mix()
        times = np.linspace(0.0, 1.5, 7)
        problem = EvolutionProblem(channels, vacuum_moments(1), times)
        ode_out = ode_evolve(problem, rtol=1e-11, atol=1e-13)
        for t, moments in zip(times, ode_out):
            ref = series_evolve(channels, 0.5 * np.eye(2), None, float(t), tol=1e-12)
            np.testing.assert_allclose(moments.cov, ref.cov, atol=1e-9)

    def test_damping_baseline_closed_form(self):
        """Linear loss drives any state to the vacuum at rate kappa."""
        kappa = 0.8
        coupling = np.sqrt(kappa / 2.0) * np.array([[1.0, 1j]])
        baseline = GaussianBaseline(
            hamiltonian=np.zeros((2, 2)), coupling=coupling
        )
        identity = ChannelSet((UnitaryChannel(weight=1.0, kick=np.eye(2)),))
        v0 = np.diag([1.3, 0.4])
        xi0 = np.array([0.7, -0.2])
        t = 1.1
        problem = EvolutionProblem(
            identity, GaussianMoments(v0, xi0), np.array([t]), baseline=baseline
        )
        got = ode_evolve(problem, rtol=1e-11, atol=1e-13)[0]
        decay = np.exp(-kappa * t)
        np.testing.assert_allclose(
            got.cov, decay * v0 + (1.0 - decay) * 0.5 * np.eye(2), atol=1e-9
        )
        np.testing.assert_allclose(got.mean, np.sqrt(decay) * xi0, atol=1e-10)

    def test_rotation_baseline_closed_form(self):
        omega = 1.3
        baseline = GaussianBaseline(hamiltonian=omega * np.eye(2))
        identity = ChannelSet((UnitaryChannel(weight=1.0, kick=np.eye(2)),))
        v0 = np.diag([1.0, 0.25])
        t = 0.9
        problem = EvolutionProblem(
            identity, GaussianMoments(v0), np.array([t]), baseline=baseline
        )
        got = ode_evolve(problem, rtol=1e-11, atol=1e-13)[0]
        c, s = np.cos(omega * t), np.sin(omega * t)
        rot = np.array([[c, s], [-s, c]])
        np.testing.assert_allclose(got.cov, rot @ v0 @ rot.T, atol=1e-9)

    def test_divergent_scenario_flagged(self):
        channels = ChannelSet.from_generator(np.diag([1.0, -1.0]))
        problem = EvolutionProblem(
            channels, vacuum_moments(1), np.array([40.0])
        )
        with pytest.raises(DivergenceError):
            ode_evolve(problem)

    def test_times_must_increase(self):
        with pytest.raises(DomainError):
            EvolutionProblem(
                two_channel_mix(), vacuum_moments(1), np.array([0.0, 0.0])
            )


class TestSpectralEvolve:
    def test_matches_series_for_single_channel(self):
        s = np.array([[0.4, 0.1], [0.1, -0.4]])
        channels = ChannelSet.from_generator(s)
        v0 = np.diag([0.8, 0.6])
        xi0 = np.array([0.2, -0.3])
        for t in (0.3, 1.0, 2.0):
            got = spectral_evolve(s, v0, t, xi0=xi0)
            ref = series_evolve(channels, v0, xi0, t, tol=1e-13)
            np.testing.assert_allclose(got.cov, ref.cov, atol=1e-10)
            np.testing.assert_allclose(got.mean, ref.mean, atol=1e-10)

    def test_vacuum_invariant_under_rotation(self):
        got = spectral_evolve(rotation_generator(1.1), 0.5 * np.eye(2), 3.0)
        np.testing.assert_allclose(got.cov, 0.5 * np.eye(2), atol=1e-12)

    def test_rejects_non_normal_generator(self):
        # JS for this S has nilpotent structure, so the spectral law is
        # unavailable and the solver must say so rather than guess.
        s = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(NotNormalError):
            spectral_evolve(s, 0.5 * np.eye(2), 1.0)

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            spectral_evolve(rotation_generator(0.5), np.eye(2), -1.0)


class TestAsymptotics:
    def test_rotation_is_oscillatory(self):
        report = classify_asymptotics(rotation_generator(0.7))
        assert set(report.labels.ravel()) == {"oscillatory", "decaying"}
        assert not report.flagged.any()

    def test_squeeze_has_divergent_pairs(self):
        s = 0.5 * np.fliplr(np.eye(4))
        report = classify_asymptotics(s)
        assert (report.labels == "divergent").any()
        assert report.zeta.max() == pytest.approx(np.exp(1.0), rel=1e-10)

    def test_rotation_stationary_state(self):
        v_inf = stationary_state(rotation_generator(0.7), np.diag([2.0, 1.0]))
        np.testing.assert_allclose(v_inf, 1.5 * np.eye(2), atol=1e-10)

    def test_stationary_rejects_active_channel(self):
        with pytest.raises(NotPassiveError):
            stationary_state(np.diag([0.5, -0.5]), 0.5 * np.eye(2))

    def test_resonant_pair_rejected(self):
        s = rotation_generator([0.5, 0.5 + 2.0 * np.pi])
        with pytest.raises(ResonanceError):
            stationary_state(s, 0.5 * np.eye(4))

    def test_degenerate_spectrum_warns(self):
        s = rotation_generator([0.5, 0.5])
        v0 = np.diag([2.0, 1.0, 1.0, 2.0])
        with pytest.warns(DegenerateSpectrumWarning):
            v_inf = stationary_state(s, v0)
        assert check_uncertainty(v_inf, tol=1e-9)


class TestRotationGenerator:
    def test_interleaved_layout(self):
        s = rotation_generator([0.3, 0.7])
        np.testing.assert_allclose(s, np.diag([0.3, 0.3, 0.7, 0.7]))

    def test_scalar_input(self):
        np.testing.assert_allclose(rotation_generator(0.3), 0.3 * np.eye(2))
