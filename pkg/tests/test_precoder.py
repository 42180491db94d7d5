import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ceprecode import (
    CEPrecoder,
    ChannelMatrix,
    DimensionError,
    PhaseVector,
    PowerConfig,
    PrecoderConfig,
    RankDeficiencyError,
    ZFPhaseOnlyPrecoder,
    ce_phase_update,
    ce_precode,
    generate_channel,
    objective,
    zf_phase_only_precode,
    zf_receiver_scale,
)
from ceprecode._util import wrap_phase
from ceprecode.metrics import mui_table, optimize_energy_table
from ceprecode.params import MonteCarloParams
from ceprecode.precoder import ZFMoments, best_zf_scale, zf_moments, zf_pseudo_inverse

from oracles import grid_minimum_n3, objective_loops

# Exhaustive 2pi/256 grid minimum for the seed-11 1x3 channel and the
# 16-QAM corner symbol (3+3j)/sqrt(10), computed by grid_minimum_n3.
GRID_MIN_SEED11 = 0.1174490217005391


def _instance(seed, M, N):
    rng = np.random.default_rng(seed)
    H = generate_channel(M, N, seed).entries
    u = (rng.standard_normal(M) + 1j * rng.standard_normal(M)) * rng.uniform(0.1, 3.0)
    theta = rng.uniform(-np.pi, np.pi, N)
    return H, u, theta


instances = st.tuples(st.integers(0, 2**32), st.integers(1, 6), st.integers(0, 20)).map(
    lambda t: (t[0], t[1], t[1] + t[2])
)


class TestPhaseVector:
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20))
    def test_canonical_range(self, values):
        p = PhaseVector(values).phases
        assert np.all(p >= -np.pi) and np.all(p < np.pi)
        np.testing.assert_allclose(np.exp(1j * p), np.exp(1j * np.asarray(values)), atol=1e-6)

    def test_pi_maps_to_minus_pi(self):
        assert wrap_phase(np.pi) == -np.pi
        assert wrap_phase(-np.pi) == -np.pi
        assert wrap_phase(3 * np.pi) == -np.pi

    def test_read_only(self):
        with pytest.raises(ValueError):
            PhaseVector([0.0, 1.0]).phases[0] = 2.0


class TestObjective:
    def test_scalar_aligned(self):
        assert objective([[1.0]], [0.0], [1.0]) == 0.0

    def test_scalar_opposed(self):
        assert objective([[1.0]], [np.pi], [1.0]) == pytest.approx(4.0, abs=1e-15)

    def test_matches_term_by_term_oracle(self):
        H = generate_channel(2, 3, 7).entries
        u = np.array([0.3 - 0.4j, -1.1 + 0.2j])
        assert objective(H, np.zeros(3), u) == pytest.approx(objective_loops(H, np.zeros(3), u), rel=1e-13)

    @given(instances)
    @settings(max_examples=50, deadline=None)
    def test_matches_oracle_random(self, inst):
        H, u, theta = _instance(*inst)
        assert objective(H, theta, u) == pytest.approx(objective_loops(H, theta, u), rel=1e-11, abs=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            objective(np.ones((2, 3)), np.zeros(4), np.ones(2))
        with pytest.raises(DimensionError):
            objective(np.ones((2, 3)), np.zeros(3), np.ones(3))

    def test_accepts_symbol_vector_and_channel_matrix(self):
        from ceprecode import sample_symbols

        ch = generate_channel(2, 4, 1)
        v = sample_symbols("qam16", [1.0, 4.0], 2)
        assert objective(ch, PhaseVector(np.zeros(4)), v) == pytest.approx(
            objective_loops(ch.entries, np.zeros(4), v.scaled_symbols), rel=1e-13
        )


class TestPhaseUpdate:
    def test_scalar_alignment(self):
        theta = ce_phase_update([[1.0]], [2.0], [1.0], 0)
        assert wrap_phase(theta) == pytest.approx(0.0, abs=1e-15)
        assert objective([[1.0]], [theta], [1.0]) == pytest.approx(0.0, abs=1e-30)

    def test_scalar_rotated_channel(self):
        theta = ce_phase_update([[np.exp(1j * np.pi / 4)]], [0.0], [1.0], 0)
        assert theta == pytest.approx(-np.pi / 4, abs=1e-15)

    def test_two_antennas_against_dense_grid(self):
        H = np.array([[1.0, 1.0]])
        u = np.array([np.sqrt(2.0)])
        theta = np.array([np.pi / 2, 0.0])
        new = ce_phase_update(H, theta, u, 0)
        assert wrap_phase(new) == pytest.approx(0.0, abs=1e-12)
        grid = -np.pi + 2 * np.pi * np.arange(1_000_000) / 1_000_000
        g_grid = np.abs((np.exp(1j * grid) + 1.0) / np.sqrt(2) - u[0]) ** 2
        g_new = objective(H, [new, 0.0], u)
        assert g_new <= g_grid.min() + 1e-15

    def test_zero_sum_keeps_phase(self):
        # a = conj(h_q)/sqrt(N) * (others - u) vanishes when others == u
        H = np.array([[1.0, 1.0]])
        u = np.array([np.exp(0.3j) / np.sqrt(2)])
        theta = np.array([1.234, 0.3])
        assert ce_phase_update(H, theta, u, 0) == pytest.approx(1.234, abs=1e-15)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            ce_phase_update(np.ones((1, 2)), np.zeros(2), [1.0], 2)

    @given(instances, st.integers(0, 10**6))
    @settings(max_examples=100, deadline=None)
    def test_beats_256_candidates(self, inst, qseed):
        H, u, theta = _instance(*inst)
        q = qseed % H.shape[1]
        best = objective(H, np.where(np.arange(H.shape[1]) == q, ce_phase_update(H, theta, u, q), theta), u)
        cand = -np.pi + 2 * np.pi * np.arange(256) / 256
        trial = np.repeat(theta[None, :], 256, axis=0)
        trial[:, q] = cand
        g = np.sum(np.abs(np.exp(1j * trial) @ H.T / np.sqrt(H.shape[1]) - u) ** 2, axis=1)
        assert best <= g.min() + 1e-10 * (1 + g.min())

    def test_kernel_agrees_with_literal_update(self):
        H, u, _ = _instance(5, 3, 7)
        res = ce_precode(H, u, PrecoderConfig(max_outer_iterations=1, objective_tolerance=0.0))
        theta = np.zeros(7)
        for q in range(7):
            new = ce_phase_update(H, theta, u, q)
            if objective(H, np.where(np.arange(7) == q, new, theta), u) <= objective(H, theta, u):
                theta[q] = new
        np.testing.assert_allclose(np.exp(1j * res.phases.phases), np.exp(1j * theta), atol=1e-10)


class TestCePrecode:
    def test_exactly_representable(self):
        res = ce_precode(np.array([[1.0, 1.0]]), np.array([np.sqrt(2.0)]))
        assert res.objective < 1e-20
        np.testing.assert_allclose(np.exp(1j * res.phases.phases), [1.0, 1.0], atol=1e-10)

    def test_grid_oracle_n3(self):
        h = generate_channel(1, 3, 11).entries[0]
        u = (3 + 3j) / np.sqrt(10)
        assert grid_minimum_n3(h, u) == pytest.approx(GRID_MIN_SEED11, rel=1e-12)
        res = ce_precode(h[None, :], np.array([u]))
        assert res.objective <= GRID_MIN_SEED11 + 1e-3

    @given(instances)
    @settings(max_examples=100, deadline=None)
    def test_monotone_trace_and_consistent_result(self, inst):
        H, u, _ = _instance(*inst)
        M, N = H.shape
        res = ce_precode(H, u)
        trace = np.concatenate([[objective(H, np.zeros(N), u)], res.objective_trace])
        assert np.all(np.diff(trace) <= 0)
        assert res.objective_trace.size == res.outer_iterations_used * N
        assert res.objective == pytest.approx(float(np.sum(np.abs(res.residuals) ** 2)), rel=1e-10, abs=1e-300)
        assert res.objective == pytest.approx(objective(H, res.phases, u), rel=1e-10, abs=1e-14)
        assert res.objective <= res.objective_trace[-1] * (1 + 1e-9) + 1e-14

    def test_stationary_at_termination(self):
        for seed in range(20):
            H, u, _ = _instance(seed, 4, 24)
            cfg = PrecoderConfig(max_outer_iterations=1000)
            res = ce_precode(H, u, cfg)
            assert res.outer_iterations_used < 1000
            again = ce_precode(H, u, PrecoderConfig(max_outer_iterations=1, initial_phases=res.phases))
            assert res.objective - again.objective < cfg.tolerance_for(4)

    def test_early_stop_and_max_iterations(self):
        H, u, _ = _instance(3, 4, 32)
        assert ce_precode(H, u, PrecoderConfig(max_outer_iterations=1)).outer_iterations_used == 1
        loose = ce_precode(H, u, PrecoderConfig(max_outer_iterations=50, objective_tolerance=1e3))
        assert loose.outer_iterations_used == 1

    def test_global_phase_covariance(self):
        H, u, theta0 = _instance(8, 3, 12)
        phi = 0.7
        base = ce_precode(H, u, PrecoderConfig(initial_phases=theta0))
        rot = ce_precode(H * np.exp(1j * phi), u, PrecoderConfig(initial_phases=theta0 - phi))
        np.testing.assert_allclose(np.exp(1j * rot.phases.phases), np.exp(1j * (base.phases.phases - phi)),
                                   atol=1e-9)
        assert rot.objective == pytest.approx(base.objective, rel=1e-9, abs=1e-14)
        np.testing.assert_allclose(rot.objective_trace, base.objective_trace, rtol=1e-9, atol=1e-14)

    def test_residual_decays_with_antennas(self):
        u = np.array([0.5 + 0.5j, -0.3j, 0.9])
        g = [np.mean([ce_precode(generate_channel(3, N, s), u).objective for s in range(20)]) for N in (6, 48)]
        assert g[1] < g[0]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PrecoderConfig(max_outer_iterations=0)
        with pytest.raises(ValueError):
            PrecoderConfig(objective_tolerance=-1.0)
        assert PrecoderConfig().tolerance_for(12) == pytest.approx(1.2e-7)


class TestZeroForcing:
    def test_identity_channel(self):
        u = np.exp(1j * np.array([np.pi / 3, -2.0, 0.5]))
        np.testing.assert_allclose(zf_phase_only_precode(np.eye(3), u).phases, np.angle(u), atol=1e-14)

    def test_single_row(self):
        H = np.array([[1.0, 1j]])
        np.testing.assert_allclose(zf_pseudo_inverse(H)[:, 0], [0.5, -0.5j], atol=1e-15)
        np.testing.assert_allclose(zf_phase_only_precode(H, [1.0]).phases, [0.0, -np.pi / 2], atol=1e-14)

    def test_pseudo_inverse_identity(self):
        H = generate_channel(2, 4, 13).entries
        u = np.array([0.7 - 0.1j, -0.2 + 1.3j])
        np.testing.assert_allclose(H @ (zf_pseudo_inverse(H) @ u), u, atol=1e-9)

    @given(instances)
    @settings(max_examples=50, deadline=None)
    def test_pseudo_inverse_identity_random(self, inst):
        H, u, _ = _instance(*inst)
        np.testing.assert_allclose(H @ (zf_pseudo_inverse(H) @ u), u, atol=1e-9 * (1 + np.abs(u).max()) * 1e3)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficiencyError):
            zf_pseudo_inverse(np.ones((2, 4)))
        with pytest.raises(RankDeficiencyError):
            zf_pseudo_inverse(np.array([[1.0, 0.0], [1.0, 1e-9]]))


class TestZfReceiverScale:
    def test_scalar_unit_channel_closed_form(self):
        # |h| = 1, single user: v = e^{j arg u}, so signal = 1, cross = E|u|,
        # symbol = E|u|^2. The best scale is (signal + s)/cross and the rate
        # is -log2(symbol - cross^2 / (signal + s)).
        ch = ChannelMatrix(np.array([[np.exp(0.4j)]]))
        m = zf_moments(ch, 1, 1, 1, 4000, seed=3)
        np.testing.assert_allclose(m.signal, 1.0, rtol=1e-12)
        for snr_db in (0.0, 10.0):
            s = 10 ** (-snr_db / 10)
            beta, rate = best_zf_scale(m, s)
            A, B, C = m.signal[0, 0], m.cross[0, 0], m.symbol[0, 0]
            assert beta == pytest.approx((A + s) / B, rel=1e-6)
            assert rate == pytest.approx(-np.log2(C - B * B / (A + s)), rel=1e-9)

    def test_unit_modulus_symbols_reach_awgn_rate(self):
        # Constant-modulus symbols on a unit channel: ZF is exact and the
        # optimal scale gives log2(1 + P_T / sigma^2).
        m = ZFMoments(np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1)))
        for snr in (1.0, 4.0, 100.0):
            beta, rate = best_zf_scale(m, 1 / snr)
            assert beta == pytest.approx(1 + 1 / snr, rel=1e-6)
            assert rate == pytest.approx(np.log2(1 + snr), rel=1e-9)

    def test_local_optimality_on_held_out_trials(self):
        power = PowerConfig.from_snr_db(0.0)
        beta = zf_receiver_scale("iid_rayleigh", 4, 16, power, trials=40, seed=1)
        held = zf_moments("iid_rayleigh", 4, 16, 40, 64, seed=2)
        r = held.ergodic_rate(beta, power.inverse_snr)
        assert r >= held.ergodic_rate(beta / 2, power.inverse_snr)
        assert r >= held.ergodic_rate(2 * beta, power.inverse_snr)

    def test_power_type_checked(self):
        with pytest.raises(TypeError):
            zf_receiver_scale("iid_rayleigh", 2, 4, 1.0, trials=2, seed=0)

    @pytest.mark.slow
    def test_matches_ce_below_three_bpcu_at_large_n(self):
        mc = MonteCarloParams(num_channels=20, num_symbols=20, seed=1)
        table = mui_table("iid_rayleigh", 12, 480, "gaussian", None, None, mc)
        moments = zf_moments("iid_rayleigh", 12, 480, 20, 20, seed=1)
        for snr_db in (-15.0, -12.0, -10.0, -8.0, -6.0):
            inv = 10 ** (-snr_db / 10)
            _, ce_rate, _ = optimize_energy_table(table, inv)
            _, zf_rate = best_zf_scale(moments, inv)
            assert ce_rate < 3.0
            assert abs(ce_rate - zf_rate) < 0.1


class TestEstimators:
    def test_params_round_trip(self):
        est = CEPrecoder(max_outer_iterations=5, objective_tolerance=1e-6)
        assert est.get_params() == {"max_outer_iterations": 5, "objective_tolerance": 1e-6, "initial_phases": None}
        est.set_params(max_outer_iterations=7)
        assert clone(est).max_outer_iterations == 7

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            CEPrecoder().transform([[1.0]])
        with pytest.raises(NotFittedError):
            ZFPhaseOnlyPrecoder().transform([[1.0]])

    def test_fit_transform_predict(self):
        ch = generate_channel(2, 16, 1)
        est = CEPrecoder().fit(ch)
        assert (est.n_users_, est.n_antennas_) == (2, 16)
        U = np.array([[1.0, -1.0j], [0.3, 0.2 + 0.1j]])
        theta = est.transform(U)
        assert theta.shape == (2, 16)
        assert np.all(theta >= -np.pi) and np.all(theta < np.pi)
        y = est.predict(U)
        np.testing.assert_allclose(y, np.exp(1j * theta) @ ch.entries.T / 4.0)
        for row, u in zip(theta, U):
            np.testing.assert_allclose(row, ce_precode(ch, u).phases.phases)
        assert est.score(U) == pytest.approx(-np.mean(np.sum(np.abs(y - U) ** 2, axis=1)), rel=1e-10)
        res = est.precode(U[0])
        assert est.last_result_ is res

    def test_fit_rejects_bad_channel(self):
        with pytest.raises(DimensionError):
            CEPrecoder().fit(np.ones((3, 2)))
        with pytest.raises(DimensionError):
            CEPrecoder().fit(np.ones(3))
        with pytest.raises(DimensionError):
            CEPrecoder().fit(np.ones((2, 4))).transform(np.ones((1, 3)))

    def test_zf_estimator(self):
        H = generate_channel(3, 8, 4).entries
        U = np.array([[1.0, 1j, -1.0]])
        est = ZFPhaseOnlyPrecoder().fit(H)
        np.testing.assert_allclose(est.transform(U)[0], zf_phase_only_precode(H, U[0]).phases)
        assert est.score(U) <= 0
        assert est.get_params() == {}

    def test_ce_beats_zf_phase_only(self):
        H = generate_channel(4, 32, 9).entries
        U = np.array([[1.0, 1j, -1.0, 0.5 - 0.5j]])
        assert CEPrecoder().fit(H).score(U) > ZFPhaseOnlyPrecoder().fit(H).score(U)
