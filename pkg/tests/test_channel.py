import numpy as np
import pytest

from ceprecode import (
    ChannelMatrix,
    ChannelModel,
    DimensionError,
    PowerConfig,
    check_assumptions,
    generate_channel,
    load_channel,
    save_channel,
)
from ceprecode import _rng
from ceprecode.channel import trial_channel


def _box_muller_reference(seed, count):
    # Raw PCG64 uniforms consumed pairwise, row-major, modulus first.
    u = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed))).random(2 * count)
    r = np.sqrt(-np.log(1.0 - u[0::2]))
    return r * np.cos(2 * np.pi * u[1::2]) + 1j * r * np.sin(2 * np.pi * u[1::2])


class TestGenerateChannel:
    def test_scalar_channel_unit_mean_energy_over_seeds(self):
        energy = np.array([abs(generate_channel(1, 1, s).entries[0, 0]) ** 2 for s in range(100_000)])
        assert energy.mean() == pytest.approx(1.0, abs=0.02)

    def test_same_seed_same_matrix(self):
        a = generate_channel(2, 4, 42)
        b = generate_channel(2, 4, 42)
        assert a == b
        assert np.array_equal(a.entries, b.entries)

    def test_different_seeds_differ(self):
        assert not np.array_equal(generate_channel(2, 4, 1).entries, generate_channel(2, 4, 2).entries)

    @pytest.mark.parametrize("M,N", [(3, 2), (0, 4), (2, 0)])
    def test_bad_dimensions(self, M, N):
        with pytest.raises((DimensionError, ValueError)):
            generate_channel(M, N, 0)

    def test_generation_order_is_row_major_box_muller(self):
        H = generate_channel(3, 5, 2024).entries
        np.testing.assert_allclose(H.ravel(), _box_muller_reference(2024, 15), rtol=0, atol=1e-15)

    def test_unit_variance_million_draws(self):
        H = generate_channel(1000, 1000, 7).entries
        assert np.mean(np.abs(H) ** 2) == pytest.approx(1.0, abs=0.005)
        assert np.var(H.real) == pytest.approx(0.5, abs=0.005)
        assert np.var(H.imag) == pytest.approx(0.5, abs=0.005)
        assert abs(np.mean(H.real * H.imag)) < 0.005

    def test_metadata_and_read_only(self):
        ch = generate_channel(2, 3, 5)
        assert ch.model_tag is ChannelModel.IID_RAYLEIGH
        assert ch.seed == 5
        assert (ch.num_users, ch.num_antennas) == (2, 3)
        with pytest.raises(ValueError):
            ch.entries[0, 0] = 0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ChannelMatrix(np.array([[1.0, np.nan]]))

    @pytest.mark.parametrize("N", [100, 1000, 10000])
    def test_row_energies_converge(self, N):
        report = check_assumptions(generate_channel(2, N, 3))
        assert np.all(np.abs(report.row_energies - 1.0) < 3.0 / np.sqrt(N))


class TestTrialChannel:
    def test_streams_depend_only_on_seed_and_index(self):
        a = trial_channel(ChannelModel.IID_RAYLEIGH, 2, 3, 99, 4)
        b = generate_channel(2, 3, _rng.trial_seed(99, _rng.CHANNEL, 4))
        assert a == b

    def test_fixed_channel_reused(self):
        ch = generate_channel(2, 3, 0)
        assert trial_channel(ch, 2, 3, 1, 7) is ch
        with pytest.raises(DimensionError):
            trial_channel(ch, 3, 3, 1, 7)


class TestCheckAssumptions:
    def test_identity(self):
        r = check_assumptions(np.eye(2))
        np.testing.assert_array_equal(r.cross_correlations, np.zeros((2, 2)))
        np.testing.assert_allclose(r.row_energies, [0.5, 0.5])
        assert r.fourth_moment_stat >= 0

    def test_identical_rows(self):
        r = check_assumptions(np.ones((2, 5)))
        assert r.cross_correlations[0, 1] == pytest.approx(1.0)
        assert r.cross_correlations[1, 0] == pytest.approx(1.0)
        assert r.fourth_moment_stat == pytest.approx(5 / 25)

    def test_fourth_moment_matches_literal_sum(self):
        H = generate_channel(2, 6, 1).entries
        A = np.abs(H)
        best = max(
            np.sum(A[a] * A[b] * A[c] * A[d]) / 36
            for a in range(2) for b in range(2) for c in range(2) for d in range(2)
        )
        assert check_assumptions(H).fourth_moment_stat == pytest.approx(best, rel=1e-12)

    def test_large_rayleigh_satisfies_conditions(self):
        ok = 0
        for seed in range(100):
            r = check_assumptions(generate_channel(2, 10_000, seed))
            ok += r.cross_correlations.max() < 0.05 and np.all(np.abs(r.row_energies - 1) < 0.05)
        assert ok >= 95


class TestPowerConfig:
    @pytest.mark.parametrize("db", [-30.0, -3.3, 0.0, 12.5])
    def test_snr_db_round_trip(self, db):
        p = PowerConfig.from_snr_db(db, noise_variance=0.7)
        assert p.snr_db == pytest.approx(db, rel=1e-12, abs=1e-12)
        assert p.inverse_snr * p.snr == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("kw", [dict(total_power=0.0), dict(total_power=1.0, noise_variance=-1.0)])
    def test_rejects_non_positive(self, kw):
        with pytest.raises(ValueError):
            PowerConfig(**kw)


class TestChannelFile:
    def test_round_trip_exact(self, tmp_path):
        ch = generate_channel(3, 4, 17)
        path = tmp_path / "h.txt"
        save_channel(ch, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "3 4"
        assert len(lines) == 4 and all(len(line.split()) == 4 for line in lines[1:])
        loaded = load_channel(path)
        assert loaded.model_tag is ChannelModel.FIXED
        np.testing.assert_array_equal(loaded.entries, ch.entries)

    def test_hand_written_file(self, tmp_path):
        path = tmp_path / "h.txt"
        path.write_text("1 2\n1+0j 0.5-2.25j\n")
        np.testing.assert_array_equal(load_channel(path).entries, [[1, 0.5 - 2.25j]])

    def test_wrong_shape(self, tmp_path):
        path = tmp_path / "h.txt"
        path.write_text("2 2\n1+0j 1+0j\n")
        with pytest.raises(DimensionError):
            load_channel(path)
