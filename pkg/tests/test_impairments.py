import numpy as np
import pytest

from beamsynth.arrays import UpaGeometry
from beamsynth.errors import ConfigurationError, DomainError
from beamsynth.impairments import (
    ImpairmentModel,
    apply_channel_errors,
    codes_to_weights,
    identity_phase_map,
    impaired_pattern,
    load_model_json,
    load_phase_map_csv,
    nonlinear_map_phase,
    perturbed_phase_map,
    quantize_phase,
    sample_errors,
    save_model_json,
    save_phase_map_csv,
    select_codes_cosine,
)

GEOM = UpaGeometry(4, 4)


class TestSampleErrors:
    def test_zero_sigmas_give_zero_errors(self):
        m = sample_errors(GEOM, 0.0, 0.0, seed=3)
        assert np.all(m.gain_err == 0) and np.all(m.phase_err == 0)

    def test_seed_reproducibility(self):
        a = sample_errors(GEOM, 0.1, 0.2, seed=7)
        b = sample_errors(GEOM, 0.1, 0.2, seed=7)
        assert np.array_equal(a.gain_err, b.gain_err)
        assert np.array_equal(a.phase_err, b.phase_err)

    def test_sample_mean_near_zero(self):
        big = UpaGeometry(100, 100)
        m = sample_errors(big, 0.1, 0.3, seed=11)
        assert abs(m.gain_err.mean()) < 3 * 0.1 / 100
        assert abs(m.phase_err.mean()) < 3 * 0.3 / 100

    def test_negative_sigma_rejected(self):
        with pytest.raises(DomainError):
            sample_errors(GEOM, -0.1, 0.0, seed=0)


class TestApplyChannelErrors:
    def test_zero_model_identity(self, rng):
        w = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        m = sample_errors(GEOM, 0.0, 0.0, seed=0)
        assert np.array_equal(apply_channel_errors(w, m), w)

    def test_hand_case(self):
        m = ImpairmentModel(np.array([[1.0]]), np.array([[np.pi]]), 1.0, np.pi, bits=4)
        out = apply_channel_errors(np.array([[1.0 + 0j]]), m)
        assert np.isclose(out[0, 0], -2.0, atol=1e-12)

    def test_magnitude_scaling_exact(self, rng):
        w = np.exp(1j * rng.uniform(0, 2 * np.pi, (4, 4)))
        m = sample_errors(GEOM, 0.2, 0.1, seed=5)
        out = apply_channel_errors(w, m)
        assert np.allclose(np.abs(out), np.abs(1.0 + m.gain_err), atol=1e-12)

    def test_shape_mismatch(self):
        m = sample_errors(GEOM, 0.0, 0.0, seed=0)
        with pytest.raises(DomainError):
            apply_channel_errors(np.ones((3, 4), complex), m)


class TestQuantizePhase:
    def test_zero_phase(self):
        assert quantize_phase(0.0, 6) == (0, 0.0)

    def test_exact_code_phase(self):
        delta = 2 * np.pi / 64
        code, err = quantize_phase(delta, 6)
        assert code == 1 and abs(err) < 1e-12

    def test_half_tie_rounds_up(self):
        delta = 2 * np.pi / 64
        code, err = quantize_phase(1.5 * delta, 6)
        assert code == 2
        assert np.isclose(err, -0.5 * delta)

    def test_wraps_large_phase(self):
        code, err = quantize_phase(2 * np.pi + 0.01, 4)
        code2, err2 = quantize_phase(0.01, 4)
        assert code == code2 and np.isclose(err, err2)

    def test_error_bound_exhaustive(self):
        for bits in range(3, 9):
            delta = 2 * np.pi / (2 ** bits)
            phis = np.linspace(-4 * np.pi, 4 * np.pi, 20011)
            _, err = quantize_phase(phis, bits)
            assert np.max(np.abs(err)) <= delta / 2 + 1e-12
            # exact boundary cases
            edges = np.arange(2 ** bits) * delta + delta / 2
            _, err = quantize_phase(edges, bits)
            assert np.max(np.abs(err)) <= delta / 2 + 1e-12


class TestPhaseMaps:
    def test_identity_map_lookup(self):
        m = sample_errors(GEOM, 0.0, 0.0, seed=0, bits=4)
        m.phase_map = identity_phase_map(4, GEOM.size)
        delta = 2 * np.pi / 16
        assert np.isclose(nonlinear_map_phase(3, 0, m), 3 * delta)

    def test_missing_table_rejected(self):
        m = sample_errors(GEOM, 0.0, 0.0, seed=0)
        with pytest.raises(ConfigurationError):
            nonlinear_map_phase(0, 0, m)

    def test_csv_round_trip(self, tmp_path):
        m = sample_errors(GEOM, 0.0, 0.0, seed=0, bits=3)
        m.phase_map = perturbed_phase_map(3, GEOM.size, 0.2, seed=9)
        path = tmp_path / "map.csv"
        save_phase_map_csv(path, m)
        loaded = load_phase_map_csv(path, 3, GEOM.size)
        assert np.array_equal(loaded, m.phase_map)

    def test_incomplete_csv_rejected(self, tmp_path):
        path = tmp_path / "map.csv"
        path.write_text("channel,code,phase_rad\n0,0,0.0\n")
        with pytest.raises(ConfigurationError):
            load_phase_map_csv(path, 3, 4)

    def test_perturbed_map_deviation(self):
        pm = perturbed_phase_map(6, 8, 0.25, seed=2)
        base = identity_phase_map(6, 8)
        dev = np.angle(np.exp(1j * (pm - base)))
        assert np.max(np.abs(dev)) <= 2 * 0.25 + 1e-9
        assert np.max(np.abs(dev)) > 0.01

    def test_model_json_round_trip(self, tmp_path):
        m = sample_errors(GEOM, 0.1, 0.2, seed=4, bits=4)
        m.phase_map = perturbed_phase_map(4, GEOM.size, 0.1, seed=5)
        path = tmp_path / "model.json"
        save_model_json(path, m)
        loaded = load_model_json(path)
        assert np.array_equal(loaded.gain_err, m.gain_err)
        assert np.array_equal(loaded.phase_err, m.phase_err)
        assert np.array_equal(loaded.phase_map, m.phase_map)
        assert loaded.seed == 4 and loaded.bits == 4


class TestCodeSelection:
    def _identity_model(self, bits=6):
        m = sample_errors(GEOM, 0.0, 0.0, seed=0, bits=bits)
        m.phase_map = identity_phase_map(bits, GEOM.size)
        return m

    def test_on_grid_phases_exact(self):
        m = self._identity_model()
        delta = m.delta
        codes_true = np.arange(16).reshape(4, 4) % 64
        w = np.exp(1j * codes_true * delta)
        codes = select_codes_cosine(w, m)
        assert np.array_equal(codes, codes_true)
        # full-vector cosine similarity is 1
        chosen = codes_to_weights(codes, m, include_errors=False)
        sim = np.abs(np.vdot(w.ravel(), chosen.ravel())) / w.size
        assert np.isclose(sim, 1.0)

    def test_two_code_hand_case(self):
        geom1 = UpaGeometry(1, 1)
        m = ImpairmentModel(np.zeros((1, 1)), np.zeros((1, 1)), 0.0, 0.0, bits=1,
                            phase_map=np.array([[0.0, np.pi]]))
        codes = select_codes_cosine(np.array([[np.exp(1j * 0.4 * np.pi)]]), m)
        assert codes[0, 0] == 0  # cos(0.4 pi) > cos(0.6 pi)

    def test_never_loses_to_naive_rounding(self, rng):
        for trial in range(20):
            m = sample_errors(GEOM, 0.0, 0.0, seed=trial, bits=4)
            m.phase_map = perturbed_phase_map(4, GEOM.size, 0.3, seed=trial + 100)
            w = np.exp(1j * rng.uniform(0, 2 * np.pi, (4, 4)))
            smart = select_codes_cosine(w, m)
            naive, _ = quantize_phase(np.angle(w), 4)
            smart_phases = codes_to_weights(smart, m, include_errors=False)
            naive_phases = codes_to_weights(naive, m, include_errors=False)
            s_sim = np.real(np.conj(w) * smart_phases)
            n_sim = np.real(np.conj(w) * naive_phases)
            assert np.all(s_sim >= n_sim - 1e-12)

    def test_tie_takes_lowest_code(self):
        m = ImpairmentModel(np.zeros((1, 1)), np.zeros((1, 1)), 0.0, 0.0, bits=1,
                            phase_map=np.array([[0.0, np.pi]]))
        # target exactly between the two codes
        codes = select_codes_cosine(np.array([[np.exp(1j * np.pi / 2)]]), m)
        assert codes[0, 0] == 0


class TestImpairedPattern:
    def test_zero_impairment_traces_identical(self, rng):
        m = sample_errors(GEOM, 0.0, 0.0, seed=0, bits=8)
        m.phase_map = identity_phase_map(8, GEOM.size)
        # on-grid phases quantize exactly, so all three traces coincide
        delta = m.delta
        codes = rng.integers(0, 2 ** 8, (4, 4))
        w = np.exp(1j * codes * delta)
        pat = impaired_pattern(w, m, GEOM, np.arange(-90.0, 91.0, 5.0))
        assert np.allclose(pat.ideal, pat.uncorrected, atol=1e-9)
        assert np.allclose(pat.ideal, pat.compensated, atol=1e-9)

    def test_compensation_improves_null(self):
        from beamsynth.harness import ImpairmentStudyConfig, impairment_study
        cfg = ImpairmentStudyConfig(rows=12, cols=6, sigma_p=0.3, sigma_a=0.05,
                                    seed=2, itermax=25, eta_z_db=-35.0)
        result = impairment_study(cfg)
        assert result.null_db["compensated"] <= result.null_db["uncorrected"]
