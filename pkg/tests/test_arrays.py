import numpy as np
import pytest

from beamsynth.arrays import (
    AngleGrid,
    BeamSpec,
    UlaGeometry,
    UpaGeometry,
    discretize_spec,
    full_grid,
    resolve_sidelobe_regions,
    shift_spec,
    steering_matrix,
    steering_vector,
    upa_pattern,
    upa_steering,
    upa_virtual_angles,
)
from beamsynth.errors import ConfigurationError, DomainError


class TestSteeringVector:
    def test_broadside_is_all_ones(self):
        out = steering_vector(UlaGeometry(4, 0.5), 0.0)
        assert np.allclose(out, np.ones(4))

    def test_endfire_two_elements(self):
        out = steering_vector(UlaGeometry(2, 0.5), 90.0)
        assert np.allclose(out, [1.0, -1.0], atol=1e-12)

    def test_thirty_degree_phases(self):
        # phase increment 2*pi*0.5*sin(30deg) = pi/2 per element
        out = steering_vector(UlaGeometry(4, 0.5), 30.0)
        expected = np.exp(1j * np.array([0.0, np.pi / 2, np.pi, 3 * np.pi / 2]))
        assert np.allclose(out, expected, atol=1e-12)

    def test_first_element_exactly_one(self):
        out = steering_vector(UlaGeometry(8, 0.37), -41.3)
        assert out[0] == 1.0 + 0.0j

    def test_unit_modulus(self, rng):
        geom = UlaGeometry(16, 0.5)
        for theta in rng.uniform(-90, 90, 50):
            out = steering_vector(geom, theta)
            assert np.max(np.abs(np.abs(out) - 1.0)) < 1e-12

    def test_geometric_progression(self, rng):
        geom = UlaGeometry(12, 0.5)
        for theta in rng.uniform(-90, 90, 20):
            out = steering_vector(geom, theta)
            assert np.allclose(out, out[1] ** np.arange(12), atol=1e-9)

    def test_angle_out_of_domain(self):
        with pytest.raises(DomainError):
            steering_vector(UlaGeometry(4), 90.5)

    def test_matrix_matches_vectors(self, rng):
        geom = UlaGeometry(9, 0.45)
        angles = rng.uniform(-90, 90, 7)
        mat = steering_matrix(geom, angles)
        for k, theta in enumerate(angles):
            assert np.allclose(mat[:, k], steering_vector(geom, theta), atol=1e-12)


class TestDiscretize:
    def test_mainlobe_count_endpoints_inclusive(self):
        spec = BeamSpec(((-4.0, 4.0),))
        main, _, _ = discretize_spec(spec)
        assert len(main) == 9
        assert main.angles[0] == -4.0 and main.angles[-1] == 4.0

    def test_null_region_count(self):
        spec = BeamSpec(((-4.0, 4.0),), null_regions=((56.0, 64.0),))
        _, _, null = discretize_spec(spec)
        assert len(null) == 9

    def test_coarse_step_keeps_endpoints(self):
        spec = BeamSpec(((-4.0, 4.0),), null_regions=((56.0, 64.0),), grid_step_deg=8.0)
        _, _, null = discretize_spec(spec)
        assert np.allclose(null.angles, [56.0, 64.0])

    def test_offgrid_endpoint_appended(self):
        spec = BeamSpec(((0.0, 5.0),), grid_step_deg=2.0)
        main, _, _ = discretize_spec(spec)
        assert np.allclose(main.angles, [0.0, 2.0, 4.0, 5.0])

    def test_sidelobe_complement_with_guard(self):
        spec = BeamSpec(((-4.0, 4.0),), null_regions=((56.0, 64.0),))
        _, side, _ = discretize_spec(spec)
        # 181 grid points minus 9 mainlobe, 9 null, and the +-5 transition
        assert len(side) == 181 - 9 - 9 - 2
        assert -5.0 not in side.angles and 5.0 not in side.angles
        assert -6.0 in side.angles and 55.0 in side.angles and 65.0 in side.angles

    def test_sets_disjoint_and_inside_regions(self):
        spec = BeamSpec(((-4.0, 4.0),), null_regions=((-64.0, -56.0), (56.0, 64.0)))
        main, side, null = discretize_spec(spec)
        all_sets = [main.angles, side.angles, null.angles]
        for i in range(3):
            for j in range(i + 1, 3):
                assert not np.intersect1d(all_sets[i], all_sets[j]).size
        assert main.angles.min() >= -4 and main.angles.max() <= 4
        for a in null.angles:
            assert (-64 <= a <= -56) or (56 <= a <= 64)

    def test_overlapping_regions_rejected(self):
        spec = BeamSpec(((-4.0, 4.0),), null_regions=((2.0, 10.0),))
        with pytest.raises(ConfigurationError):
            discretize_spec(spec)

    def test_resolved_complement_matches_default(self):
        spec = BeamSpec(((-4.0, 4.0),), null_regions=((56.0, 64.0),))
        resolved = resolve_sidelobe_regions(spec)
        assert resolved.sidelobe_regions
        a = discretize_spec(spec)[1].angles
        b = discretize_spec(resolved)[1].angles
        assert np.allclose(a, b)

    def test_shift_spec_translates_samples(self):
        spec = BeamSpec(((-4.0, 4.0),), null_regions=((56.0, 64.0),),
                        sidelobe_regions=((-80.0, -6.0), (6.0, 50.0)))
        shifted = shift_spec(spec, 2.5)
        for orig, moved in zip(discretize_spec(spec), discretize_spec(shifted)):
            assert np.allclose(moved.angles, orig.angles - 2.5)

    def test_shift_out_of_domain_rejected(self):
        spec = BeamSpec(((-4.0, 4.0),), sidelobe_regions=((6.0, 89.0),))
        with pytest.raises(ConfigurationError):
            shift_spec(spec, -2.0)


class TestBeamSpecValidation:
    def test_alpha_must_exceed_one(self):
        with pytest.raises(ConfigurationError):
            BeamSpec(((-4.0, 4.0),), alpha=1.0)

    def test_threshold_ordering(self):
        with pytest.raises(ConfigurationError):
            BeamSpec(((-4.0, 4.0),), eta_sl_db=-30.0, eta_z_db=-15.0)

    def test_mainlobe_required(self):
        with pytest.raises(ConfigurationError):
            BeamSpec(())

    def test_grid_strictly_increasing(self):
        with pytest.raises(ConfigurationError):
            AngleGrid(np.array([0.0, 0.0, 1.0]))


class TestUpaPattern:
    def test_single_element(self):
        geom = UpaGeometry(1, 1)
        w = np.array([[0.5 - 0.25j]])
        theta, phi = 33.0, 71.0
        u, v = upa_virtual_angles(theta, phi)
        expected = w[0, 0] * np.exp(1j * (u + v))
        assert np.isclose(upa_pattern(geom, w, theta, phi), expected)

    def test_direct_sum_oracle(self, rng):
        geom = UpaGeometry(3, 4)
        w = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        for theta, phi in [(90.0, 0.0), (12.0, 40.0), (-45.0, 90.0)]:
            u, v = upa_virtual_angles(theta, phi)
            expected = 0.0
            for m in range(1, 4):
                for n in range(1, 5):
                    expected += w[m - 1, n - 1] * np.exp(1j * (m * u + n * v))
            assert np.isclose(upa_pattern(geom, w, theta, phi), expected, atol=1e-12)

    def test_uniform_weights_at_zero_virtual_angles(self):
        # theta=90, phi=0 gives u=v=0, every term is exactly the weight
        geom = UpaGeometry(2, 2)
        val = upa_pattern(geom, np.ones((2, 2)), 90.0, 0.0)
        assert np.isclose(val, 4.0)

    def test_zero_weights(self):
        assert upa_pattern(UpaGeometry(2, 3), np.zeros((2, 3)), 10.0, 20.0) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            upa_pattern(UpaGeometry(2, 2), np.ones((3, 2)), 0.0, 0.0)

    def test_steering_pairs_with_ravel(self, rng):
        geom = UpaGeometry(4, 5)
        w = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        s = upa_steering(geom, 17.0, 62.0)
        assert np.isclose(w.ravel() @ s, upa_pattern(geom, w, 17.0, 62.0))


def test_full_grid_endpoints():
    g = full_grid(1.0)
    assert g[0] == -90.0 and g[-1] == 90.0 and len(g) == 181
