import math

import numpy as np
import pytest

from labnet.errors import (
    InvalidInputError,
    NumericalDegeneracyError,
    TriangulationDegenerateError,
)
from labnet.spatial import (
    ArrayGeometry,
    SpatialCodecConfig,
    angular_distance,
    decode_doa,
    decode_doa_frames,
    encode_spatial_spectrum,
    ground_truth_doas,
    triangulate,
)

CODEC = SpatialCodecConfig()  # 210 bins, -15 .. 194, sigma 8


def grid_index(angle):
    return int(round(angle - CODEC.theta_min_deg))


class TestGeometryDefaults:
    def test_default_array_spacings(self):
        geom = ArrayGeometry.linear()
        assert geom.channel_count == 6
        assert geom.baseline_c == pytest.approx(0.28, abs=1e-12)
        xs = geom.positions[:, 0]
        np.testing.assert_allclose(np.diff(xs), [0.04, 0.04, 0.12, 0.04, 0.04])

    def test_collinearity_enforced(self):
        with pytest.raises(InvalidInputError):
            ArrayGeometry(mic_positions=((0, 0), (0.1, 0.2)))


class TestEncode:
    def test_exact_hit_is_one(self):
        spec = encode_spatial_spectrum(90.0, CODEC)
        assert spec[grid_index(90)] == 1.0

    def test_eight_degrees_off_gives_exp_minus_one(self):
        spec = encode_spatial_spectrum(90.0, CODEC)
        assert spec[grid_index(98)] == pytest.approx(math.exp(-1), abs=1e-9)

    def test_sixteen_degrees_off_gives_exp_minus_four(self):
        spec = encode_spatial_spectrum(90.0, CODEC)
        assert spec[grid_index(74)] == pytest.approx(math.exp(-4), abs=1e-9)

    def test_values_in_unit_interval(self):
        spec = encode_spatial_spectrum(-14.2, CODEC)
        assert spec.min() > 0 and spec.max() <= 1.0

    def test_peak_at_nearest_bin_and_monotone_decay(self):
        theta = 37.3
        spec = encode_spatial_spectrum(theta, CODEC)
        assert CODEC.grid_angles[spec.argmax()] == 37.0
        d = np.abs(CODEC.grid_angles - theta)
        order = np.argsort(d)
        assert np.all(np.diff(spec[order]) <= 1e-15)

    def test_out_of_grid_rejected(self):
        with pytest.raises(InvalidInputError):
            encode_spatial_spectrum(-30.0, CODEC)
        with pytest.raises(InvalidInputError):
            encode_spatial_spectrum(200.0, CODEC)


class TestAngularDistance:
    def test_plain_difference(self):
        assert angular_distance(10, 20) == 10

    def test_identity(self):
        assert angular_distance(90, 90) == 0

    def test_no_wrap_across_grid_span(self):
        assert angular_distance(-15, 195) == 210

    def test_symmetry(self):
        assert angular_distance(3.5, 170.0) == angular_distance(170.0, 3.5)


class TestDecode:
    def test_argmax_round_trip(self):
        assert decode_doa(encode_spatial_spectrum(90.0, CODEC), CODEC) == 90.0

    def test_delta_at_first_bin(self):
        spec = np.zeros(210)
        spec[0] = 1.0
        assert decode_doa(spec, CODEC) == -15.0

    def test_uniform_expectation_is_grid_mean(self):
        assert decode_doa(np.ones(210), CODEC, "expectation") == pytest.approx(89.5, abs=1e-12)

    def test_argmax_tie_takes_lowest_angle(self):
        spec = np.zeros(210)
        spec[[40, 120]] = 1.0
        assert decode_doa(spec, CODEC) == CODEC.grid_angles[40]

    def test_expectation_of_zero_spectrum_rejected(self):
        with pytest.raises(NumericalDegeneracyError):
            decode_doa(np.zeros(210), CODEC, "expectation")

    def test_argmax_error_bounded_by_half_step(self):
        for theta in np.linspace(-15, 194, 419):
            decoded = decode_doa(encode_spatial_spectrum(theta, CODEC), CODEC)
            assert abs(decoded - theta) <= CODEC.theta_step_deg / 2 + 1e-9

    def test_frame_decode_matches_scalar(self):
        spectra = np.stack([encode_spatial_spectrum(t, CODEC) for t in (12.0, 88.0, 170.0)])
        np.testing.assert_allclose(decode_doa_frames(spectra, CODEC), [12.0, 88.0, 170.0])


def _ray_intersection(theta1, theta2, baseline):
    # independent oracle: intersect the two rays as lines
    d1 = np.array([math.cos(math.radians(theta1)), math.sin(math.radians(theta1))])
    d2 = np.array([math.cos(math.radians(theta2)), math.sin(math.radians(theta2))])
    a = np.stack([d1, -d2], axis=1)
    t = np.linalg.solve(a, np.array([baseline, 0.0]))
    return t[0] * d1


class TestTriangulate:
    def test_symmetric_rays(self):
        p = triangulate(45.0, 135.0, 0.28)
        assert p.x == pytest.approx(0.14, abs=1e-12)
        assert p.y == pytest.approx(0.14, abs=1e-12)
        assert not p.clamped

    def test_sixty_degree_rays(self):
        p = triangulate(60.0, 120.0, 0.28)
        # Law of Sines gives range exactly equal to the baseline here
        assert p.x == pytest.approx(0.28 * math.cos(math.radians(60)), abs=1e-12)
        assert p.y == pytest.approx(0.28 * math.sin(math.radians(60)), abs=1e-12)

    def test_parallel_rays_degenerate(self):
        with pytest.raises(TriangulationDegenerateError):
            triangulate(90.0, 90.0, 0.28)

    def test_divergent_rays_degenerate(self):
        with pytest.raises(TriangulationDegenerateError):
            triangulate(120.0, 60.0, 0.28)

    def test_matches_ray_intersection_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            theta1 = rng.uniform(5, 85)
            theta2 = rng.uniform(theta1 + 2, 175)
            p = triangulate(theta1, theta2, 0.28)
            if p.clamped:
                continue
            expected = _ray_intersection(theta1, theta2, 0.28)
            assert p.x == pytest.approx(expected[0], abs=1e-9)
            assert p.y == pytest.approx(expected[1], abs=1e-9)

    def test_front_half_plane_output(self):
        for theta1 in np.linspace(1, 178, 60):
            for opening in (0.6, 5.0, 40.0):
                theta2 = theta1 + opening
                if theta2 >= 180:
                    continue
                p = triangulate(theta1, theta2, 0.28)
                assert p.y >= 0

    def test_range_clamp_flag(self):
        p = triangulate(89.7, 90.3, 0.28)  # opening just above the threshold
        assert p.clamped
        assert math.hypot(p.x, p.y) == pytest.approx(10.0, rel=1e-9)

    def test_invalid_baseline(self):
        with pytest.raises(InvalidInputError):
            triangulate(45.0, 135.0, 0.0)


class TestGroundTruthDoas:
    GEOM = ArrayGeometry.linear()

    def test_symmetric_point(self):
        loc = ground_truth_doas((0.14, 0.14), self.GEOM)
        assert loc.doas[0] == pytest.approx(45.0, abs=1e-12)
        assert loc.doas[1] == pytest.approx(135.0, abs=1e-12)

    def test_point_above_second_mic(self):
        loc = ground_truth_doas((0.28, 0.28), self.GEOM)
        assert loc.doas[0] == pytest.approx(45.0, abs=1e-12)
        assert loc.doas[1] == pytest.approx(90.0, abs=1e-12)

    def test_far_broadside_angles_converge(self):
        loc = ground_truth_doas((0.14, 100.0), self.GEOM)
        assert loc.doas[0] == pytest.approx(90.0, abs=0.1)
        assert loc.doas[1] == pytest.approx(90.0, abs=0.1)
        assert loc.doa_centroid == pytest.approx(90.0, abs=0.1)

    def test_collinear_source_rejected(self):
        with pytest.raises(InvalidInputError):
            ground_truth_doas((1.0, 0.0), self.GEOM)

    def test_round_trip_against_triangulate(self):
        # module invariant box: x in [-4, 4], y in [0.1, 8]
        rng = np.random.default_rng(42)
        checked = 0
        for _ in range(10_000):
            x = rng.uniform(-4, 4)
            y = rng.uniform(0.1, 8)
            loc = ground_truth_doas((x, y), self.GEOM)
            try:
                p = triangulate(loc.doas[0], loc.doas[1], self.GEOM.baseline_c)
            except TriangulationDegenerateError:
                continue
            if p.clamped:
                continue
            assert abs(p.x - x) < 1e-6 and abs(p.y - y) < 1e-6
            checked += 1
        assert checked > 9000


class TestCodecConfig:
    def test_grid_span_enforced(self):
        with pytest.raises(InvalidInputError):
            SpatialCodecConfig(bins=100, theta_step_deg=1.0)

    def test_alternative_resolution(self):
        cfg = SpatialCodecConfig(bins=35, theta_step_deg=6.0)
        assert cfg.theta_max_deg == pytest.approx(-15 + 34 * 6)

    def test_observer_count_validated(self):
        with pytest.raises(InvalidInputError):
            SpatialCodecConfig(observers=3)
