import numpy as np
from django.test import SimpleTestCase
from scipy import integrate

from core.exceptions import GridSupportError, LabWarning, ParameterError, ResolutionError
from hilbert.states import fs_distance, schmidt_entropy
from packets.embedding import (
    induced_metric,
    make_phase_packet,
    make_position_packet,
    manifold_member,
    momentum_member,
    overlap_centered,
    overlap_displaced,
    position_tangents,
    sigma_tangent,
)
from packets.grid import GaussianParams, Grid, ManifoldKind, ManifoldSpec
from packets.projection import _Objective, _stalled, project_factor, project_to_manifold, scan_distances


def standard_grid(points=128, low=-16.0, high=16.0, dims=1):
    return Grid(points, low, high, dims=dims)


class GridTests(SimpleTestCase):
    def test_rejects_coarse_grid(self):
        with self.assertRaises(ParameterError):
            Grid(8, -1.0, 1.0)

    def test_rejects_empty_interval(self):
        with self.assertRaises(ParameterError):
            Grid(32, 1.0, 1.0)

    def test_geometry(self):
        grid = standard_grid()
        self.assertAlmostEqual(grid.spacing, 0.25)
        self.assertAlmostEqual(grid.band_limit, 4 * np.pi)
        self.assertEqual(grid.nodes[0], -16.0)
        self.assertEqual(grid.size, 128)

    def test_support_warning_near_edge(self):
        with self.assertWarns(LabWarning):
            self.assertFalse(GaussianParams(a=[13.0], p=None, sigma=1.0).check_support(standard_grid()))

    def test_manifold_split_and_join(self):
        spec = ManifoldSpec(ManifoldKind.PHASE_SPACE, 1.0, standard_grid(dims=2))
        params = np.array([1.0, 2.0, 0.5, -0.5])
        pairs = spec.split(params)
        self.assertEqual(pairs, [(1.0, 0.5), (2.0, -0.5)])
        np.testing.assert_array_equal(spec.join(pairs), params)
        self.assertEqual(spec.parameter_names, ("a0_0", "a0_1", "p0_0", "p0_1"))

    def test_three_factor_manifold_rejected(self):
        with self.assertRaises(ParameterError):
            ManifoldSpec(ManifoldKind.POSITION, 1.0, standard_grid(), factors=3)


class EmbeddingTests(SimpleTestCase):
    def test_position_packet_is_normalized(self):
        state = make_position_packet(standard_grid(), [1.5], 1.0)
        self.assertTrue(state.is_normalized(1e-12))

    def test_packet_leaking_off_grid(self):
        with self.assertWarns(LabWarning), self.assertRaises(GridSupportError):
            make_position_packet(standard_grid(), [15.0], 1.0)

    def test_two_dimensional_packet_is_a_product(self):
        grid = standard_grid(points=32, low=-8.0, high=8.0, dims=2)
        state = make_position_packet(grid, [1.0, -1.0], 1.0)
        self.assertLess(schmidt_entropy(state, 32, 32), 1e-12)

    def test_momentum_beyond_band_limit(self):
        with self.assertRaises(ResolutionError):
            make_phase_packet(standard_grid(), [0.0], [12.0], 1.0)

    def test_phase_packet_mean_momentum(self):
        grid = standard_grid()
        state = make_phase_packet(grid, [0.0], [1.5], 1.0)
        spectrum = np.abs(np.fft.fft(state.amplitudes, norm="ortho")) ** 2
        self.assertAlmostEqual(float(np.sum(spectrum * grid.momenta)), 1.5, places=6)

    def test_momentum_member_is_normalized(self):
        state = momentum_member(standard_grid(), [1.0], 1.0)
        self.assertTrue(state.is_normalized(1e-12))

    def test_displaced_overlap_matches_grid(self):
        grid = standard_grid()
        for distance in (0.5, 1.0, 3.0):
            a = make_position_packet(grid, [0.0], 1.0)
            b = make_position_packet(grid, [distance], 1.0)
            overlap = abs(np.vdot(a.amplitudes, b.amplitudes))
            self.assertAlmostEqual(overlap, overlap_displaced(distance, 1.0), places=10)

    def test_small_displacement_isometry(self):
        grid = standard_grid()
        sigma = 1.0
        for delta in (0.01, 0.05, 0.1, 0.2):
            d = fs_distance(make_position_packet(grid, [0.0], sigma), make_position_packet(grid, [delta], sigma))
            self.assertLess(abs(d - delta / (2 * sigma)) / (delta / (2 * sigma)), 0.01)


class CenteredOverlapTests(SimpleTestCase):
    @staticmethod
    def quadrature(d, sigma, dims):
        # |psi|^2 and |g|^2 have variances d^2 and sigma^2
        rate = 1.0 / (4 * d**2) + 1.0 / (4 * sigma**2)
        reach = 40.0 / np.sqrt(rate)
        norm = (2 * np.pi * d**2) ** -0.25 * (2 * np.pi * sigma**2) ** -0.25
        one_axis, _ = integrate.quad(
            lambda x: norm * np.exp(-rate * x**2), -reach, reach, epsabs=0.0, epsrel=1e-13, limit=200
        )
        return one_axis**dims

    def test_matches_quadrature(self):
        sigma = 1.0
        for dims in (1, 3):
            for ratio in (0.1, 0.5, 1.0, 2.0, 10.0, 100.0):
                exact = overlap_centered(ratio * sigma, sigma, dims)
                numeric = self.quadrature(ratio * sigma, sigma, dims)
                self.assertLess(abs(exact - numeric) / numeric, 1e-10, msg=f"d/sigma={ratio}, dims={dims}")

    def test_equal_widths_overlap_fully(self):
        self.assertAlmostEqual(overlap_centered(2.0, 2.0), 1.0)

    def test_rejects_non_positive_width(self):
        with self.assertRaises(ParameterError):
            overlap_centered(0.0, 1.0)


class TangentTests(SimpleTestCase):
    def test_sigma_tangent_is_orthogonal_to_position_tangent(self):
        grid = standard_grid()
        tangent = sigma_tangent(grid, [0.5], 1.0)
        along = position_tangents(grid, [0.5], 1.0)[0].amplitudes
        along = along / np.linalg.norm(along)
        self.assertAlmostEqual(tangent.norm(), 1.0, places=12)
        self.assertLess(abs(np.vdot(tangent.direction.amplitudes, along)), 1e-8)
        self.assertLess(abs(np.vdot(tangent.direction.amplitudes, tangent.base.vector)), 1e-12)

    def test_position_metric(self):
        grid = standard_grid()
        sigma = 1.5
        spec = ManifoldSpec(ManifoldKind.POSITION, sigma, grid)
        metric = induced_metric(spec, [0.3])
        np.testing.assert_allclose(metric, [[1.0 / (4 * sigma**2)]], rtol=1e-4)

    def test_phase_space_metric(self):
        grid = standard_grid()
        sigma = 1.0
        spec = ManifoldSpec(ManifoldKind.PHASE_SPACE, sigma, grid)
        metric = induced_metric(spec, [0.3, 0.5])
        np.testing.assert_allclose(metric, np.diag([1.0 / (4 * sigma**2), sigma**2]), rtol=1e-4, atol=1e-6)


class ProjectionTests(SimpleTestCase):
    def test_member_projects_onto_itself(self):
        grid = standard_grid()
        spec = ManifoldSpec(ManifoldKind.POSITION, 1.0, grid)
        projection = project_to_manifold(make_position_packet(grid, [1.3], 1.0), spec)
        self.assertAlmostEqual(projection.params[0], 1.3, places=5)
        self.assertLess(projection.distance, 1e-6)

    def test_phase_space_member_from_cold_start(self):
        grid = standard_grid()
        spec = ManifoldSpec(ManifoldKind.PHASE_SPACE, 1.0, grid)
        projection = project_to_manifold(make_phase_packet(grid, [2.0], [1.0], 1.0), spec)
        np.testing.assert_allclose(projection.params, [2.0, 1.0], atol=1e-5)

    def test_symmetric_superposition_breaks_tie_to_the_left(self):
        grid = standard_grid()
        spec = ManifoldSpec(ManifoldKind.POSITION, 1.0, grid)
        psi = make_position_packet(grid, [-4.0], 1.0).amplitudes + make_position_packet(grid, [4.0], 1.0).amplitudes
        projection = project_to_manifold(psi / np.linalg.norm(psi), spec)
        self.assertLess(projection.params[0], 0.0)
        self.assertAlmostEqual(projection.distance, np.pi / 4, delta=0.02)

    def test_projection_is_no_farther_than_any_scan_member(self):
        grid = standard_grid(points=64)
        spec = ManifoldSpec(ManifoldKind.POSITION, 1.0, grid)
        rng = np.random.default_rng(2)
        psi = sum(rng.uniform(0.2, 1.0) * make_position_packet(grid, [c], 1.0).amplitudes for c in (-3.0, 0.5, 4.0))
        psi = psi / np.linalg.norm(psi)
        projection = project_to_manifold(psi, spec)
        self.assertLessEqual(projection.distance, scan_distances(psi, spec).min() + 1e-9)

    def test_member_is_reproduced(self):
        grid = standard_grid()
        spec = ManifoldSpec(ManifoldKind.POSITION, 1.0, grid)
        np.testing.assert_allclose(
            manifold_member(spec, [0.75]).amplitudes, make_position_packet(grid, [0.75], 1.0).amplitudes, atol=1e-12
        )

    def test_factor_projection_of_a_product(self):
        grid = standard_grid(points=32, low=-8.0, high=8.0)
        spec = ManifoldSpec(ManifoldKind.POSITION, 1.0, grid)
        particle = make_position_packet(grid, [-1.0], 0.7).amplitudes
        device = make_position_packet(grid, [0.6], 1.0).amplitudes
        factor = project_factor(np.kron(particle, device), spec, 32)
        self.assertAlmostEqual(factor.center, 0.6, places=5)
        self.assertAlmostEqual(factor.fidelity, 1.0, places=8)
        self.assertAlmostEqual(abs(np.vdot(factor.particle.amplitudes, particle)), 1.0, places=8)

    def test_two_factor_projection_factorizes(self):
        grid = standard_grid(points=32, low=-8.0, high=8.0)
        single = ManifoldSpec(ManifoldKind.POSITION, 1.0, grid)
        first = make_position_packet(grid, [-1.5], 1.0).amplitudes + 0.4 * make_position_packet(grid, [1.0], 1.0).amplitudes
        first = first / np.linalg.norm(first)
        second = make_position_packet(grid, [0.7], 1.0).amplitudes
        left = project_to_manifold(first, single)
        right = project_to_manifold(second, single)

        joint = project_to_manifold(np.kron(first, second), ManifoldSpec(ManifoldKind.POSITION, 1.0, grid, factors=2))
        np.testing.assert_allclose(joint.params, [left.params[0], right.params[0]], atol=1e-5)
        self.assertAlmostEqual(right.params[0], 0.7, places=5)
        self.assertAlmostEqual(joint.distance, np.arccos(np.cos(left.distance) * np.cos(right.distance)), places=6)


class StallTests(SimpleTestCase):
    def setUp(self):
        self.grid = standard_grid()
        self.spec = ManifoldSpec(ManifoldKind.POSITION, 1.0, self.grid)
        self.objective = _Objective(self.spec, make_position_packet(self.grid, [1.25], 1.0).amplitudes)

    def test_exact_member_is_a_stall(self):
        scaled = np.array([1.25 / self.grid.spacing])
        _, gradient = self.objective.value_and_gradient(scaled)
        self.assertTrue(_stalled(self.objective, scaled, gradient))

    def test_half_node_offset_is_not_a_stall(self):
        scaled = np.array([1.25 / self.grid.spacing + 0.5])
        _, gradient = self.objective.value_and_gradient(scaled)
        self.assertFalse(_stalled(self.objective, scaled, gradient))

    def test_warm_start_on_the_optimum_is_accepted(self):
        projection = project_to_manifold(make_position_packet(self.grid, [1.25], 1.0), self.spec, warm_start=[1.25])
        self.assertAlmostEqual(projection.params[0], 1.25, places=8)
