import numpy as np
from django.test import SimpleTestCase, tag

from core.exceptions import DimensionError, LabWarning, ParameterError, ResolutionError
from dynamics.propagators import (
    GridHamiltonian,
    Potential,
    PotentialKind,
    RestoringDrift,
    StepConfig,
    advance,
    constrained_step,
    default_step_config,
    evolve_grid,
    newton_trajectory,
    position_moments,
    random_step,
    random_step_first_order,
    step_scale_for_angle,
    tangent_step_covariance,
)
from gue.sampler import GueSampler
from hilbert.states import StateVector, fs_distance, normalize, random_state
from packets.embedding import make_phase_packet, make_position_packet, sigma_tangent
from packets.grid import Grid, ManifoldKind, ManifoldSpec


class StepConfigTests(SimpleTestCase):
    def test_rejects_negative_dt(self):
        with self.assertRaises(ParameterError):
            StepConfig(dt=-0.1, gue_scale=1.0)

    def test_zero_dt_is_identity(self):
        psi = normalize([1.0, 1j, 0.5])
        stepped = random_step(psi, GueSampler(3, 1.0, 0), StepConfig(dt=0.0, gue_scale=1.0))
        np.testing.assert_array_equal(stepped.amplitudes, psi.amplitudes)

    def test_large_step_warns(self):
        psi = normalize([1.0, 0.0, 0.0, 0.0])
        with self.assertWarns(LabWarning):
            random_step(psi, GueSampler(4, 1.0, 0), StepConfig(dt=1.0, gue_scale=1.0))

    def test_scale_for_angle_round_trips(self):
        cfg = default_step_config(10, 0.05)
        self.assertAlmostEqual(cfg.step_angle(10), 0.05)
        self.assertAlmostEqual(step_scale_for_angle(0.05, 10), 0.05 / 3.0)


class RandomStepTests(SimpleTestCase):
    def test_norm_preserved(self):
        rng = np.random.default_rng(1)
        psi = random_state(rng, 8)
        sampler = GueSampler(8, 1.0, 5)
        cfg = default_step_config(8, 0.1)
        for _ in range(50):
            psi = random_step(psi, sampler, cfg)
        self.assertTrue(psi.is_normalized(1e-12))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            random_step(normalize([1.0, 0.0]), GueSampler(3, 1.0, 0), default_step_config(3))

    def test_known_hamiltonian(self):
        states = np.array([[1.0, 1.0]], dtype=complex) / np.sqrt(2)
        h = np.array([[[0.0, 0.0], [0.0, np.pi]]], dtype=complex)
        stepped = advance(states, [None], StepConfig(dt=1.0, gue_scale=1.0), hamiltonians=h)
        np.testing.assert_allclose(stepped[0], np.array([1.0, -1.0]) / np.sqrt(2), atol=1e-12)

    def test_first_order_agrees_for_small_steps(self):
        psi = normalize([1.0, 0.5, 0.2j, 0.0])
        cfg = default_step_config(4, 0.01)
        exact = random_step(psi, GueSampler(4, 1.0, 17), cfg)
        euler = random_step_first_order(psi, GueSampler(4, 1.0, 17), cfg)
        self.assertLess(fs_distance(exact, euler), 1e-3)

    def test_rms_angle_matches_configuration(self):
        n, angle = 8, 0.02
        cfg = default_step_config(n, angle)
        sampler = GueSampler(n, cfg.gue_scale, 99)
        psi = StateVector.basis(n, 0)
        squares = [fs_distance(psi, random_step(psi, sampler, cfg)) ** 2 for _ in range(2000)]
        self.assertAlmostEqual(np.sqrt(np.mean(squares)) / angle, 1.0, delta=0.05)


class IsotropyTests(SimpleTestCase):
    def check_isotropy(self, draws, seed):
        n = 8
        cfg = default_step_config(n, 0.02)
        psi = random_state(np.random.default_rng(seed), n)
        covariance = tangent_step_covariance(psi, GueSampler(n, cfg.gue_scale, seed), cfg, draws)
        diagonal = np.real(np.diag(covariance))
        off = np.abs(covariance - np.diag(np.diag(covariance)))
        self.assertEqual(covariance.shape, (n - 1, n - 1))
        self.assertLess(off.max(), 0.05 * diagonal.mean())
        self.assertLess(np.abs(diagonal / diagonal.mean() - 1.0).max(), 0.05)

    def test_step_covariance_is_isotropic(self):
        self.check_isotropy(20000, 6)

    @tag("slow")
    def test_acceptance_isotropy(self):
        self.check_isotropy(100000, 20240101)


class DriftTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(128, -16.0, 16.0)
        self.rule = RestoringDrift.at_sites(self.grid, [-4.0, 4.0], 1.0, magnitude=0.1)

    def test_vanishes_on_the_manifold(self):
        anchor = make_position_packet(self.grid, [4.0], 1.0)
        self.assertLess(self.rule(anchor).norm(), 1e-10)

    def test_pulls_back_along_sigma_direction(self):
        tangent = sigma_tangent(self.grid, [4.0], 1.0)
        h = tangent.direction.amplitudes
        psi = np.cos(0.2) * tangent.base.vector + np.sin(0.2) * h
        drift = self.rule(psi)
        self.assertLess(np.vdot(h, drift.direction.amplitudes).real, 0.0)
        self.assertLess(abs(np.vdot(psi, drift.direction.amplitudes)), 1e-12)

    def test_negative_magnitude_rejected(self):
        with self.assertRaises(ParameterError):
            RestoringDrift(np.eye(2), np.eye(2), -1.0)


class GridEvolutionTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(256, -64.0, 64.0)

    def test_norm_preserved(self):
        psi = make_phase_packet(self.grid, [0.0], [1.0], 1.0)
        evolved = evolve_grid(psi, GridHamiltonian.free(self.grid), 0.05, 40)
        self.assertTrue(evolved.is_normalized(1e-12))

    def test_zero_steps_is_identity(self):
        psi = make_position_packet(self.grid, [0.0], 1.0)
        evolved = evolve_grid(psi, GridHamiltonian.free(self.grid), 0.05, 0)
        np.testing.assert_array_equal(evolved.amplitudes, psi.amplitudes)

    def test_free_spreading_law(self):
        sigma, mass, t = 1.0, 1.0, 8.0
        psi = make_position_packet(self.grid, [0.0], sigma)
        evolved = evolve_grid(psi, GridHamiltonian.free(self.grid, mass), 0.05, 160)
        _, variance = position_moments(evolved, self.grid)
        expected = sigma**2 * (1 + (t / (2 * mass * sigma**2)) ** 2)
        self.assertLess(abs(variance - expected) / expected, 1e-3)

    def test_packet_moves_with_its_momentum(self):
        psi = make_phase_packet(self.grid, [-5.0], [2.0], 1.0)
        evolved = evolve_grid(psi, GridHamiltonian.free(self.grid, 2.0), 0.05, 100)
        mean, _ = position_moments(evolved, self.grid)
        self.assertAlmostEqual(mean, -5.0 + 2.0 * 5.0 / 2.0, places=6)

    def test_band_edge_weight_raises(self):
        n = self.grid.points_per_axis
        edge_mode = np.exp(1j * self.grid.momenta[n // 2 - 1] * self.grid.nodes) / np.sqrt(n)
        with self.assertRaises(ResolutionError):
            evolve_grid(edge_mode, GridHamiltonian.free(self.grid), 0.05, 1)

    def test_harmonic_period_returns_packet(self):
        grid = Grid(128, -16.0, 16.0)
        potential = Potential(PotentialKind.HARMONIC, 1.0)
        psi = make_position_packet(grid, [3.0], 1.0 / np.sqrt(2.0))
        hamiltonian = GridHamiltonian.with_potential(grid, potential)
        evolved = evolve_grid(psi, hamiltonian, 2 * np.pi / 2000, 2000)
        mean, _ = position_moments(evolved, grid)
        self.assertAlmostEqual(mean, 3.0, places=3)

    def test_strang_splitting_is_second_order(self):
        grid = Grid(128, -16.0, 16.0)
        hamiltonian = GridHamiltonian.with_potential(grid, Potential(PotentialKind.HARMONIC, 1.0))
        psi = make_position_packet(grid, [3.0], 1.0)
        reference = evolve_grid(psi, hamiltonian, 1.0 / 640, 640).amplitudes
        errors = [
            np.linalg.norm(evolve_grid(psi, hamiltonian, 1.0 / steps, steps).amplitudes - reference) for steps in (10, 20, 40)
        ]
        for coarse, fine in zip(errors, errors[1:]):
            self.assertGreater(coarse / fine, 3.5)
            self.assertLess(coarse / fine, 4.5)

    def test_negative_mass_rejected(self):
        with self.assertRaises(ParameterError):
            GridHamiltonian.free(self.grid, -1.0)


class PotentialTests(SimpleTestCase):
    def test_kind_is_coerced(self):
        self.assertIs(Potential("harmonic", 2.0).kind, PotentialKind.HARMONIC)

    def test_harmonic_force_is_minus_gradient(self):
        potential = Potential(PotentialKind.HARMONIC, 2.0)
        self.assertAlmostEqual(float(potential.force(1.5, 3.0)), -3.0 * 4.0 * 1.5)
        self.assertAlmostEqual(float(potential.energy(1.5, 3.0)), 0.5 * 3.0 * 4.0 * 2.25)


class NewtonReferenceTests(SimpleTestCase):
    def test_harmonic_oscillator(self):
        times = np.linspace(0.0, 2 * np.pi, 200)
        trajectory = newton_trajectory(3.0, 0.0, 1.0, Potential(PotentialKind.HARMONIC, 1.0), times)
        np.testing.assert_allclose(trajectory.positions, 3.0 * np.cos(times), atol=1e-7)
        np.testing.assert_allclose(trajectory.momenta, -3.0 * np.sin(times), atol=1e-7)

    def test_uniform_force(self):
        times = np.linspace(0.0, 2.0, 50)
        trajectory = newton_trajectory(0.0, 1.0, 2.0, Potential(PotentialKind.UNIFORM_FORCE, 0.5), times)
        np.testing.assert_allclose(trajectory.momenta, 1.0 + 0.5 * times, atol=1e-8)


class ConstrainedStepTests(SimpleTestCase):
    def test_packet_at_rest_stays_put(self):
        grid = Grid(128, -16.0, 16.0)
        spec = ManifoldSpec(ManifoldKind.POSITION, 1.0, grid)
        hamiltonian = GridHamiltonian.free(grid)
        member, params = constrained_step(
            make_position_packet(grid, [1.0], 1.0), lambda psi: evolve_grid(psi, hamiltonian, 0.1, 1), spec, [1.0]
        )
        self.assertAlmostEqual(params[0], 1.0, places=6)
        self.assertTrue(member.is_normalized(1e-12))

    def test_free_packet_with_momentum_moves_classically(self):
        grid = Grid(128, -16.0, 16.0)
        spec = ManifoldSpec(ManifoldKind.PHASE_SPACE, 1.0, grid)
        hamiltonian = GridHamiltonian.free(grid)
        member, params = make_phase_packet(grid, [1.0], [0.5], 1.0), np.array([1.0, 0.5])
        for _ in range(10):
            member, params = constrained_step(member, lambda psi: evolve_grid(psi, hamiltonian, 0.1, 1), spec, params)
        np.testing.assert_allclose(params, [1.0 + 0.5 * 1.0, 0.5], atol=1e-4)
