import numpy as np
from django.test import SimpleTestCase
from scipy.stats import unitary_group

from core.exceptions import DegenerateStateError, DimensionError, ParameterError
from hilbert.states import (
    Ray,
    StateVector,
    fs_distance,
    fs_distances,
    inner,
    normalize,
    random_state,
    schmidt_coefficients,
    schmidt_entropy,
    tangent_project,
)


class StateVectorTests(SimpleTestCase):
    def test_rejects_single_amplitude(self):
        with self.assertRaises(DimensionError):
            StateVector([1.0])

    def test_rejects_non_finite(self):
        with self.assertRaises(ParameterError):
            StateVector([1.0, np.nan])

    def test_amplitudes_are_read_only(self):
        state = StateVector([1.0, 0.0])
        with self.assertRaises(ValueError):
            state.amplitudes[0] = 2.0

    def test_basis_vector(self):
        e2 = StateVector.basis(3, 2)
        np.testing.assert_array_equal(e2.amplitudes, [0, 0, 1])
        self.assertTrue(e2.is_normalized())


class InnerAndNormalizeTests(SimpleTestCase):
    def test_inner_is_conjugate_linear_in_first_argument(self):
        psi = np.array([1j, 0.0])
        phi = np.array([1.0, 0.0])
        self.assertAlmostEqual(inner(psi, phi), -1j)

    def test_inner_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            inner([1, 0], [1, 0, 0])

    def test_normalize(self):
        state = normalize([3.0, 4.0])
        np.testing.assert_allclose(state.amplitudes, [0.6, 0.8])

    def test_normalize_zero_vector(self):
        with self.assertRaises(DegenerateStateError):
            normalize([0.0, 0.0])

    def test_ray_normalizes_representative(self):
        ray = Ray.of([2.0, 0.0])
        self.assertAlmostEqual(np.linalg.norm(ray.vector), 1.0)


class FubiniStudyDistanceTests(SimpleTestCase):
    def test_orthogonal_states_are_maximally_apart(self):
        self.assertAlmostEqual(fs_distance([1, 0], [0, 1]), np.pi / 2)

    def test_equal_states_have_zero_distance(self):
        self.assertEqual(fs_distance([1, 0], [1, 0]), 0.0)

    def test_clamps_overlap_above_one(self):
        psi = np.array([1.0, 1e-9])
        self.assertEqual(fs_distance(psi, psi), 0.0)

    def test_forty_five_degrees(self):
        self.assertAlmostEqual(fs_distance([1, 0], [1, 1]), np.pi / 4)

    def test_metric_properties_on_random_triples(self):
        rng = np.random.default_rng(7)
        for n in (2, 8, 64):
            for _ in range(1000):
                a, b, c = (random_state(rng, n) for _ in range(3))
                phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
                ab = fs_distance(a, b)
                self.assertGreaterEqual(ab, 0.0)
                self.assertLessEqual(ab, np.pi / 2)
                self.assertAlmostEqual(ab, fs_distance(b, a), places=12)
                self.assertAlmostEqual(ab, fs_distance(a.amplitudes * phase, b), places=12)
                self.assertLessEqual(ab, fs_distance(a, c) + fs_distance(c, b) + 1e-12)

    def test_batched_distances_match_scalar(self):
        rng = np.random.default_rng(3)
        states = np.array([random_state(rng, 5).amplitudes for _ in range(10)])
        target = random_state(rng, 5)
        expected = [fs_distance(row, target) for row in states]
        np.testing.assert_allclose(fs_distances(states, target.amplitudes), expected, atol=1e-12)


class TangentProjectTests(SimpleTestCase):
    def test_result_is_orthogonal_to_base(self):
        rng = np.random.default_rng(11)
        base = random_state(rng, 6)
        v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        tangent = tangent_project(base, v)
        self.assertLess(abs(np.vdot(base.amplitudes, tangent.direction.amplitudes)), 1e-12)

    def test_projecting_the_base_gives_zero(self):
        base = normalize([1.0, 1.0j])
        tangent = tangent_project(base, base.amplitudes * 2.0)
        self.assertLess(tangent.norm(), 1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(12)
        base = random_state(rng, 7)
        once = tangent_project(base, rng.standard_normal(7) + 1j * rng.standard_normal(7))
        twice = tangent_project(base, once.direction.amplitudes)
        np.testing.assert_allclose(twice.direction.amplitudes, once.direction.amplitudes, atol=1e-12)


class SchmidtTests(SimpleTestCase):
    def test_product_state_has_zero_entropy(self):
        a = normalize([1.0, 2.0, 0.5])
        b = normalize([0.3, 1.0j])
        psi = np.kron(a.amplitudes, b.amplitudes)
        self.assertLess(schmidt_entropy(psi, 3, 2), 1e-12)

    def test_bell_state_has_ln_two(self):
        psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        self.assertAlmostEqual(schmidt_entropy(psi, 2, 2), np.log(2), places=12)

    def test_coefficients_sum_to_one(self):
        rng = np.random.default_rng(5)
        psi = random_state(rng, 12)
        self.assertAlmostEqual(schmidt_coefficients(psi, 3, 4).sum(), 1.0, places=12)

    def test_entropy_unchanged_by_local_unitaries(self):
        rng = np.random.default_rng(13)
        psi = random_state(rng, 24)
        local = np.kron(unitary_group.rvs(4, random_state=rng), unitary_group.rvs(6, random_state=rng))
        rotated = local @ psi.amplitudes
        self.assertAlmostEqual(schmidt_entropy(rotated, 4, 6), schmidt_entropy(psi, 4, 6), places=10)

    def test_bad_factorization(self):
        with self.assertRaises(DimensionError):
            schmidt_coefficients(np.ones(6), 4, 2)

    def test_unnormalized_state_rejected(self):
        with self.assertRaises(ParameterError):
            schmidt_entropy(np.ones(4), 2, 2)
