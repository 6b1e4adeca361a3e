import numpy as np
from django.test import SimpleTestCase, tag
from scipy.stats import unitary_group

from core.exceptions import ParameterError
from gue.sampler import (
    GueSampler,
    HermitianMatrix,
    derive_sampler,
    derive_seed,
    sample,
    semicircle_cdf,
    spectral_ks,
    unitary_invariance_check,
)


class GueSamplerTests(SimpleTestCase):
    def test_draws_are_exactly_hermitian(self):
        sampler = GueSampler(dimension=6, scale=0.7, rng_seed=1)
        for _ in range(20):
            h = sampler.draw()
            self.assertTrue(np.array_equal(h, h.conj().T))

    def test_sample_wraps_draw(self):
        h = sample(GueSampler(dimension=3, scale=1.0, rng_seed=9))
        self.assertIsInstance(h, HermitianMatrix)
        self.assertEqual(h.dimension, 3)

    def test_same_seed_is_bit_identical(self):
        a = GueSampler(dimension=5, scale=1.0, rng_seed=42)
        b = GueSampler(dimension=5, scale=1.0, rng_seed=42)
        for _ in range(5):
            self.assertTrue(np.array_equal(a.draw(), b.draw()))

    def test_buffered_draws_match_single_draws(self):
        single = GueSampler(dimension=4, scale=1.0, rng_seed=3)
        buffered = GueSampler(dimension=4, scale=1.0, rng_seed=3)
        expected = np.array([single.draw() for _ in range(7)])
        self.assertTrue(np.array_equal(buffered.draw_many(7), expected))

    def test_trial_streams_differ(self):
        first = derive_sampler(7, 0, 4, 1.0).draw()
        second = derive_sampler(7, 1, 4, 1.0).draw()
        self.assertFalse(np.array_equal(first, second))

    def test_trace_square_mean(self):
        sampler = GueSampler(dimension=4, scale=1.0, rng_seed=11)
        traces = [np.trace(h @ h).real for h in sampler.draw_many(2000)]
        # E Tr H^2 = N^2 s^2; std of the mean is sqrt(32 / 2000)
        self.assertAlmostEqual(float(np.mean(traces)), 16.0, delta=0.7)

    def test_consecutive_traces_are_uncorrelated(self):
        sampler = GueSampler(dimension=4, scale=1.0, rng_seed=21)
        traces = np.trace(sampler.draw_many(4000), axis1=1, axis2=2).real
        r = np.corrcoef(traces[:-1], traces[1:])[0, 1]
        self.assertLess(abs(r), 4.0 / np.sqrt(traces.size))

    def test_rejects_bad_parameters(self):
        with self.assertRaises(ParameterError):
            GueSampler(dimension=1, scale=1.0, rng_seed=0)
        with self.assertRaises(ParameterError):
            GueSampler(dimension=3, scale=0.0, rng_seed=0)
        with self.assertRaises(ParameterError):
            GueSampler(dimension=3, scale=1.0, rng_seed=-1)

    def test_non_hermitian_matrix_rejected(self):
        with self.assertRaises(ParameterError):
            HermitianMatrix(np.array([[0, 1], [0, 0]]))


class DeriveSeedTests(SimpleTestCase):
    def test_deterministic_and_key_dependent(self):
        self.assertEqual(derive_seed(5, 1, 2), derive_seed(5, 1, 2))
        self.assertNotEqual(derive_seed(5, 1, 2), derive_seed(5, 2, 1))
        self.assertLess(derive_seed(5, 0), 2**64)


class SemicircleTests(SimpleTestCase):
    def test_cdf_endpoints(self):
        self.assertAlmostEqual(float(semicircle_cdf(-2.0)), 0.0)
        self.assertAlmostEqual(float(semicircle_cdf(0.0)), 0.5)
        self.assertAlmostEqual(float(semicircle_cdf(2.0)), 1.0)

    def test_small_spectrum_follows_semicircle(self):
        result = spectral_ks(GueSampler(dimension=64, scale=1.0, rng_seed=2024), 20)
        self.assertGreater(result.pvalue, 0.01)

    @tag("slow")
    def test_acceptance_spectrum(self):
        result = spectral_ks(GueSampler(dimension=256, scale=1.0, rng_seed=20240101), 100)
        self.assertGreater(result.pvalue, 0.01)


class UnitaryInvarianceTests(SimpleTestCase):
    def test_identity_rotation_has_no_discrepancy(self):
        report = unitary_invariance_check(GueSampler(dimension=3, scale=1.0, rng_seed=1), np.eye(3), 50)
        self.assertEqual(report.max_discrepancy, 0.0)

    def test_random_unitary_keeps_moments(self):
        unitary = unitary_group.rvs(4, random_state=np.random.default_rng(8))
        report = unitary_invariance_check(GueSampler(dimension=4, scale=1.0, rng_seed=4), unitary, 4000)
        self.assertTrue(report.within(6.0))

    def test_non_unitary_rejected(self):
        sampler = GueSampler(dimension=2, scale=1.0, rng_seed=1)
        with self.assertRaises(ParameterError):
            unitary_invariance_check(sampler, 2 * np.eye(2), 10)

    def test_needs_two_draws(self):
        sampler = GueSampler(dimension=2, scale=1.0, rng_seed=1)
        with self.assertRaises(ParameterError):
            unitary_invariance_check(sampler, np.eye(2), 1)
