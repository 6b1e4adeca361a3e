import warnings

import numpy as np
from django.test import SimpleTestCase, override_settings, tag
from scipy import stats

from core.exceptions import DimensionError, GridSupportError, LabWarning, ParameterError, TestValidityWarning
from dynamics.propagators import default_step_config
from gue.sampler import GueSampler, derive_sampler
from hilbert.states import StateVector, normalize, random_state
from measure.statistics import (
    binomial_z_scores,
    chi_square_uniformity,
    linear_fit_r2,
    normality_screen,
    two_proportion_p_value,
)
from measure.walks import (
    DetectorSet,
    MeasurementSubspace,
    TrialStats,
    WalkOutcome,
    born_weights,
    constrained_position_walk,
    constrained_position_walks,
    exact_step_angles,
    run_trials,
    run_walk,
    two_level_hitting_probability,
    walk_final_states,
)
from packets.grid import Grid, ManifoldKind, ManifoldSpec


def two_level_state(first_weight):
    return StateVector([np.sqrt(first_weight), np.sqrt(1.0 - first_weight)])


def stats_from(targets, target_count=2):
    outcomes = tuple(WalkOutcome(t, 10, 0.1) for t in targets)
    return TrialStats(outcomes=outcomes, target_count=target_count, master_seed=0)


class DetectorSetTests(SimpleTestCase):
    def test_empty_set_rejected(self):
        with self.assertRaises(ParameterError):
            DetectorSet((), 0.1)

    def test_close_targets_rejected(self):
        with self.assertRaises(ParameterError):
            DetectorSet((normalize([1.0, 0.0]), normalize([1.0, 0.3])), 0.15)

    def test_mixed_dimensions_rejected(self):
        with self.assertRaises(DimensionError):
            DetectorSet((StateVector.basis(2, 0), StateVector.basis(3, 1)), 0.1)

    def test_full_basis(self):
        detectors = DetectorSet.full_basis(3, 0.1)
        self.assertEqual(len(detectors), 3)
        np.testing.assert_allclose(detectors.distances(StateVector.basis(3, 1).amplitudes), [[np.pi / 2, 0.0, np.pi / 2]])


class BornWeightTests(SimpleTestCase):
    def test_full_basis_weights(self):
        weights = born_weights(two_level_state(0.3), DetectorSet.full_basis(2))
        np.testing.assert_allclose(weights.weights, [0.3, 0.7])
        self.assertFalse(weights.renormalized)

    def test_partial_set_is_renormalized(self):
        psi = normalize([1.0, 1.0, 1.0])
        detectors = DetectorSet((StateVector.basis(3, 0), StateVector.basis(3, 1)), 0.1)
        with self.assertWarns(LabWarning):
            weights = born_weights(psi, detectors)
        np.testing.assert_allclose(weights.weights, [0.5, 0.5])
        self.assertAlmostEqual(weights.raw_total, 2.0 / 3.0)


class TwoLevelHittingTests(SimpleTestCase):
    def test_equator_is_even(self):
        self.assertAlmostEqual(two_level_hitting_probability(np.pi / 4, 0.15), 0.5)

    def test_inside_caps(self):
        self.assertEqual(two_level_hitting_probability(0.1, 0.15), 1.0)
        self.assertEqual(two_level_hitting_probability(np.pi / 2 - 0.1, 0.15), 0.0)

    def test_differs_from_born_weight(self):
        d0 = np.arccos(np.sqrt(0.3))
        self.assertAlmostEqual(two_level_hitting_probability(d0, 0.15), 0.388, places=3)

    def test_epsilon_range(self):
        with self.assertRaises(ParameterError):
            two_level_hitting_probability(0.5, np.pi / 4)


class MeasurementSubspaceTests(SimpleTestCase):
    def test_coordinates_and_lift(self):
        rng = np.random.default_rng(4)
        vectors = np.array([random_state(rng, 10).amplitudes for _ in range(3)])
        subspace = MeasurementSubspace(vectors)
        psi = normalize(vectors[0] + 0.5 * vectors[2])
        coordinates, discarded = subspace.coordinates(psi)
        self.assertEqual(subspace.dimension, 3)
        self.assertLess(discarded, 1e-12)
        np.testing.assert_allclose(subspace.lift(coordinates).amplitudes, psi.amplitudes, atol=1e-12)

    def test_discarded_weight(self):
        subspace = MeasurementSubspace(np.eye(4)[:2])
        _, discarded = subspace.coordinates(normalize([1.0, 0.0, 1.0, 0.0]))
        self.assertAlmostEqual(discarded, 0.5)

    def test_dependent_vectors_rejected(self):
        with self.assertRaises(DimensionError):
            MeasurementSubspace(np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]))


class TrialStatsTests(SimpleTestCase):
    def test_counts_and_frequencies(self):
        trial_stats = stats_from([0, 1, 1, None])
        np.testing.assert_array_equal(trial_stats.counts, [1, 2])
        self.assertEqual(trial_stats.censored, 1)
        np.testing.assert_allclose(trial_stats.frequencies, [0.25, 0.5])
        np.testing.assert_allclose(trial_stats.hit_conditioned_frequencies, [1 / 3, 2 / 3])

    def test_empty(self):
        trial_stats = stats_from([])
        np.testing.assert_array_equal(trial_stats.frequencies, [0.0, 0.0])
        self.assertEqual(trial_stats.wilson_intervals(), [(0.0, 1.0), (0.0, 1.0)])
        self.assertTrue(np.isnan(trial_stats.mean_steps_to_hit()))

    def test_wilson_interval_contains_frequency(self):
        trial_stats = stats_from([0] * 30 + [1] * 70)
        low, high = trial_stats.wilson_intervals()[0]
        self.assertLess(low, 0.3)
        self.assertGreater(high, 0.3)

    def test_summary_keys(self):
        summary = stats_from([0, 1]).summary()
        self.assertEqual(summary["counts"], [1, 1])
        self.assertIn("wilson_95", summary)


class WalkEngineTests(SimpleTestCase):
    def setUp(self):
        self.detectors = DetectorSet.full_basis(2, 0.15)
        self.cfg = default_step_config(2, 0.05)
        self.psi0 = two_level_state(0.3)

    def test_start_inside_detector(self):
        psi = normalize([1.0, 0.05])
        outcome = run_walk(psi, self.detectors, self.cfg, GueSampler(2, self.cfg.gue_scale, 0), max_steps=10)
        self.assertEqual(outcome.target, 0)
        self.assertEqual(outcome.steps, 0)

    def test_censoring(self):
        outcome = run_walk(self.psi0, self.detectors, self.cfg, GueSampler(2, self.cfg.gue_scale, 0), max_steps=1)
        self.assertTrue(outcome.censored)
        self.assertEqual(outcome.label, "censored")
        self.assertEqual(outcome.steps, 1)

    def test_hit_lands_inside_ball(self):
        outcome = run_walk(self.psi0, self.detectors, self.cfg, GueSampler(2, self.cfg.gue_scale, 5), max_steps=100000)
        self.assertFalse(outcome.censored)
        self.assertLessEqual(outcome.final_distance, 0.15)

    def test_deterministic_across_threads_and_batches(self):
        first = run_trials(40, self.psi0, self.detectors, self.cfg, 123, max_steps=100000, threads=1, batch_size=7)
        second = run_trials(40, self.psi0, self.detectors, self.cfg, 123, max_steps=100000, threads=4, batch_size=40)
        self.assertEqual(first.outcomes, second.outcomes)

    def test_single_walk_matches_trial(self):
        trial_stats = run_trials(3, self.psi0, self.detectors, self.cfg, 9, max_steps=100000, threads=1)
        outcomes, _ = walk_final_states(self.psi0, self.detectors, self.cfg, 9, range(2, 3), 100000)
        self.assertEqual(outcomes[0], trial_stats.outcomes[2])

    def test_negative_trial_count(self):
        with self.assertRaises(ParameterError):
            run_trials(-1, self.psi0, self.detectors, self.cfg, 0)

    @override_settings(LAB_THREADS=2)
    def test_zero_trials(self):
        trial_stats = run_trials(0, self.psi0, self.detectors, self.cfg, 0, max_steps=10)
        self.assertEqual(trial_stats.total, 0)

    def test_two_level_frequencies_follow_harmonic_measure(self):
        # The walk is Brownian motion on the Bloch sphere: its hit frequency is the
        # harmonic-measure value 0.388, not the Born weight 0.3.
        cfg = default_step_config(2, 0.02)
        trial_stats = run_trials(2000, self.psi0, self.detectors, cfg, 20240101, max_steps=1_000_000)
        frequency = trial_stats.hit_conditioned_frequencies[0]
        expected = two_level_hitting_probability(np.arccos(np.sqrt(0.3)), 0.15)
        self.assertEqual(trial_stats.censored, 0)
        self.assertAlmostEqual(frequency, expected, delta=0.055)
        self.assertLess(abs(frequency - expected), abs(frequency - 0.3))


class StepHomogeneityTests(SimpleTestCase):
    def test_step_angles_do_not_depend_on_base_point(self):
        n = 6
        cfg = default_step_config(n, 0.05)
        rng = np.random.default_rng(31)
        first = exact_step_angles(random_state(rng, n), GueSampler(n, cfg.gue_scale, 1), cfg, 2000)
        second = exact_step_angles(random_state(rng, n), GueSampler(n, cfg.gue_scale, 2), cfg, 2000)
        self.assertGreater(stats.ks_2samp(first, second).pvalue, 0.01)


class ConstrainedWalkTests(SimpleTestCase):
    def setUp(self):
        self.spec = ManifoldSpec(ManifoldKind.POSITION, 2.0, Grid(32, -16.0, 16.0))
        self.cfg = default_step_config(32, 0.05)

    def test_checkpoints_recorded(self):
        recorded = constrained_position_walks([0.0], self.spec, self.cfg, 3, 4, 1, checkpoints=(1, 2))
        self.assertEqual(sorted(recorded), [1, 2, 3])
        self.assertEqual(recorded[3].shape, (4, 1))

    def test_start_outside_margin(self):
        with self.assertRaises(GridSupportError):
            constrained_position_walks([12.0], self.spec, self.cfg, 1, 1, 1)

    def test_phase_space_manifold_rejected(self):
        spec = ManifoldSpec(ManifoldKind.PHASE_SPACE, 2.0, Grid(32, -16.0, 16.0))
        with self.assertRaises(ParameterError):
            constrained_position_walks([0.0, 0.0], spec, self.cfg, 1, 1, 1)

    def test_default_seed_walkers_replay_without_projection_failure(self):
        # walkers that stopped short of ACCEPTED_GRADIENT at the true optimum
        for walker in (341, 971):
            sampler = derive_sampler(20240101, walker, self.spec.dimension, self.cfg.gue_scale)
            params = constrained_position_walk([0.0], self.spec, self.cfg, 20, sampler)
            self.assertTrue(np.all(np.isfinite(params)))
            self.assertLess(abs(params[0]), 8.0)

    def test_single_walker_matches_batched_walk(self):
        batched = constrained_position_walks([0.0], self.spec, self.cfg, 5, 3, 11)
        sampler = derive_sampler(11, 2, self.spec.dimension, self.cfg.gue_scale)
        single = constrained_position_walk([0.0], self.spec, self.cfg, 5, sampler)
        np.testing.assert_allclose(single, batched[5][2], atol=1e-6)


class StatisticsTests(SimpleTestCase):
    def test_identical_runs_are_homogeneous(self):
        trial_stats = stats_from([0] * 50 + [1] * 50)
        self.assertEqual(chi_square_uniformity(trial_stats, trial_stats), 1.0)

    def test_different_runs_are_not(self):
        p = chi_square_uniformity(stats_from([0] * 90 + [1] * 10), stats_from([0] * 10 + [1] * 90))
        self.assertLess(p, 1e-10)

    def test_small_expected_counts_warn(self):
        with self.assertWarns(TestValidityWarning):
            chi_square_uniformity(stats_from([0, 0, 1]), stats_from([0, 1, 1]))

    def test_mismatched_detector_sets(self):
        with self.assertRaises(ParameterError):
            chi_square_uniformity(stats_from([0], 2), stats_from([0], 3))

    def test_two_proportion(self):
        self.assertEqual(two_proportion_p_value(0, 0, 10), 1.0)
        self.assertAlmostEqual(two_proportion_p_value(50, 50, 100), 1.0)
        self.assertLess(two_proportion_p_value(20, 80, 100), 1e-6)

    def test_z_scores(self):
        z = binomial_z_scores([0.5], [0.4], 100)
        self.assertAlmostEqual(float(z[0]), 0.1 / np.sqrt(0.24 / 100))

    def test_normality_screen(self):
        sample = np.random.default_rng(0).standard_normal(20000)
        screen = normality_screen(sample)
        self.assertTrue(screen.passes(5 * screen.skewness_error, 5 * screen.kurtosis_error))

    def test_normality_screen_needs_data(self):
        with self.assertRaises(ParameterError):
            normality_screen([1.0, 2.0])

    def test_linear_fit(self):
        x = np.arange(10.0)
        slope, r2 = linear_fit_r2(x, 3 * x + 1)
        self.assertAlmostEqual(slope, 3.0)
        self.assertAlmostEqual(r2, 1.0)


@tag("slow")
class BornAcceptanceTests(SimpleTestCase):
    """Full-basis walks at 10^4 trials; records how far frequencies sit from the Born weights."""

    def test_three_level_walk_completes(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TestValidityWarning)
            detectors = DetectorSet.full_basis(3, 0.15)
            cfg = default_step_config(3, 0.05)
            psi0 = StateVector(np.sqrt([0.2, 0.3, 0.5]))
            trial_stats = run_trials(10000, psi0, detectors, cfg, 20240101, max_steps=1_000_000)
        self.assertLess(trial_stats.censored / trial_stats.total, 0.01)
        self.assertAlmostEqual(trial_stats.hit_conditioned_frequencies.sum(), 1.0)
