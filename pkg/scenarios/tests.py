import tempfile
import warnings

import numpy as np
from django.test import SimpleTestCase, TestCase, tag

from core.exceptions import BudgetError, GridSupportError, LabWarning, ParameterError, TestValidityWarning
from core.forms import parse_and_validate
from packets.grid import Grid
from scenarios.box_escape import box_escape_run, spreading_variance
from scenarios.born import born_run, harmonic_weights
from scenarios.cat import cat_run
from scenarios.double_slit import double_slit_run, plate_sites
from scenarios.drift import drift_run, sigma_orthogonality
from scenarios.epr import check_joint_budget, epr_run, sampled_product_distance
from scenarios.models import ReportFlag, RunStatus, ScenarioRun
from scenarios.newton import default_duration, newton_run
from dynamics.propagators import Potential
from scenarios.registry import SCENARIOS, execute
from scenarios.report import ScenarioReport, Series
from scenarios.tasks import run_scenario
from scenarios.walk import walk_run


def config(scenario, **overrides):
    return parse_and_validate(scenario, {}, overrides)


class ScenarioReportTests(SimpleTestCase):
    def test_check_reads_tolerance_from_config(self):
        report = ScenarioReport("x", {"limit": 0.5}, 1)
        self.assertTrue(report.check("small", 0.1, "<", "limit"))
        self.assertFalse(report.check("large", 0.9, "<", "limit"))
        self.assertEqual(report.flag("large").tolerance, 0.5)
        self.assertFalse(report.passed)

    def test_summary_lists_flags(self):
        report = ScenarioReport("x", {"limit": 1.0}, 3)
        report.check("v", 0.5, "<=", "limit")
        summary = report.summary()
        self.assertEqual(summary["flags"][0]["tolerance_key"], "limit")
        self.assertTrue(summary["passed"])

    def test_series_column(self):
        series = Series(("a", "b"))
        series.append(1, 2)
        series.append(3, 4)
        self.assertEqual(series.column("b"), [2, 4])

    def test_every_scenario_is_registered(self):
        self.assertEqual(
            set(SCENARIOS), {"born", "walk", "double-slit", "box-escape", "epr", "cat", "newton", "drift"}
        )


class BornScenarioTests(SimpleTestCase):
    def test_harmonic_weights_only_for_two_levels(self):
        self.assertIsNone(harmonic_weights(np.array([0.2, 0.3, 0.5]), 0.15))
        np.testing.assert_allclose(harmonic_weights(np.array([0.5, 0.5]), 0.15), [0.5, 0.5])

    def test_symmetric_case(self):
        run = config("born", weights=[[0.5, 0.5]], epsilons=[0.15], trials=100, max_steps=100000, threads=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TestValidityWarning)
            report = born_run(run)
        self.assertEqual(len(report.series["frequencies"].rows), 2)
        self.assertTrue(report.flag("case 0 eps 0.15 censored fraction").passed)
        self.assertEqual(report.trials.total, 100)
        self.assertIn("by_epsilon", report.statistics["cases"][0])


class WalkScenarioTests(SimpleTestCase):
    def test_small_run(self):
        report = walk_run(config("walk", walkers=8, step_counts=[1, 2, 3]))
        self.assertEqual(report.series["variance_growth"].column("steps"), [1, 2, 3])
        self.assertEqual(len(report.series["end_displacements"].rows), 8)
        self.assertEqual(len(report.flags), 3)


class DoubleSlitTests(SimpleTestCase):
    def test_plate_sites_centered(self):
        grid = Grid(256, -32.0, 32.0)
        sites = plate_sites(grid, 3, 12)
        np.testing.assert_allclose(grid.nodes[sites], [-3.0, 0.0, 3.0])

    def test_plate_window_must_fit(self):
        with self.assertRaises(ParameterError):
            plate_sites(Grid(32, -8.0, 8.0), 8, 10)

    def test_small_run(self):
        run = config("double-slit", trials=40, step_angle=0.1, max_steps=200000)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LabWarning)
            report = double_slit_run(run)
        distances = report.statistics["manifold_distance"]
        self.assertLess(distances["incoming"], 1e-6)
        self.assertGreater(distances["after_slits"], 0.5)
        self.assertTrue(report.flag("distance increase through the slits").passed)
        self.assertTrue(report.flag("single-slit plate weights unimodal (local maxima)").passed)
        self.assertEqual(len(report.series["plate"].rows), 6)
        which = report.statistics["which_slit"]
        self.assertLess(which["discarded_weight"], 1e-10)
        self.assertEqual(which["total"], 40)
        self.assertIsNotNone(report.flag("which-slit frequencies max |z| vs (0.5, 0.5)"))


class BoxEscapeTests(SimpleTestCase):
    def test_spreading_variance(self):
        self.assertAlmostEqual(spreading_variance(1.0, 1.0, 2.0), 2.0)

    def test_default_run_passes(self):
        report = box_escape_run(config("box-escape"))
        self.assertTrue(report.passed, [f.name for f in report.flags if not f.passed])
        self.assertEqual(len(report.series["distances"].rows), 161)


class EprTests(SimpleTestCase):
    def test_budget(self):
        self.assertEqual(check_joint_budget(32), 1024)
        with self.assertRaises(BudgetError):
            check_joint_budget(128)

    def test_product_distance_of_sampled_members(self):
        a = np.array([1.0, 0.0, 0.0])
        self.assertAlmostEqual(sampled_product_distance(a, a, np.eye(3)), 0.0)

    def test_small_run(self):
        report = epr_run(config("epr", trials=12, step_angle=0.1, max_steps=200000))
        self.assertTrue(report.flag("sampled distance to position products").passed)
        self.assertTrue(report.flag("sampled distance to momentum products").passed)
        self.assertEqual(len(report.series["landing"].rows), 12)
        self.assertTrue(report.flag("hit trials landing on position products within epsilon").passed)
        self.assertGreaterEqual(report.statistics["landed_fraction"], 0.99)


class CatTests(SimpleTestCase):
    def test_uncoupled_pair_stays_a_product(self):
        report = cat_run(config("cat", coupling=0.0, t_end=0.2))
        self.assertTrue(report.passed, [f.name for f in report.flags if not f.passed])

    def test_coupling_entangles_unless_constrained(self):
        report = cat_run(config("cat"))
        self.assertTrue(report.flag("max entropy unconstrained").passed)
        self.assertTrue(report.flag("max entropy with constrained device").passed)

    def test_constrained_entropy_is_measured_before_projection(self):
        report = cat_run(config("cat", t_end=0.05))
        series = report.series["entropy"]
        unconstrained = series.column("entropy_unconstrained")
        constrained = series.column("entropy_constrained")
        # both modes take the same first step from the same product state
        self.assertAlmostEqual(constrained[1], unconstrained[1], places=12)
        self.assertGreater(constrained[1], 0.0)
        self.assertTrue(all(0.0 < s < 0.01 for s in constrained[1:]))


class NewtonTests(SimpleTestCase):
    def test_default_duration_is_one_period(self):
        self.assertAlmostEqual(default_duration(Potential("harmonic", 0.5)), 4 * np.pi)

    def test_coherent_harmonic_trajectory(self):
        report = newton_run(config("newton", t_end=1.0))
        self.assertTrue(report.passed, [f.name for f in report.flags if not f.passed])

    def test_uniform_force_momentum(self):
        report = newton_run(config("newton", potential="uniform_force", a0=0.0, t_end=1.0))
        self.assertTrue(report.flag("max |p_quantum - (p0 + f t)| / max |p|").passed)

    def test_free_packet_at_rest(self):
        report = newton_run(config("newton", potential="free", strength=0.0, a0=0.0, t_end=0.5))
        self.assertTrue(report.passed)


class DriftTests(SimpleTestCase):
    def test_sigma_direction_is_orthogonal(self):
        self.assertLess(sigma_orthogonality(Grid(128, -16.0, 16.0), 4.0, 1.0), 1e-8)

    def test_small_run(self):
        run = config("drift", trials=20, step_angle=0.2, max_steps=20000)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LabWarning)
            report = drift_run(run)
        self.assertTrue(report.flag("sigma direction overlap with the position manifold").passed)
        self.assertEqual(len(report.series["hits"].rows), 4)
        self.assertEqual(report.statistics["drift_magnitude"], 0.2)
        self.assertTrue(report.flag("mean steps to hit, drift / no drift").passed)
        self.assertLess(report.statistics["mean_steps_ratio"], 1.0)


class RecordingTests(TestCase):
    def test_execute_records_run_and_flags(self):
        with tempfile.TemporaryDirectory() as out:
            report, written, record = execute(config("box-escape", out=out), record=True)
            self.assertEqual(record.status, RunStatus.PASSED)
            self.assertEqual(ReportFlag.objects.filter(run=record).count(), len(report.flags))
            self.assertEqual(len(written), 3)

    def test_execute_without_record(self):
        with tempfile.TemporaryDirectory() as out:
            _, _, record = execute(config("box-escape", out=out, t_end=0.5), record=False)
        self.assertIsNone(record)
        self.assertEqual(ScenarioRun.objects.count(), 0)

    def test_failed_run_is_marked(self):
        with tempfile.TemporaryDirectory() as out:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", LabWarning)
                with self.assertRaises(GridSupportError):
                    execute(config("box-escape", out=out, center=62.0), record=True)
        self.assertEqual(ScenarioRun.objects.get().status, RunStatus.ERROR)

    def test_task_runs_a_config_echo(self):
        with tempfile.TemporaryDirectory() as out:
            values = config("box-escape", out=out, t_end=0.5).echo()
            result = run_scenario("box-escape", values)
        self.assertTrue(result["passed"])
        self.assertEqual(ScenarioRun.objects.get().pk, result["run_id"])

    def test_task_rejects_bad_echo(self):
        queued = ScenarioRun.objects.create(scenario="box-escape", seed=1, status=RunStatus.QUEUED)
        result = run_scenario("box-escape", {"bogus": 1}, queued.pk)
        self.assertFalse(result["passed"])
        queued.refresh_from_db()
        self.assertEqual(queued.status, RunStatus.ERROR)


@tag("slow")
class AcceptanceScaleTests(SimpleTestCase):
    def test_harmonic_trajectory_over_one_period(self):
        report = newton_run(config("newton"))
        self.assertTrue(report.passed, [f.name for f in report.flags if not f.passed])

    def test_product_persistence_over_longer_coupling(self):
        report = cat_run(config("cat", t_end=2.0))
        self.assertTrue(report.passed, [f.name for f in report.flags if not f.passed])

    def test_default_walk_completes_with_gaussian_end_displacement(self):
        report = walk_run(config("walk"))
        statistics = report.statistics
        self.assertEqual(len(report.series["end_displacements"].rows), 1000)
        self.assertLess(abs(statistics["skewness"]), 4 * statistics["skewness_standard_error"])
        self.assertLess(abs(statistics["excess_kurtosis"]), 4 * statistics["kurtosis_standard_error"])
        self.assertGreater(statistics["variance_fit_r2"], 0.99)

    def test_ten_thousand_walkers_pass_normality_and_linear_growth(self):
        report = walk_run(config("walk", walkers=10000))
        self.assertTrue(report.flag("|skewness| of end displacement").passed, report.statistics["skewness"])
        self.assertTrue(report.flag("|excess kurtosis| of end displacement").passed, report.statistics["excess_kurtosis"])
        self.assertTrue(report.flag("variance growth linear fit R^2").passed, report.statistics["variance_fit_r2"])

    def test_default_drift_keeps_statistics_and_hits_sooner(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LabWarning)
            report = drift_run(config("drift"))
        self.assertTrue(report.flag("chi-square homogeneity p-value (drift vs no drift)").passed)
        self.assertTrue(report.flag("mean steps to hit, drift / no drift").passed)
        self.assertGreater(report.statistics["homogeneity_p_value"], 0.01)

    def test_default_which_slit_frequencies_are_even(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LabWarning)
            report = double_slit_run(config("double-slit"))
        self.assertTrue(report.flag("which-slit frequencies max |z| vs (0.5, 0.5)").passed)
        self.assertTrue(report.flag("which-slit symmetry p-value").passed)

    def test_default_epr_hits_land_on_position_products(self):
        report = epr_run(config("epr"))
        self.assertTrue(report.flag("hit trials landing on position products within epsilon").passed)
        self.assertTrue(report.flag("sampled distance to momentum products").passed)
