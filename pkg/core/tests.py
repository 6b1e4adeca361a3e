import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from core.exceptions import ConfigValidationError, OutputError
from core.forms import load_document, parse_and_validate
from core.management.commands.lab import parse_assignment
from core.output import emit, jsonable, read_series
from measure.walks import TrialStats, WalkOutcome
from scenarios.models import ScenarioRun
from scenarios.report import ScenarioReport, Series


class ParseAndValidateTests(SimpleTestCase):
    def test_defaults_fill_missing_keys(self):
        run = parse_and_validate("box-escape", {})
        self.assertEqual(run.values["points"], 256)
        self.assertEqual(run.values["t_end"], 8.0)

    def test_unknown_key_is_named(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_and_validate("box-escape", {"bogus": 1})
        self.assertEqual(ctx.exception.key, "bogus")

    def test_unknown_scenario(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_and_validate("teleport", {})
        self.assertEqual(ctx.exception.key, "scenario")

    def test_out_of_range_value_is_named(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_and_validate("born", {"epsilon": 0.5})
        self.assertEqual(ctx.exception.key, "epsilon")

    def test_override_wins_over_document(self):
        run = parse_and_validate("box-escape", {"seed": 7}, {"seed": 42})
        self.assertEqual(run.seed, 42)

    def test_none_override_keeps_document(self):
        run = parse_and_validate("box-escape", {"seed": 7}, {"seed": None})
        self.assertEqual(run.seed, 7)

    def test_seed_accepts_full_u64_range(self):
        self.assertEqual(parse_and_validate("walk", {"seed": 2**64 - 1}).seed, 2**64 - 1)
        with self.assertRaises(ConfigValidationError):
            parse_and_validate("walk", {"seed": 2**64})

    def test_slits_must_be_separated(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_and_validate("double-slit", {"slit_separation": 2.0, "sigma": 0.5})
        self.assertEqual(ctx.exception.key, "slit_separation")

    def test_born_weights_must_sum_to_one(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_and_validate("born", {"weights": [[0.3, 0.3]]})
        self.assertEqual(ctx.exception.key, "weights")

    def test_epsilon_sweep_bounded(self):
        with self.assertRaises(ConfigValidationError):
            parse_and_validate("born", {"epsilons": [0.1, 0.3]})

    def test_step_counts_sorted_and_deduplicated(self):
        run = parse_and_validate("walk", {"step_counts": [30, 10, 20, 10]})
        self.assertEqual(run.values["step_counts"], [10, 20, 30])

    def test_harmonic_needs_positive_strength(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_and_validate("newton", {"potential": "harmonic", "strength": 0.0})
        self.assertEqual(ctx.exception.key, "strength")

    def test_axis_bounds_ordered(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_and_validate("cat", {"axis_min": 4.0, "axis_max": -4.0})
        self.assertEqual(ctx.exception.key, "axis_max")

    def test_default_out_dir(self):
        with self.settings(LAB_OUTPUT_DIR="/tmp/lab-runs"):
            run = parse_and_validate("walk", {"seed": 5})
            self.assertEqual(run.out_dir, Path("/tmp/lab-runs/walk-5"))

    def test_echo_round_trips_through_json(self):
        run = parse_and_validate("born", {"seed": 3, "weights": [[0.25, 0.75]]})
        again = parse_and_validate("born", json.loads(json.dumps(run.echo())))
        self.assertEqual(again.values, run.values)


class LoadDocumentTests(SimpleTestCase):
    def test_reads_json_object(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.json"
            path.write_text('{"seed": 9}')
            self.assertEqual(load_document(path), {"seed": 9})

    def test_rejects_non_object(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.json"
            path.write_text("[1, 2]")
            with self.assertRaises(ConfigValidationError):
                load_document(path)

    def test_missing_file(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            load_document("/nonexistent/run.json")
        self.assertEqual(ctx.exception.key, "config")


class EmitTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_empty_trials_write_header_only(self):
        report = ScenarioReport("box-escape", {"limit": 1.0}, 1)
        emit(report, self.out)
        self.assertEqual((self.out / "trials.csv").read_text(), "trial_id,outcome,steps,final_distance\n")

    def test_trial_rows_keep_full_precision(self):
        stats = TrialStats((WalkOutcome(0, 10, 0.1), WalkOutcome(None, 5, 0.7)), 2, 11)
        emit(stats, self.out)
        lines = (self.out / "trials.csv").read_text().splitlines()
        self.assertEqual(lines[1], "0,0,10,0.10000000000000001")
        self.assertEqual(lines[2], "1,censored,5,0.69999999999999996")
        summary = json.loads((self.out / "summary.json").read_text())
        self.assertEqual(summary["statistics"]["counts"], [1, 0])

    def test_series_round_trip(self):
        report = ScenarioReport("walk", {}, 1)
        report.series["growth"] = Series(("steps", "variance"), [(1, 0.5), (2, 1.25)])
        written = emit(report, self.out)
        self.assertIn(self.out / "growth.csv", written)
        series = read_series(self.out / "growth.csv")
        self.assertEqual(series.header, ("steps", "variance"))
        self.assertEqual(series.column("variance"), [0.5, 1.25])

    def test_summary_is_deterministic(self):
        report = ScenarioReport("walk", {"b": 2, "a": np.float64(1.5)}, 1)
        report.statistics["x"] = np.arange(3)
        emit(report, self.out / "first")
        emit(report, self.out / "second")
        self.assertEqual(
            (self.out / "first" / "summary.json").read_bytes(),
            (self.out / "second" / "summary.json").read_bytes(),
        )

    def test_unwritable_directory(self):
        blocker = self.out / "file"
        blocker.write_text("")
        with self.assertRaises(OutputError):
            emit(ScenarioReport("walk", {}, 1), blocker / "sub")

    def test_summary_maps_non_finite_values_to_null(self):
        report = ScenarioReport("drift", {"limit": 1.0}, 1)
        report.statistics.update({"ratio": float("nan"), "bound": np.float64(np.inf), "series": [1.0, -np.inf]})
        emit(report, self.out)
        text = (self.out / "summary.json").read_text()
        self.assertNotIn("NaN", text)
        self.assertNotIn("Infinity", text)
        summary = json.loads(text, parse_constant=lambda name: self.fail(f"non-standard constant {name}"))
        self.assertIsNone(summary["statistics"]["ratio"])
        self.assertIsNone(summary["statistics"]["bound"])
        self.assertEqual(summary["statistics"]["series"], [1.0, None])

    def test_summary_floats_match_csv_precision(self):
        report = ScenarioReport("walk", {}, 1)
        report.statistics["variance_per_step"] = 0.1
        emit(report, self.out)
        text = (self.out / "summary.json").read_text()
        self.assertIn('"variance_per_step": 0.10000000000000001', text)
        self.assertEqual(json.loads(text)["statistics"]["variance_per_step"], 0.1)


class JsonableTests(SimpleTestCase):
    def test_converts_numpy_and_non_finite(self):
        value = jsonable({"a": np.int64(2), "b": [np.float32(0.5), float("nan")], 3: np.bool_(True)})
        self.assertEqual(value, {"a": 2, "b": [0.5, None], "3": True})


class ParseAssignmentTests(SimpleTestCase):
    def test_json_value(self):
        self.assertEqual(parse_assignment("weights=[[0.5, 0.5]]"), ("weights", [[0.5, 0.5]]))

    def test_plain_string(self):
        self.assertEqual(parse_assignment("potential=harmonic"), ("potential", "harmonic"))

    def test_missing_equals(self):
        with self.assertRaises(ConfigValidationError):
            parse_assignment("potential")


class LabCommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name) / "run"

    def tearDown(self):
        self.tmp.cleanup()

    def lab(self, *args):
        stdout = StringIO()
        call_command("lab", *args, stdout=stdout)
        return stdout.getvalue()

    def test_run_writes_outputs_and_records(self):
        output = self.lab("box-escape", "--out", str(self.out), "--set", "t_end=1.0")
        self.assertIn("[PASS]", output)
        self.assertTrue((self.out / "summary.json").exists())
        self.assertTrue((self.out / "distances.csv").exists())
        self.assertEqual(ScenarioRun.objects.get().scenario, "box-escape")

    def test_no_record(self):
        self.lab("box-escape", "--out", str(self.out), "--set", "t_end=0.5", "--no-record")
        self.assertFalse(ScenarioRun.objects.exists())

    def test_invalid_configuration_exits_one_without_outputs(self):
        with self.assertRaises(CommandError) as ctx:
            self.lab("box-escape", "--out", str(self.out), "--set", "bogus=1")
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertFalse(self.out.exists())

    def test_trials_on_scenario_without_trials(self):
        with self.assertRaises(CommandError) as ctx:
            self.lab("box-escape", "--out", str(self.out), "--trials", "5")
        self.assertEqual(ctx.exception.returncode, 1)

    def test_runtime_error_exits_two(self):
        with self.assertRaises(CommandError) as ctx:
            self.lab("box-escape", "--out", str(self.out), "--set", "center=62.0", "--no-record")
        self.assertEqual(ctx.exception.returncode, 2)

    def test_unexpected_error_is_logged_and_exits_two(self):
        with mock.patch("scenarios.registry.execute", side_effect=FloatingPointError("overflow in exp")):
            with self.assertLogs("core.management.commands.lab", level="ERROR") as logs:
                with self.assertRaises(CommandError) as ctx:
                    self.lab("box-escape", "--out", str(self.out), "--no-record")
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("FloatingPointError", str(ctx.exception))
        self.assertIn("overflow in exp", logs.output[0])

    def test_config_document_and_seed_flag(self):
        document = Path(self.tmp.name) / "run.json"
        document.write_text(json.dumps({"seed": 7, "t_end": 0.5}))
        self.lab("box-escape", "--config", str(document), "--seed", "42", "--out", str(self.out), "--no-record")
        summary = json.loads((self.out / "summary.json").read_text())
        self.assertEqual(summary["seed"], 42)
        self.assertEqual(summary["config"]["t_end"], 0.5)
