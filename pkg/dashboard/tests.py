from django.test import TestCase
from django.urls import reverse

from scenarios.models import ReportFlag, RunStatus, ScenarioRun


class DashboardTests(TestCase):
    def setUp(self):
        self.run = ScenarioRun.objects.create(
            scenario="born",
            seed=2**64 - 1,
            config={"trials": 10, "seed": 2**64 - 1},
            statistics={"cases": []},
            status=RunStatus.FAILED,
        )
        ReportFlag.objects.create(
            run=self.run, name="case 0 eps 0.15 Born max |z|", value=4.2,
            comparison="<=", tolerance_key="z_limit", tolerance=3.0, passed=False,
        )
        ScenarioRun.objects.create(scenario="walk", seed=1, status=RunStatus.PASSED)

    def test_index_lists_runs(self):
        response = self.client.get(reverse("dashboard:index"))
        self.assertEqual(response.status_code, 200)
        self.assertContains(response, "born")
        self.assertEqual(response.context["total_runs"], 2)
        self.assertEqual(response.context["pass_rate"], 50.0)

    def test_run_detail_json(self):
        response = self.client.get(reverse("dashboard:run_detail", args=[self.run.pk]))
        data = response.json()
        self.assertEqual(data["seed"], 2**64 - 1)
        self.assertEqual(data["status"], "failed")
        self.assertEqual(data["flags"][0]["tolerance_key"], "z_limit")
        self.assertFalse(data["flags"][0]["passed"])

    def test_missing_run(self):
        response = self.client.get(reverse("dashboard:run_detail", args=[9999]))
        self.assertEqual(response.status_code, 404)

    def test_passed_flags_count(self):
        self.assertEqual(self.run.passed_flags, 0)
