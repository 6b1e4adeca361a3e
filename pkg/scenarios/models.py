"""Recorded scenario runs and their pass/fail flags."""

from django.db import models


class RunStatus(models.TextChoices):
    QUEUED = "queued", "Queued"
    RUNNING = "running", "Running"
    PASSED = "passed", "All Flags Passed"
    FAILED = "failed", "Flags Failed"
    ERROR = "error", "Error"


class ScenarioRun(models.Model):
    """One execution of a scenario with its configuration echo and summary statistics."""

    scenario = models.CharField(max_length=20)
    seed = models.DecimalField(max_digits=20, decimal_places=0)  # u64
    config = models.JSONField(default=dict)
    statistics = models.JSONField(default=dict, blank=True)

    status = models.CharField(max_length=10, choices=RunStatus.choices, default=RunStatus.QUEUED)
    error = models.TextField(blank=True, default="")
    out_dir = models.CharField(max_length=500, blank=True, default="")
    task_id = models.CharField(max_length=64, blank=True, default="")

    # Timestamps
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ["-created_at"]

    def __str__(self):
        return f"{self.scenario} seed={self.seed} ({self.status})"

    @property
    def passed_flags(self) -> int:
        return self.flags.filter(passed=True).count()


class ReportFlag(models.Model):
    run = models.ForeignKey(ScenarioRun, on_delete=models.CASCADE, related_name="flags")
    name = models.CharField(max_length=200)
    value = models.FloatField(null=True, blank=True)  # None for NaN
    comparison = models.CharField(max_length=2)
    tolerance_key = models.CharField(max_length=50)
    tolerance = models.FloatField()
    passed = models.BooleanField(default=False)

    class Meta:
        ordering = ["id"]

    def __str__(self):
        mark = "pass" if self.passed else "FAIL"
        return f"{self.name} {self.comparison} {self.tolerance_key} [{mark}]"
