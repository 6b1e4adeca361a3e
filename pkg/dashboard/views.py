"""Dashboard views."""

from django.db.models import Count, Q
from django.http import JsonResponse
from django.shortcuts import get_object_or_404, render

from scenarios.models import RunStatus, ScenarioRun


def index(request):
    """Recorded runs with per-scenario pass counts."""
    runs = ScenarioRun.objects.prefetch_related("flags").all()[:50]
    per_scenario = (
        ScenarioRun.objects.values("scenario")
        .annotate(
            total=Count("id"),
            passed=Count("id", filter=Q(status=RunStatus.PASSED)),
            failed=Count("id", filter=Q(status=RunStatus.FAILED)),
            errors=Count("id", filter=Q(status=RunStatus.ERROR)),
        )
        .order_by("scenario")
    )
    finished = ScenarioRun.objects.filter(status__in=[RunStatus.PASSED, RunStatus.FAILED]).count()
    passed = ScenarioRun.objects.filter(status=RunStatus.PASSED).count()

    ctx = {
        "runs": runs,
        "per_scenario": per_scenario,
        "total_runs": ScenarioRun.objects.count(),
        "pass_rate": round(passed / finished * 100, 1) if finished else 0,
    }
    return render(request, "dashboard/index.html", ctx)


def run_detail(request, run_id: int):
    """Summary, configuration echo and flags of one run as JSON."""
    run = get_object_or_404(ScenarioRun, pk=run_id)
    return JsonResponse({
        "id": run.pk,
        "scenario": run.scenario,
        "seed": run.config.get("seed", int(run.seed)),
        "status": run.status,
        "config": run.config,
        "statistics": run.statistics,
        "error": run.error,
        "out_dir": run.out_dir,
        "created_at": run.created_at.isoformat(),
        "finished_at": run.finished_at.isoformat() if run.finished_at else None,
        "flags": [
            {
                "name": f.name,
                "value": f.value,
                "comparison": f.comparison,
                "tolerance_key": f.tolerance_key,
                "tolerance": f.tolerance,
                "passed": f.passed,
            }
            for f in run.flags.all()
        ],
    })
