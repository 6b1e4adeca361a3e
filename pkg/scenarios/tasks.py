"""Celery tasks for background scenario runs."""

import logging

from celery import shared_task

from core.exceptions import LabError
from core.forms import parse_and_validate
from scenarios.models import RunStatus, ScenarioRun
from scenarios.registry import execute

logger = logging.getLogger(__name__)


@shared_task
def run_scenario(scenario: str, values: dict, run_id: int | None = None):
    """Re-validate a configuration echo and execute it.

    The echo is validated again on the worker so a stale or hand-edited payload
    fails the same way it would on the command line.
    """
    existing = ScenarioRun.objects.filter(pk=run_id).first() if run_id is not None else None
    try:
        run = parse_and_validate(scenario, values)
        report, written, entry = execute(run, record=True, existing=existing)
    except LabError as e:
        logger.error(f"[{scenario}] background run failed: {e}")
        if existing is not None and existing.status == RunStatus.QUEUED:
            existing.status = RunStatus.ERROR
            existing.error = f"{type(e).__name__}: {e}"
            existing.save(update_fields=["status", "error"])
        return {"scenario": scenario, "passed": False, "error": str(e)}
    return {
        "scenario": scenario,
        "run_id": entry.pk if entry else None,
        "passed": report.passed,
        "files": [str(p) for p in written],
    }
