"""Scenario dispatch, output emission and run recording."""

import logging
from collections.abc import Callable

from django.conf import settings
from django.utils import timezone

from core.exceptions import LabError
from core.forms import RunConfig
from core.output import emit, jsonable
from scenarios.born import born_run
from scenarios.box_escape import box_escape_run
from scenarios.cat import cat_run
from scenarios.double_slit import double_slit_run
from scenarios.drift import drift_run
from scenarios.epr import epr_run
from scenarios.models import ReportFlag, RunStatus, ScenarioRun
from scenarios.newton import newton_run
from scenarios.report import ScenarioReport
from scenarios.walk import walk_run

logger = logging.getLogger(__name__)

SCENARIOS: dict[str, Callable[[RunConfig], ScenarioReport]] = {
    "born": born_run,
    "walk": walk_run,
    "double-slit": double_slit_run,
    "box-escape": box_escape_run,
    "epr": epr_run,
    "cat": cat_run,
    "newton": newton_run,
    "drift": drift_run,
}


def start_record(run: RunConfig, status: str = RunStatus.RUNNING) -> ScenarioRun:
    return ScenarioRun.objects.create(
        scenario=run.scenario,
        seed=run.seed,
        config=jsonable(run.echo()),
        status=status,
        out_dir=str(run.out_dir),
    )


def finish_record(record: ScenarioRun, report: ScenarioReport):
    record.statistics = jsonable(report.statistics)
    record.status = RunStatus.PASSED if report.passed else RunStatus.FAILED
    record.finished_at = timezone.now()
    record.save(update_fields=["statistics", "status", "finished_at"])
    ReportFlag.objects.bulk_create([
        ReportFlag(run=record, **jsonable(flag.as_dict())) for flag in report.flags
    ])


def execute(run: RunConfig, record: bool | None = None, existing: ScenarioRun | None = None):
    """Run a validated configuration, write its outputs and optionally record it.

    Returns ``(report, written_paths, record_or_None)``. Library errors mark the
    record as failed and propagate.
    """
    record = settings.LAB_RECORD_RUNS if record is None else record
    entry = existing
    if entry is None and record:
        entry = start_record(run)
    elif entry is not None:
        entry.status = RunStatus.RUNNING
        entry.save(update_fields=["status"])

    logger.info(f"[{run.scenario}] starting, seed {run.seed}")
    try:
        report = SCENARIOS[run.scenario](run)
        written = emit(report, run.out_dir)
    except LabError as e:
        if entry is not None:
            entry.status = RunStatus.ERROR
            entry.error = f"{type(e).__name__}: {e}"
            entry.finished_at = timezone.now()
            entry.save(update_fields=["status", "error", "finished_at"])
        raise

    if entry is not None:
        finish_record(entry, report)
    failed = [f.name for f in report.flags if not f.passed]
    logger.info(f"[{run.scenario}] finished: {len(report.flags) - len(failed)}/{len(report.flags)} flags passed")
    return report, written, entry
