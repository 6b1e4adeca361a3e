"""Django management command running the lab scenarios and self-test suites."""

import json
import logging

from django.core.management import call_command
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import ConfigValidationError, LabError
from core.forms import SCENARIO_FORMS, load_document, parse_and_validate
from core.output import jsonable

logger = logging.getLogger(__name__)

TEST_LABELS = ("hilbert", "packets", "gue", "dynamics", "measure", "scenarios", "core", "dashboard")


def parse_assignment(text: str) -> tuple[str, object]:
    """KEY=VALUE with VALUE read as JSON when it parses, else as a string."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigValidationError(text, "overrides must look like KEY=VALUE")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


class Command(BaseCommand):
    help = "Run a lab scenario or the property self-test suites"

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="scenario", required=True)
        for name in SCENARIO_FORMS:
            sub = subparsers.add_parser(name, help=f"Run the {name} scenario")
            sub.add_argument("--config", help="JSON configuration document")
            sub.add_argument("--seed", type=int, help="Master seed (u64)")
            sub.add_argument("--out", help="Output directory")
            sub.add_argument("--trials", type=int, help="Trial or walker count where the scenario has one")
            sub.add_argument("--threads", type=int, help="Worker threads, 0 = auto")
            sub.add_argument(
                "--set", action="append", default=[], metavar="KEY=VALUE",
                help="Override any configuration key (VALUE parsed as JSON)",
            )
            sub.add_argument("--queue", action="store_true", help="Enqueue on the Celery worker instead of running")
            sub.add_argument("--no-record", action="store_true", help="Do not record the run in the database")

        selftest = subparsers.add_parser("selftest", help="Run the property suites")
        selftest.add_argument("--full", action="store_true", help="Include the acceptance-scale slow suites")

    def handle(self, *args, **options):
        logging.basicConfig(
            level=logging.DEBUG if options["verbosity"] >= 2 else logging.INFO,
            format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
        )
        scenario = options["scenario"]
        if scenario == "selftest":
            self._selftest(options["full"], options["verbosity"])
            return

        try:
            run = self._validate(scenario, options)
        except ConfigValidationError as e:
            raise CommandError(f"invalid configuration: {e}", returncode=1) from e

        if options["queue"]:
            self._enqueue(run)
            return

        # Imported here so `lab selftest` does not load every scenario module.
        from scenarios.registry import execute

        try:
            report, written, _ = execute(run, record=False if options["no_record"] else None)
        except LabError as e:
            raise CommandError(f"{type(e).__name__}: {e}", returncode=2) from e
        except Exception as e:
            logger.exception(f"Unexpected failure running {scenario}: {e}")
            raise CommandError(f"unexpected {type(e).__name__}: {e}", returncode=2) from e

        for flag in report.flags:
            style = self.style.SUCCESS if flag.passed else self.style.WARNING
            mark = "PASS" if flag.passed else "FAIL"
            self.stdout.write(style(
                f"  [{mark}] {flag.name}: {flag.value:.6g} {flag.comparison} {flag.tolerance:g} ({flag.tolerance_key})"
            ))
        for path in written:
            self.stdout.write(f"  wrote {path}")
        verdict = "all flags passed" if report.passed else "some flags failed; see summary.json"
        self.stdout.write(self.style.SUCCESS(f"{scenario}: {verdict}"))

    def _validate(self, scenario: str, options: dict):
        document = load_document(options["config"]) if options["config"] else {}
        overrides = dict(parse_assignment(item) for item in options["set"])
        overrides.update({
            "seed": options["seed"],
            "out": options["out"],
            "trials": options["trials"],
            "threads": options["threads"],
        })
        trials = overrides.pop("trials")
        fields = SCENARIO_FORMS[scenario].base_fields
        if trials is not None:
            if "trials" in fields:
                overrides["trials"] = trials
            elif "walkers" in fields:
                overrides["walkers"] = trials
            else:
                raise ConfigValidationError("trials", f"the {scenario} scenario has no trial count")
        return parse_and_validate(scenario, document, overrides)

    def _enqueue(self, run):
        from scenarios.registry import start_record
        from scenarios.models import RunStatus
        from scenarios.tasks import run_scenario

        record = start_record(run, status=RunStatus.QUEUED)
        result = run_scenario.delay(run.scenario, jsonable(run.echo()), record.pk)
        record.task_id = result.id or ""
        record.save(update_fields=["task_id"])
        self.stdout.write(self.style.SUCCESS(f"Queued {run.scenario} as run #{record.pk} (task {result.id})"))

    def _selftest(self, full: bool, verbosity: int):
        options = {"verbosity": verbosity}
        if not full:
            options["exclude_tags"] = ["slow"]
        self.stdout.write(f"Running property suites{' (full)' if full else ''}...")
        call_command("test", *TEST_LABELS, **options)
