"""Writers for run outputs: summary.json, trials.csv and per-scenario series CSVs."""

import csv
import json
import logging
from pathlib import Path

import numpy as np

from core.exceptions import OutputError
from measure.walks import TrialStats
from scenarios.report import ScenarioReport, Series

logger = logging.getLogger(__name__)

TRIALS_HEADER = ("trial_id", "outcome", "steps", "final_distance")


class LabEncoder(json.JSONEncoder):
    """Fallback conversion of numpy scalars, arrays, complex numbers and paths to JSON types."""

    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex):
            return [o.real, o.imag]
        if isinstance(o, Path):
            return str(o)
        return super().default(o)


def format_value(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def summary_json(summary: dict, indent: int = 2) -> str:
    """Summary document with sorted keys; floats as ``.17g`` like the CSVs, non-finite values as null."""
    return _render(jsonable(summary), indent, 0) + "\n"


def _render(value, indent: int, depth: int) -> str:
    pad, inner = " " * (indent * depth), " " * (indent * (depth + 1))
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(key)}: {_render(value[key], indent, depth + 1)}" for key in sorted(value)]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, list):
        if not value:
            return "[]"
        items = [f"{inner}{_render(item, indent, depth + 1)}" for item in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(value, float):
        return format(value, ".17g")
    return json.dumps(value, allow_nan=False)


def _write_csv(path: Path, header, rows):
    try:
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(value) for value in row])
    except OSError as e:
        raise OutputError(path, str(e)) from e


def trial_rows(trial_stats: TrialStats | None):
    if trial_stats is None:
        return []
    return [
        (trial_id, outcome.label, outcome.steps, outcome.final_distance)
        for trial_id, outcome in enumerate(trial_stats.outcomes)
    ]


def emit(result: ScenarioReport | TrialStats, out_dir) -> list[Path]:
    """Write summary.json, trials.csv and any series CSVs into ``out_dir``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(out_dir, str(e)) from e

    if isinstance(result, ScenarioReport):
        summary, trial_stats, series = result.summary(), result.trials, result.series
    else:
        summary, trial_stats, series = {"statistics": result.summary()}, result, {}

    written = []
    summary_path = out_dir / "summary.json"
    try:
        summary_path.write_text(summary_json(summary))
    except OSError as e:
        raise OutputError(summary_path, str(e)) from e
    written.append(summary_path)

    trials_path = out_dir / "trials.csv"
    _write_csv(trials_path, TRIALS_HEADER, trial_rows(trial_stats))
    written.append(trials_path)

    for name, table in series.items():
        path = out_dir / f"{name}.csv"
        _write_csv(path, table.header, table.rows)
        written.append(path)

    logger.info(f"Wrote {len(written)} files to {out_dir}")
    return written


def read_series(path) -> Series:
    """Read back a series CSV (floats where possible)."""
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader))
        rows = [tuple(_parse(value) for value in row) for row in reader]
    return Series(header=header, rows=rows)


def _parse(value: str):
    try:
        return float(value)
    except ValueError:
        return value


def jsonable(value):
    """Plain JSON types for database storage; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, (str, type(None))):
        return value
    return jsonable(LabEncoder().default(value))
