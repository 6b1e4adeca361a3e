"""Constrained classical walk: GUE steps projected onto the position manifold."""

import logging

import numpy as np

from core.forms import RunConfig
from dynamics.propagators import default_step_config
from measure.statistics import linear_fit_r2, normality_screen
from measure.walks import constrained_position_walks
from packets.grid import Grid, ManifoldKind, ManifoldSpec
from scenarios.report import ScenarioReport, Series

logger = logging.getLogger(__name__)


def walk_run(run: RunConfig) -> ScenarioReport:
    values = run.echo()
    report = ScenarioReport("walk", values, run.seed)
    grid = Grid(values["points"], values["axis_min"], values["axis_max"])
    spec = ManifoldSpec(ManifoldKind.POSITION, values["sigma"], grid)
    cfg = default_step_config(grid.size, values["step_angle"])
    counts = values["step_counts"]

    positions = constrained_position_walks(
        [values["start"]], spec, cfg, max(counts), values["walkers"], run.seed, checkpoints=counts
    )
    growth = Series(("steps", "mean_displacement", "variance"))
    variances = []
    for steps in counts:
        displacement = positions[steps][:, 0] - values["start"]
        variances.append(float(np.var(displacement)))
        growth.append(steps, float(np.mean(displacement)), variances[-1])
    report.series["variance_growth"] = growth

    final = positions[max(counts)][:, 0] - values["start"]
    screen = normality_screen(final)
    slope, r2 = linear_fit_r2(counts, variances)
    report.statistics.update({
        "skewness": screen.skewness,
        "excess_kurtosis": screen.excess_kurtosis,
        "skewness_standard_error": screen.skewness_error,
        "kurtosis_standard_error": screen.kurtosis_error,
        "variance_per_step": slope,
        "variance_fit_r2": r2,
    })
    report.series["end_displacements"] = Series(("walker", "displacement"), list(enumerate(final.tolist())))
    report.check("|skewness| of end displacement", abs(screen.skewness), "<", "skewness_limit")
    report.check("|excess kurtosis| of end displacement", abs(screen.excess_kurtosis), "<", "kurtosis_limit")
    report.check("variance growth linear fit R^2", r2, ">", "r2_limit")
    logger.info(f"[walk] variance per step {slope:.3e}, R^2 {r2:.6f}")
    return report
