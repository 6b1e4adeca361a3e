"""Free spreading of a packet: it leaves its own manifold point and approaches distant ones."""

import logging

import numpy as np

from core.forms import RunConfig
from dynamics.propagators import GridHamiltonian, evolve_grid, position_moments
from hilbert.states import fs_distance
from packets.embedding import make_position_packet
from packets.grid import Grid
from scenarios.report import ScenarioReport, Series

logger = logging.getLogger(__name__)


def spreading_variance(sigma: float, mass: float, t: float, hbar: float = 1.0) -> float:
    """Position variance of a free Gaussian: sigma^2 (1 + (hbar t / (2 m sigma^2))^2)."""
    return sigma**2 * (1.0 + (hbar * t / (2.0 * mass * sigma**2)) ** 2)


def box_escape_run(run: RunConfig) -> ScenarioReport:
    values = run.echo()
    report = ScenarioReport("box-escape", values, run.seed)
    grid = Grid(values["points"], values["axis_min"], values["axis_max"])
    sigma, mass, dt = values["sigma"], values["mass"], values["dt"]
    home = make_position_packet(grid, [values["center"]], sigma)
    distant = make_position_packet(grid, [values["center"] + values["distant_offset"] * sigma], sigma)
    hamiltonian = GridHamiltonian.free(grid, mass)
    steps = int(round(values["t_end"] / dt))

    series = Series(("t", "distance_home", "distance_distant", "variance", "variance_expected"))
    state = home
    worst_spreading = 0.0
    for step in range(steps + 1):
        if step:
            state = evolve_grid(state, hamiltonian, dt, 1)
        t = step * dt
        _, variance = position_moments(state, grid)
        expected = spreading_variance(sigma, mass, t)
        worst_spreading = max(worst_spreading, abs(variance - expected) / expected)
        series.append(t, fs_distance(state, home), fs_distance(state, distant), variance, expected)
    report.series["distances"] = series

    home_distances = np.array(series.column("distance_home"))
    distant_distances = np.array(series.column("distance_distant"))
    steps_down = float(np.min(np.diff(home_distances))) if home_distances.size > 1 else 0.0
    report.statistics.update({
        "initial_distance_home": home_distances[0],
        "final_distance_home": home_distances[-1],
        "initial_distance_distant": distant_distances[0],
        "final_distance_distant": distant_distances[-1],
        "max_relative_spreading_error": worst_spreading,
    })
    report.check("initial distance to home packet", home_distances[0], "<=", "monotone_slack")
    report.check("smallest step of distance to home packet", -steps_down, "<=", "monotone_slack")
    report.check("distant packet drop (start - end)", distant_distances[0] - distant_distances[-1], ">", "monotone_slack")
    report.check("relative error of free spreading law", worst_spreading, "<=", "spreading_limit")
    logger.info(
        f"[box-escape] home {home_distances[0]:.3f} -> {home_distances[-1]:.3f}, "
        f"distant {distant_distances[0]:.6f} -> {distant_distances[-1]:.6f}"
    )
    return report
