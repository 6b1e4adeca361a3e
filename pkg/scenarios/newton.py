"""Schroedinger evolution constrained to the phase-space manifold against Newton's equations."""

import logging

import numpy as np

from core.exceptions import GridSupportError
from core.forms import RunConfig
from dynamics.propagators import GridHamiltonian, Potential, PotentialKind, constrained_step, evolve_grid, newton_trajectory
from packets.embedding import make_phase_packet
from packets.grid import SUPPORT_MARGIN_SIGMAS, Grid, ManifoldKind, ManifoldSpec
from scenarios.report import ScenarioReport, Series

logger = logging.getLogger(__name__)

DEFAULT_DURATION = 4.0


def default_duration(potential: Potential) -> float:
    """One period for a harmonic well, a fixed span otherwise."""
    if potential.kind is PotentialKind.HARMONIC:
        return 2.0 * np.pi / potential.strength
    return DEFAULT_DURATION


def classical_energy(a, p, mass: float, potential: Potential):
    return np.asarray(p) ** 2 / (2.0 * mass) + potential.energy(a, mass)


def constrained_trajectory(grid: Grid, sigma: float, mass: float, potential: Potential, a0, p0, dt, steps):
    """(a, p) after every step of split-step evolution projected onto the phase-space manifold."""
    spec = ManifoldSpec(ManifoldKind.PHASE_SPACE, sigma, grid)
    hamiltonian = GridHamiltonian.with_potential(grid, potential, mass)
    state = make_phase_packet(grid, [a0], [p0], sigma)
    params = np.array([a0, p0], dtype=float)
    trajectory = [params.copy()]
    for step in range(steps):
        state, params = constrained_step(state, lambda psi: evolve_grid(psi, hamiltonian, dt, 1), spec, params)
        if not grid.contains(params[:1], SUPPORT_MARGIN_SIGMAS * sigma):
            raise GridSupportError(f"packet at a = {params[0]:.4f} left the grid support margin at step {step + 1}")
        trajectory.append(params.copy())
    return np.array(trajectory)


def newton_run(run: RunConfig) -> ScenarioReport:
    values = run.echo()
    report = ScenarioReport("newton", values, run.seed)
    grid = Grid(values["points"], values["axis_min"], values["axis_max"])
    potential = Potential(values["potential"], values["strength"])
    mass, sigma, dt = values["mass"], values["sigma"], values["dt"]
    a0, p0 = values["a0"], values["p0"]
    t_end = values["t_end"] if values["t_end"] is not None else default_duration(potential)
    steps = int(round(t_end / dt))
    times = np.arange(steps + 1) * dt

    quantum = constrained_trajectory(grid, sigma, mass, potential, a0, p0, dt, steps)
    newton = newton_trajectory(a0, p0, mass, potential, times)
    energy = classical_energy(quantum[:, 0], quantum[:, 1], mass, potential)

    series = Series(("t", "a_quantum", "p_quantum", "a_newton", "p_newton", "energy"))
    for row in zip(times, quantum[:, 0], quantum[:, 1], newton.positions, newton.momenta, energy):
        series.append(*(float(v) for v in row))
    report.series["trajectory"] = series

    position_error = float(np.max(np.abs(quantum[:, 0] - newton.positions)))
    momentum_error = float(np.max(np.abs(quantum[:, 1] - newton.momenta)))
    report.statistics.update({
        "t_end": t_end,
        "max_position_error": position_error,
        "max_momentum_error": momentum_error,
    })

    if potential.kind is PotentialKind.HARMONIC:
        amplitude = float(np.hypot(a0, p0 / (mass * potential.strength)))
        drift = float(np.max(np.abs(energy - energy[0])) / abs(energy[0])) if energy[0] else 0.0
        report.statistics.update({"relative_trajectory_error": position_error / amplitude, "energy_drift": drift})
        report.check("max |a_quantum - a_newton| / amplitude", position_error / amplitude, "<", "trajectory_limit")
        report.check("relative energy drift", drift, "<", "energy_limit")
    elif potential.kind is PotentialKind.UNIFORM_FORCE:
        scale = float(np.max(np.abs(newton.momenta))) or 1.0
        report.statistics["relative_momentum_error"] = momentum_error / scale
        report.check("max |p_quantum - (p0 + f t)| / max |p|", momentum_error / scale, "<", "momentum_limit")
    else:
        report.statistics["position_error_in_spacings"] = position_error / grid.spacing
        report.check("max |a_quantum - (a0 + p0 t / m)| in grid spacings", position_error / grid.spacing, "<=", "rest_limit")
    logger.info(f"[newton] {potential.kind}: position error {position_error:.3e}, momentum error {momentum_error:.3e}")
    return report
