"""Double slit: distance of the slit superposition from the position manifold, plate and which-slit detection."""

import logging

import numpy as np

from core.exceptions import ParameterError
from core.forms import RunConfig
from dynamics.propagators import GridHamiltonian, default_step_config, evolve_grid
from gue.sampler import derive_seed
from hilbert.states import StateVector, as_array, normalize
from measure.statistics import binomial_z_scores, two_proportion_p_value
from measure.walks import DetectorSet, MeasurementSubspace, run_trials
from packets.embedding import make_position_packet
from packets.grid import Grid, ManifoldKind, ManifoldSpec
from packets.projection import project_to_manifold
from scenarios.report import ScenarioReport, Series

logger = logging.getLogger(__name__)


def plate_sites(grid: Grid, count: int, stride: int) -> np.ndarray:
    """Indices of ``count`` nodes ``stride`` apart, centered on the node nearest x = 0."""
    middle = int(np.argmin(np.abs(grid.nodes)))
    offsets = (np.arange(count) - (count - 1) / 2.0) * stride
    sites = middle + np.round(offsets).astype(int)
    if sites.min() < 0 or sites.max() >= grid.points_per_axis:
        raise ParameterError(f"plate window of {count} sites every {stride} nodes does not fit the grid")
    return sites


def _plate_detection(psi, sites, values, seed, threads):
    """Walk restricted to the plate sites; returns weights, discarded weight and trial stats."""
    amplitudes = as_array(psi)[sites]
    covered = float(np.sum(np.abs(amplitudes) ** 2))
    coordinates = normalize(amplitudes)
    detectors = DetectorSet.full_basis(len(sites), values["epsilon"])
    expected = np.abs(coordinates.amplitudes) ** 2
    cfg = default_step_config(len(sites), values["step_angle"])
    trial_stats = run_trials(values["trials"], coordinates, detectors, cfg, seed, values["max_steps"], threads)
    return expected, covered, trial_stats


def double_slit_run(run: RunConfig) -> ScenarioReport:
    values = run.echo()
    report = ScenarioReport("double-slit", values, run.seed)
    grid = Grid(values["points"], values["axis_min"], values["axis_max"])
    sigma, half = values["sigma"], values["slit_separation"] / 2.0
    spec = ManifoldSpec(ManifoldKind.POSITION, sigma, grid)
    hamiltonian = GridHamiltonian.free(grid, values["mass"])
    steps = int(round(values["t_plate"] / values["dt"]))

    left = make_position_packet(grid, [-half], sigma)
    right = make_position_packet(grid, [half], sigma)
    incoming = make_position_packet(grid, [0.0], sigma)
    slits = slit_superposition(grid, sigma, values["slit_separation"])

    before = project_to_manifold(incoming, spec).distance
    after = project_to_manifold(slits, spec).distance
    plate_state = evolve_grid(slits, hamiltonian, values["dt"], steps)
    at_plate = project_to_manifold(plate_state, spec).distance
    report.statistics["manifold_distance"] = {"incoming": before, "after_slits": after, "at_plate": at_plate}
    report.check("distance increase through the slits", after - before, ">", "on_slit_margin")
    logger.info(f"[double-slit] manifold distance {before:.4f} -> {after:.4f} -> {at_plate:.4f}")

    sites = plate_sites(grid, values["plate_sites"], values["plate_stride"])
    single_state = evolve_grid(right, hamiltonian, values["dt"], steps)
    table = Series(("run", "site", "x", "born_weight", "frequency", "z"))
    for index, (name, state) in enumerate((("two_slits", plate_state), ("single_slit", single_state))):
        expected, covered, trial_stats = _plate_detection(
            state, sites, values, derive_seed(run.seed, index), run.threads
        )
        z = binomial_z_scores(trial_stats.frequencies, expected, trial_stats.total)
        for k, site in enumerate(sites):
            table.append(name, int(site), float(grid.nodes[site]), expected[k], trial_stats.frequencies[k], z[k])
        report.statistics[name] = {
            "covered_weight": covered,
            "born_weights": expected.tolist(),
            **trial_stats.summary(),
        }
        report.check(f"{name} plate frequencies max |z| vs |psi|^2", float(np.max(np.abs(z))), "<=", "z_limit")
        if name == "two_slits":
            report.trials = trial_stats
        else:
            peaks = _local_maxima(expected)
            report.statistics[name]["born_local_maxima"] = peaks
            report.check("single-slit plate weights unimodal (local maxima)", peaks, "<=", "unimodal_limit")
    report.series["plate"] = table

    # which-slit detection at the slit plane
    subspace = MeasurementSubspace(np.array([left.amplitudes, right.amplitudes]))
    coordinates, discarded = subspace.coordinates(slits)
    detectors = subspace.detectors([left, right], values["epsilon"])
    cfg = default_step_config(subspace.dimension, values["step_angle"])
    which = run_trials(values["trials"], coordinates, detectors, cfg, derive_seed(run.seed, 2), values["max_steps"], run.threads)
    z = binomial_z_scores(which.frequencies, np.array([0.5, 0.5]), which.total)
    report.statistics["which_slit"] = {"discarded_weight": discarded, **which.summary()}
    report.check("which-slit frequencies max |z| vs (0.5, 0.5)", float(np.max(np.abs(z))), "<=", "z_limit")
    report.check(
        "which-slit symmetry p-value",
        two_proportion_p_value(int(which.counts[0]), int(which.counts[1]), max(which.total, 1)),
        ">",
        "symmetry_p_limit",
    )
    return report


def _local_maxima(weights: np.ndarray) -> int:
    padded = np.concatenate([[-np.inf], weights, [-np.inf]])
    return int(np.sum((padded[1:-1] > padded[:-2]) & (padded[1:-1] >= padded[2:])))


def slit_superposition(grid: Grid, sigma: float, separation: float) -> StateVector:
    half = separation / 2.0
    return normalize(
        make_position_packet(grid, [-half], sigma).amplitudes + make_position_packet(grid, [half], sigma).amplitudes
    )
