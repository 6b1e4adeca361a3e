"""Drift invariance: hitting statistics with and without a drift along the sigma-variation direction.

The walk runs in the span of two plate-site packets and their sigma tangents.
The drift pulls the state back toward the position manifold and vanishes on it.
"""

import logging

import numpy as np

from core.forms import RunConfig
from dynamics.propagators import RestoringDrift, default_step_config
from gue.sampler import derive_seed
from measure.statistics import chi_square_uniformity
from measure.walks import MeasurementSubspace, run_trials
from packets.embedding import position_tangents, sigma_tangent
from packets.grid import Grid
from scenarios.report import ScenarioReport, Series

logger = logging.getLogger(__name__)


def sigma_orthogonality(grid: Grid, center: float, sigma: float) -> float:
    """Largest |overlap| of the unit sigma tangent with the packet and its position tangent."""
    tangent = sigma_tangent(grid, [center], sigma)
    direction = tangent.direction.amplitudes
    along = position_tangents(grid, [center], sigma)[0].amplitudes
    along = along / np.linalg.norm(along)
    return float(max(abs(np.vdot(direction, tangent.base.vector)), abs(np.vdot(direction, along))))


def drift_run(run: RunConfig) -> ScenarioReport:
    values = run.echo()
    report = ScenarioReport("drift", values, run.seed)
    grid = Grid(values["points"], values["axis_min"], values["axis_max"])
    sigma, half = values["sigma"], values["site_separation"] / 2.0
    centers = [-half, half]

    tangents = [sigma_tangent(grid, [c], sigma) for c in centers]
    anchors = [t.base.vector for t in tangents]
    hooks = [t.direction.amplitudes for t in tangents]
    orthogonality = max(sigma_orthogonality(grid, c, sigma) for c in centers)
    report.statistics["sigma_direction_overlap"] = orthogonality
    report.check("sigma direction overlap with the position manifold", orthogonality, "<=", "orthogonality_limit")

    subspace = MeasurementSubspace(np.array(anchors + hooks))
    detectors = subspace.detectors(anchors, values["epsilon"])
    psi0, _ = subspace.coordinates(np.sum(anchors, axis=0))
    magnitude = values["drift_ratio"] * values["step_angle"]
    rule = RestoringDrift.at_sites(grid, centers, sigma, magnitude, basis=subspace.basis)

    plain_cfg = default_step_config(subspace.dimension, values["step_angle"])
    drift_cfg = default_step_config(subspace.dimension, values["step_angle"], drift=rule)
    plain = run_trials(values["trials"], psi0, detectors, plain_cfg, derive_seed(run.seed, 0), values["max_steps"], run.threads)
    drifted = run_trials(values["trials"], psi0, detectors, drift_cfg, derive_seed(run.seed, 1), values["max_steps"], run.threads)
    report.trials = drifted

    p_value = chi_square_uniformity(plain, drifted)
    plain_steps, drift_steps = plain.mean_steps_to_hit(), drifted.mean_steps_to_hit()
    ratio = drift_steps / plain_steps if plain_steps > 0 else float("nan")
    report.statistics.update({
        "drift_magnitude": magnitude,
        "no_drift": plain.summary(),
        "drift": drifted.summary(),
        "homogeneity_p_value": p_value,
        "mean_steps_ratio": ratio,
    })
    report.series["hits"] = Series(
        ("run", "target", "count", "frequency"),
        [
            (name, target, int(stats.counts[target]), stats.frequencies[target])
            for name, stats in (("no_drift", plain), ("drift", drifted))
            for target in range(len(detectors))
        ],
    )
    report.check("chi-square homogeneity p-value (drift vs no drift)", p_value, ">", "p_limit")
    report.check("mean steps to hit, drift / no drift", ratio, "<", "speedup_limit")
    logger.info(f"[drift] p = {p_value:.4f}, mean steps {plain_steps:.1f} -> {drift_steps:.1f}")
    return report
