"""EPR pair geometry: a product of position packets against the position and momentum product manifolds.

Manifold distances are minima over a sampled parameter grid per factor and are
therefore upper bounds on the true distances.
"""

import logging

import numpy as np
from django.conf import settings

from core.exceptions import BudgetError
from core.forms import RunConfig
from dynamics.propagators import default_step_config
from gue.sampler import derive_seed
from measure.walks import MeasurementSubspace, TrialStats, walk_final_states
from packets.embedding import gaussian_axis, make_position_packet, momentum_axis
from packets.grid import SUPPORT_MARGIN_SIGMAS, Grid, ManifoldKind, ManifoldSpec
from packets.projection import project_to_manifold
from scenarios.report import ScenarioReport, Series

logger = logging.getLogger(__name__)


def check_joint_budget(factor_dimension: int, factors: int = 2) -> int:
    joint = factor_dimension**factors
    if joint > settings.LAB_MAX_JOINT_DIMENSION:
        raise BudgetError(f"joint dimension {joint} exceeds the budget {settings.LAB_MAX_JOINT_DIMENSION}")
    return joint


def pair_state(grid: Grid, first: float, second: float, sigma: float) -> np.ndarray:
    """omega(first) (x) omega(second) as a flat joint vector."""
    a = make_position_packet(grid, [first], sigma).amplitudes
    b = make_position_packet(grid, [second], sigma).amplitudes
    return np.kron(a, b)


def sampled_product_distance(factor_a: np.ndarray, factor_b: np.ndarray, samples: np.ndarray) -> float:
    """Minimum distance from a product state to products of sampled members (rows of ``samples``)."""
    unit = samples / np.linalg.norm(samples, axis=1, keepdims=True)
    first = np.abs(unit.conj() @ factor_a)
    second = np.abs(unit.conj() @ factor_b)
    best = float(np.max(np.multiply.outer(first, second)))
    return float(np.arccos(np.clip(best, 0.0, 1.0)))


def position_samples(grid: Grid, sigma: float, count: int) -> np.ndarray:
    margin = SUPPORT_MARGIN_SIGMAS * sigma
    nodes = grid.nodes[(grid.nodes >= grid.axis_min + margin) & (grid.nodes <= grid.axis_max - margin)]
    stride = max(1, int(np.ceil(nodes.size / count)))
    return np.array([gaussian_axis(grid, c, sigma) for c in nodes[::stride]])


def momentum_samples(grid: Grid, sigma: float, count: int, reach: float) -> np.ndarray:
    return np.array([momentum_axis(grid, b, sigma) for b in np.linspace(-reach, reach, count)])


def epr_run(run: RunConfig) -> ScenarioReport:
    values = run.echo()
    report = ScenarioReport("epr", values, run.seed)
    grid = Grid(values["points"], values["axis_min"], values["axis_max"])
    sigma, delta = values["sigma"], values["delta"]
    check_joint_budget(grid.size)
    spec = ManifoldSpec(ManifoldKind.POSITION, sigma, grid, factors=2)

    first = make_position_packet(grid, [values["center"]], sigma).amplitudes
    second = make_position_packet(grid, [values["center"] + delta], sigma).amplitudes
    count = values["samples_per_factor"]
    to_position = sampled_product_distance(first, second, position_samples(grid, sigma, count))
    to_momentum = sampled_product_distance(
        first, second, momentum_samples(grid, sigma, count, values["momentum_range"])
    )
    report.statistics.update({
        "distance_to_position_products_upper_bound": to_position,
        "distance_to_momentum_products_upper_bound": to_momentum,
        "samples_per_factor": count,
    })
    report.check("sampled distance to position products", to_position, "<=", "on_manifold_limit")
    report.check("sampled distance to momentum products", to_momentum, ">", "separation_limit")
    logger.info(f"[epr] position products {to_position:.3e} rad, momentum products {to_momentum:.4f} rad")

    trial_stats, landing = _measure_pairs(values, grid, spec, run.seed)
    report.trials = trial_stats
    report.series["landing"] = landing
    hits = [row for row in landing.rows if row[1] != "censored"]
    landed = sum(1 for row in hits if row[3] <= values["epsilon"])
    fraction = landed / len(hits) if hits else 0.0
    report.statistics.update({"measurement": trial_stats.summary(), "landed_fraction": fraction})
    report.check("hit trials landing on position products within epsilon", fraction, ">=", "landing_limit")
    return report


def _measure_pairs(values: dict, grid: Grid, spec: ManifoldSpec, seed: int):
    """Position measurement of a superposition of correlated pairs; each hit is projected onto M (x) M."""
    sites, delta, sigma = values["pair_sites"], values["delta"], values["sigma"]
    members = np.array([pair_state(grid, s, s + delta, sigma) for s in sites])
    subspace = MeasurementSubspace(members)
    initial = np.sum(members, axis=0)
    coordinates, discarded = subspace.coordinates(initial)
    detectors = subspace.detectors(list(members), values["epsilon"])
    cfg = default_step_config(subspace.dimension, values["step_angle"])
    walk_seed = derive_seed(seed, 0)
    outcomes, finals = walk_final_states(
        coordinates, detectors, cfg, walk_seed, range(values["trials"]), values["max_steps"]
    )

    landing = Series(("trial_id", "outcome", "walk_distance", "projection_distance", "a1", "a2"))
    for trial, outcome in enumerate(outcomes):
        if outcome.censored:
            landing.append(trial, "censored", outcome.final_distance, float("nan"), float("nan"), float("nan"))
            continue
        site = sites[outcome.target]
        joint = subspace.lift(finals[trial])
        projection = project_to_manifold(joint, spec, warm_start=[site, site + delta])
        landing.append(trial, outcome.target, outcome.final_distance, projection.distance, *projection.params)
    logger.info(f"[epr] measurement subspace discards {discarded:.2e} of the weight")
    return TrialStats(tuple(outcomes), len(sites), walk_seed), landing
