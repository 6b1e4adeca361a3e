"""Hitting statistics of the GUE walk against Born weights, swept over epsilon.

For N = 2 the exact absorption probability of the walk is also reported (the
harmonic-measure oracle). It differs from the Born weight except for equal
weights; both comparisons are flagged and neither is hidden.
"""

import logging

import numpy as np

from core.forms import RunConfig
from dynamics.propagators import default_step_config
from gue.sampler import derive_seed
from hilbert.states import StateVector, fs_distance
from measure.statistics import binomial_z_scores
from measure.walks import DetectorSet, born_weights, run_trials, two_level_hitting_probability
from scenarios.report import ScenarioReport, Series

logger = logging.getLogger(__name__)


def harmonic_weights(weights: np.ndarray, epsilon: float) -> np.ndarray | None:
    if weights.size != 2:
        return None
    d0 = fs_distance(np.sqrt(weights).astype(complex), StateVector.basis(2, 0))
    first = two_level_hitting_probability(d0, epsilon)
    return np.array([first, 1.0 - first])


def born_run(run: RunConfig) -> ScenarioReport:
    values = run.echo()
    report = ScenarioReport("born", values, run.seed)
    table = Series((
        "case", "dimension", "epsilon", "target", "born_weight", "harmonic_weight",
        "frequency", "hit_conditioned", "z_born", "z_harmonic",
    ))
    sweep = sorted(set(values["epsilons"]) | {values["epsilon"]})
    cases = []

    for case, weights in enumerate(values["weights"]):
        weights = np.asarray(weights)
        psi0 = StateVector(np.sqrt(weights).astype(complex))
        dimension = weights.size
        cfg = default_step_config(dimension, values["step_angle"])
        by_epsilon = {}
        for index, epsilon in enumerate(sweep):
            detectors = DetectorSet.full_basis(dimension, epsilon)
            expected = born_weights(psi0, detectors).weights
            trial_stats = run_trials(
                values["trials"], psi0, detectors, cfg, derive_seed(run.seed, case, index), values["max_steps"], run.threads
            )
            frequencies = trial_stats.frequencies
            z_born = binomial_z_scores(frequencies, expected, trial_stats.total)
            harmonic = harmonic_weights(weights, epsilon)
            z_harmonic = (
                binomial_z_scores(frequencies, harmonic, trial_stats.total) if harmonic is not None else None
            )
            for target in range(dimension):
                table.append(
                    case, dimension, epsilon, target, expected[target],
                    harmonic[target] if harmonic is not None else float("nan"),
                    frequencies[target], trial_stats.hit_conditioned_frequencies[target],
                    z_born[target], z_harmonic[target] if z_harmonic is not None else float("nan"),
                )

            label = f"case {case} eps {epsilon:g}"
            total = max(trial_stats.total, 1)
            report.check(f"{label} censored fraction", trial_stats.censored / total, "<=", "censored_limit")
            report.check(f"{label} Born max |z|", float(np.max(np.abs(z_born))), "<=", "z_limit")
            if z_harmonic is not None:
                report.check(f"{label} harmonic-measure max |z|", float(np.max(np.abs(z_harmonic))), "<=", "z_limit")
            if epsilon == values["epsilon"] and report.trials is None:
                report.trials = trial_stats
            by_epsilon[epsilon] = trial_stats
            logger.info(f"[born] {label}: frequencies {np.round(frequencies, 4).tolist()} vs Born {expected.tolist()}")

        report.check(f"case {case} epsilon stability max |z|", _stability(by_epsilon), "<=", "z_limit")
        cases.append({
            "weights": weights.tolist(),
            "by_epsilon": {f"{eps:g}": stats.summary() for eps, stats in by_epsilon.items()},
        })

    report.statistics["cases"] = cases
    report.series["frequencies"] = table
    return report


def _stability(by_epsilon: dict) -> float:
    """Largest two-sample z between frequencies of any two epsilon values."""
    runs = list(by_epsilon.values())
    worst = 0.0
    for i, first in enumerate(runs):
        for second in runs[i + 1:]:
            if not first.total or not second.total:
                continue
            pooled = (first.counts + second.counts) / (first.total + second.total)
            error = np.sqrt(np.clip(pooled * (1 - pooled), 1e-300, None) * (1 / first.total + 1 / second.total))
            worst = max(worst, float(np.max(np.abs(first.frequencies - second.frequencies) / error)))
    return worst
