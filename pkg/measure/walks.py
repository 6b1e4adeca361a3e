"""Measurement as a random walk: detectors, trials and hitting statistics.

Walkers of one batch advance in lockstep. Each walker owns the sampler derived
from (master seed, trial index), so a trial's outcome never depends on how
trials are batched or threaded.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from django.conf import settings
from scipy import stats

from core.exceptions import DimensionError, GridSupportError, ParameterError, warn
from dynamics.propagators import StepConfig, _exact_steps, advance, constrained_step, random_step
from gue.sampler import GueSampler, derive_sampler
from hilbert.states import Ray, StateVector, as_array, fs_distance, fs_distances
from packets.embedding import manifold_member
from packets.grid import SUPPORT_MARGIN_SIGMAS, ManifoldKind, ManifoldSpec

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.15
MIN_SEPARATION = 5.0
BATCH_SIZE = 256
BUFFER_STEPS = 64
BUFFER_BUDGET = 4_000_000
WILSON_CONFIDENCE = 0.95


# ── Detectors ────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class DetectorSet:
    """Absorbing epsilon-balls (Fubini-Study radius) around mutually distinguishable targets."""

    targets: tuple[Ray, ...]
    epsilon: float = DEFAULT_EPSILON
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        targets = tuple(Ray.of(target) for target in self.targets)
        if not targets:
            raise ParameterError("detector set is empty")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        dimension = targets[0].dimension
        if any(target.dimension != dimension for target in targets):
            raise DimensionError("detector targets live in spaces of different dimension")
        for i, first in enumerate(targets):
            for j in range(i + 1, len(targets)):
                distance = fs_distance(first, targets[j])
                if distance < MIN_SEPARATION * self.epsilon:
                    raise ParameterError(
                        f"targets {i} and {j} are {distance:.4f} rad apart, need at least "
                        f"{MIN_SEPARATION} * epsilon = {MIN_SEPARATION * self.epsilon:.4f}"
                    )
        matrix = np.array([target.vector for target in targets])
        matrix.setflags(write=False)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def full_basis(cls, dimension: int, epsilon: float = DEFAULT_EPSILON) -> "DetectorSet":
        return cls(tuple(StateVector.basis(dimension, i) for i in range(dimension)), epsilon)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.targets)

    def distances(self, states: np.ndarray) -> np.ndarray:
        """Distances of each row of ``states`` to every target, shape (rows, targets)."""
        # einsum, not BLAS: per-row results must not depend on the batch size
        overlaps = np.abs(np.einsum("wj,tj->wt", np.atleast_2d(states), self.matrix.conj()))
        return np.arccos(np.clip(overlaps, 0.0, 1.0))


class WalkOutcome(NamedTuple):
    """First-hit target index (None when censored), steps taken and final distance."""

    target: int | None
    steps: int
    final_distance: float

    @property
    def censored(self) -> bool:
        return self.target is None

    @property
    def label(self) -> str:
        return "censored" if self.target is None else str(self.target)


class BornWeights(NamedTuple):
    weights: np.ndarray
    raw_total: float
    renormalized: bool


def born_weights(psi0, detectors: DetectorSet) -> BornWeights:
    """|<target_j, psi0>|^2, renormalized over the detector set when the raw weights do not sum to 1."""
    if len(detectors) == 0:
        raise ParameterError("detector set is empty")
    ray = Ray.of(psi0)
    if ray.dimension != detectors.dimension:
        raise DimensionError(f"state has length {ray.dimension}, detectors have {detectors.dimension}")
    raw = np.abs(detectors.matrix.conj() @ ray.vector) ** 2
    total = float(raw.sum())
    renormalized = abs(total - 1.0) > 1e-10
    if renormalized:
        warn(f"detector set covers {total:.6f} of the Born weight; weights renormalized")
        raw = raw / total
    return BornWeights(weights=raw, raw_total=total, renormalized=renormalized)


def two_level_hitting_probability(d0: float, epsilon: float) -> float:
    """Probability that the N = 2 walk started at distance ``d0`` from e_1 is absorbed at e_1 first.

    On the Bloch sphere the walk is Brownian motion; its absorption probability
    between two polar caps of Fubini-Study radius epsilon is the harmonic
    function 1/2 + ln tan d0 / (2 ln tan epsilon).
    """
    if not 0 < epsilon < np.pi / 4:
        raise ParameterError(f"epsilon must lie in (0, pi/4), got {epsilon}")
    if d0 <= epsilon:
        return 1.0
    if d0 >= np.pi / 2 - epsilon:
        return 0.0
    return float(0.5 + np.log(np.tan(d0)) / (2.0 * np.log(np.tan(epsilon))))


# ── Measurement subspaces ────────────────────────────────────


@dataclass(frozen=True, eq=False)
class MeasurementSubspace:
    """Orthonormal frame of the span of ``vectors``; walks run in its coordinates."""

    vectors: np.ndarray
    basis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vectors = np.atleast_2d(np.asarray(self.vectors, dtype=np.complex128))
        if vectors.shape[0] < 2:
            raise DimensionError("a measurement subspace needs at least 2 spanning vectors")
        basis, upper = np.linalg.qr(vectors.T)
        if np.min(np.abs(np.diag(upper))) < 1e-10:
            raise DimensionError("spanning vectors are linearly dependent")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    def coordinates(self, psi) -> tuple[StateVector, float]:
        """Normalized coordinates of ``psi`` in the frame and the weight discarded outside it."""
        values = as_array(Ray.of(psi))
        inside = self.basis.conj().T @ values
        kept = float(np.vdot(inside, inside).real)
        return StateVector(inside / np.sqrt(kept)), max(0.0, 1.0 - kept)

    def lift(self, coordinates) -> StateVector:
        return StateVector(self.basis @ as_array(coordinates))

    def detectors(self, targets, epsilon: float = DEFAULT_EPSILON) -> DetectorSet:
        return DetectorSet(tuple(self.coordinates(target)[0] for target in targets), epsilon)


# ── Trial statistics ─────────────────────────────────────────


@dataclass(frozen=True)
class TrialStats:
    """Aggregated outcomes of a run; ``outcomes`` is ordered by trial index."""

    outcomes: tuple[WalkOutcome, ...]
    target_count: int
    master_seed: int

    @property
    def total(self) -> int:
        return len(self.outcomes)

    @property
    def counts(self) -> np.ndarray:
        counts = np.zeros(self.target_count, dtype=int)
        for outcome in self.outcomes:
            if outcome.target is not None:
                counts[outcome.target] += 1
        return counts

    @property
    def censored(self) -> int:
        return sum(1 for outcome in self.outcomes if outcome.censored)

    @property
    def frequencies(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros(self.target_count)
        return self.counts / self.total

    @property
    def hit_conditioned_frequencies(self) -> np.ndarray:
        hits = self.total - self.censored
        return self.counts / hits if hits else np.zeros(self.target_count)

    def wilson_intervals(self, confidence: float = WILSON_CONFIDENCE) -> list[tuple[float, float]]:
        intervals = []
        for count in self.counts:
            if self.total == 0:
                intervals.append((0.0, 1.0))
                continue
            interval = stats.binomtest(int(count), self.total).proportion_ci(confidence, method="wilson")
            intervals.append((float(interval.low), float(interval.high)))
        return intervals

    def mean_steps_to_hit(self) -> float:
        steps = [outcome.steps for outcome in self.outcomes if not outcome.censored]
        return float(np.mean(steps)) if steps else float("nan")

    def summary(self) -> dict:
        return {
            "total": self.total,
            "master_seed": self.master_seed,
            "counts": self.counts.tolist(),
            "censored": self.censored,
            "frequencies": self.frequencies.tolist(),
            "hit_conditioned_frequencies": self.hit_conditioned_frequencies.tolist(),
            "wilson_95": [list(interval) for interval in self.wilson_intervals()],
            "mean_steps_to_hit": self.mean_steps_to_hit(),
        }


# ── Walk engine ──────────────────────────────────────────────


def _walk_batch(initial: np.ndarray, detectors: DetectorSet, cfg: StepConfig, samplers, max_steps: int):
    walkers, dimension = len(samplers), initial.size
    states = np.tile(initial, (walkers, 1))
    targets: list[int | None] = [None] * walkers
    steps = np.zeros(walkers, dtype=int)
    final = np.empty(walkers)

    distances = detectors.distances(states)
    nearest = distances.argmin(axis=1)
    active = np.ones(walkers, dtype=bool)
    for w in np.flatnonzero(distances[np.arange(walkers), nearest] <= detectors.epsilon):
        targets[w], final[w], active[w] = int(nearest[w]), distances[w, nearest[w]], False

    buffer_length = max(1, min(BUFFER_STEPS, BUFFER_BUDGET // max(1, walkers * dimension**2)))
    buffers = np.empty((walkers, buffer_length, dimension, dimension), dtype=np.complex128)
    for step in range(1, max_steps + 1):
        live = np.flatnonzero(active)
        if live.size == 0:
            break
        slot = (step - 1) % buffer_length
        if slot == 0:
            for w in live:
                buffers[w] = samplers[w].draw_many(buffer_length)
        states[live] = advance(states[live], [], cfg, hamiltonians=buffers[live, slot])
        distances = detectors.distances(states[live])
        nearest = distances.argmin(axis=1)
        closest = distances[np.arange(live.size), nearest]
        for k in np.flatnonzero(closest <= detectors.epsilon):
            w = live[k]
            targets[w], steps[w], final[w], active[w] = int(nearest[k]), step, closest[k], False

    for w in np.flatnonzero(active):
        steps[w] = max_steps
        final[w] = detectors.distances(states[w]).min()
    return [WalkOutcome(targets[w], int(steps[w]), float(final[w])) for w in range(walkers)], states


def _check_start(psi0, detectors: DetectorSet, cfg: StepConfig) -> np.ndarray:
    initial = as_array(Ray.of(psi0))
    if initial.size != detectors.dimension:
        raise DimensionError(f"state has length {initial.size}, detectors have {detectors.dimension}")
    cfg.check_step_angle(initial.size)
    return initial


def run_walk(psi0, detectors: DetectorSet, cfg: StepConfig, sampler: GueSampler, max_steps: int | None = None) -> WalkOutcome:
    """Walk until the first detector hit or ``max_steps`` (censored)."""
    max_steps = settings.LAB_CENSOR_STEPS if max_steps is None else max_steps
    initial = _check_start(psi0, detectors, cfg)
    outcomes, _ = _walk_batch(initial, detectors, cfg, [sampler], max_steps)
    return outcomes[0]


def walk_final_states(psi0, detectors: DetectorSet, cfg: StepConfig, master_seed: int, trials: range, max_steps: int):
    """Outcomes and final states of the given trial indices (for post-hit analysis)."""
    initial = _check_start(psi0, detectors, cfg)
    samplers = [derive_sampler(master_seed, t, initial.size, cfg.gue_scale) for t in trials]
    return _walk_batch(initial, detectors, cfg, samplers, max_steps)


def resolve_threads(threads: int) -> int:
    return threads if threads > 0 else (os.cpu_count() or 1)


def run_trials(
    n: int,
    psi0,
    detectors: DetectorSet,
    cfg: StepConfig,
    master_seed: int,
    max_steps: int | None = None,
    threads: int | None = None,
    batch_size: int = BATCH_SIZE,
) -> TrialStats:
    """Execute ``n`` independent walks with per-trial derived samplers."""
    if n < 0:
        raise ParameterError(f"trial count must be non-negative, got {n}")
    max_steps = settings.LAB_CENSOR_STEPS if max_steps is None else max_steps
    threads = resolve_threads(settings.LAB_THREADS if threads is None else threads)
    initial = _check_start(psi0, detectors, cfg)
    chunks = [range(start, min(n, start + batch_size)) for start in range(0, n, batch_size)]

    def run_chunk(chunk: range):
        samplers = [derive_sampler(master_seed, t, initial.size, cfg.gue_scale) for t in chunk]
        outcomes, _ = _walk_batch(initial, detectors, cfg, samplers, max_steps)
        return outcomes

    logger.info(f"Running {n} trials in {len(chunks)} batches on {threads} threads (seed {master_seed})")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(run_chunk, chunks))
    outcomes = tuple(outcome for chunk in results for outcome in chunk)
    trial_stats = TrialStats(outcomes=outcomes, target_count=len(detectors), master_seed=master_seed)
    if trial_stats.censored:
        logger.warning(f"{trial_stats.censored} of {n} trials censored at {max_steps} steps")
    return trial_stats


# ── Constrained classical walk ───────────────────────────────


def _check_position_spec(spec: ManifoldSpec):
    if spec.kind is not ManifoldKind.POSITION:
        raise ParameterError(f"constrained position walks need a position manifold, got {spec.kind}")


def _check_support(spec: ManifoldSpec, params: np.ndarray):
    if not spec.grid.contains(params, SUPPORT_MARGIN_SIGMAS * spec.sigma):
        raise GridSupportError(f"walker at {params.tolist()} left the grid support margin")


def constrained_position_walk(start, spec: ManifoldSpec, cfg: StepConfig, steps: int, sampler: GueSampler) -> np.ndarray:
    """Random steps on the full grid space, each projected back onto the position manifold.

    Returns the final manifold parameters, the walker's classical position.
    """
    _check_position_spec(spec)
    params = np.asarray(start, dtype=float).reshape(-1)
    _check_support(spec, params)
    state = manifold_member(spec, params)
    for _ in range(steps):
        state, params = constrained_step(state, lambda psi: random_step(psi, sampler, cfg), spec, params)
        _check_support(spec, params)
    return params


def constrained_position_walks(
    start, spec: ManifoldSpec, cfg: StepConfig, steps: int, walkers: int, master_seed: int, checkpoints=()
) -> dict[int, np.ndarray]:
    """End positions of ``walkers`` independent constrained walks.

    Returns a mapping from step count to the (walkers, parameters) array of
    positions at that step, for every checkpoint plus ``steps`` itself.
    """
    _check_position_spec(spec)
    start = np.asarray(start, dtype=float).reshape(-1)
    _check_support(spec, start)
    marks = sorted({int(c) for c in checkpoints if 0 <= c <= steps} | {steps})
    member = as_array(manifold_member(spec, start))
    samplers = [derive_sampler(master_seed, w, spec.dimension, cfg.gue_scale) for w in range(walkers)]
    states = np.tile(member, (walkers, 1))
    params = np.tile(start, (walkers, 1))
    recorded = {0: params.copy()} if 0 in marks else {}
    for step in range(1, steps + 1):
        stepped = advance(states, samplers, cfg)
        for w in range(walkers):
            state, params[w] = constrained_step(stepped[w], lambda psi: psi, spec, params[w])
            states[w] = as_array(state)
            _check_support(spec, params[w])
        if step in marks:
            recorded[step] = params.copy()
    logger.info(f"Constrained walk: {walkers} walkers, {steps} steps")
    return recorded


def exact_step_angles(psi, sampler: GueSampler, cfg: StepConfig, draws: int) -> np.ndarray:
    """Fubini-Study angles of ``draws`` independent steps from ``psi`` (drift ignored)."""
    base = as_array(Ray.of(psi))
    hamiltonians = sampler.draw_many(draws)
    stepped = _exact_steps(np.tile(base, (draws, 1)), hamiltonians, cfg.dt / cfg.hbar)
    return fs_distances(stepped, base)
