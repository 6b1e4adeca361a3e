"""State propagation: GUE random steps, split-step grid evolution and constrained stepping.

A GUE step applies exp(-i H dt / hbar) for a fresh draw H, computed through a
Hermitian eigendecomposition. The root-mean-square Fubini-Study angle of one
step is gue_scale * dt * sqrt(N - 1) / hbar, so the product gue_scale * dt is
the single effective step size.
"""

import enum
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import null_space

from core.exceptions import DecompositionError, DimensionError, ParameterError, ResolutionError, warn
from gue.sampler import GueSampler
from hilbert.states import Ray, StateVector, TangentVector, as_array, tangent_project
from packets.embedding import manifold_member, sigma_tangent
from packets.grid import Grid, ManifoldSpec
from packets.projection import project_to_manifold

logger = logging.getLogger(__name__)

STEP_ANGLE_WARNING = 0.3
DEFAULT_STEP_ANGLE = 0.02
ALIASING_NODES = 3
ALIASING_WEIGHT = 1e-6


# ── Step configuration and drift ─────────────────────────────


class DriftRule:
    """A deterministic tangent vector added to every random step.

    Subclasses implement ``directions`` on raw row arrays so that batched
    walkers can share one rule; ``__call__`` gives the single-state view.
    """

    def directions(self, states: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, base) -> TangentVector:
        ray = Ray.of(base)
        direction = self.directions(ray.vector[np.newaxis, :])[0]
        return TangentVector(ray, StateVector(direction))


class RestoringDrift(DriftRule):
    """Pull toward the position manifold along the sigma-variation direction.

    ``anchors`` are the manifold members (e.g. plate-site packets) and
    ``tangents`` their unit sigma tangents, all in the walker's coordinates.
    For a state psi the rule picks the anchor of largest overlap and returns
    -magnitude * P_psi(h <h, psi>), which vanishes on the manifold.
    """

    def __init__(self, anchors: np.ndarray, tangents: np.ndarray, magnitude: float):
        anchors = np.atleast_2d(np.asarray(anchors, dtype=np.complex128))
        tangents = np.atleast_2d(np.asarray(tangents, dtype=np.complex128))
        if anchors.shape != tangents.shape:
            raise DimensionError(f"{anchors.shape[0]} anchors but {tangents.shape[0]} tangents")
        if magnitude < 0:
            raise ParameterError(f"drift magnitude must be non-negative, got {magnitude}")
        self.anchors = anchors
        self.tangents = tangents
        self.magnitude = float(magnitude)

    def directions(self, states: np.ndarray) -> np.ndarray:
        nearest = np.argmax(np.abs(states @ self.anchors.conj().T), axis=1)
        hooks = self.tangents[nearest]
        pulled = hooks * np.sum(hooks.conj() * states, axis=1, keepdims=True)
        along = np.sum(states.conj() * pulled, axis=1, keepdims=True)
        return -self.magnitude * (pulled - states * along)

    @classmethod
    def at_sites(cls, grid: Grid, centers: Sequence[float], sigma: float, magnitude: float, basis=None):
        """Rule built from position packets at ``centers``, optionally expressed in ``basis`` coordinates."""
        anchors, tangents = [], []
        for center in centers:
            tangent = sigma_tangent(grid, [center], sigma)
            anchors.append(tangent.base.vector)
            tangents.append(tangent.direction.amplitudes)
        anchors, tangents = np.array(anchors), np.array(tangents)
        if basis is not None:
            anchors, tangents = anchors @ basis.conj(), tangents @ basis.conj()
        return cls(anchors, tangents, magnitude)


@dataclass(frozen=True)
class StepConfig:
    """Time step, hbar, GUE scale and optional drift of a random step.

    ``dt = 0`` is accepted and makes every step the identity.
    """

    dt: float
    gue_scale: float
    hbar: float = 1.0
    drift: DriftRule | None = None
    exact: bool = True

    def __post_init__(self):
        if not self.dt >= 0:
            raise ParameterError(f"dt must be non-negative, got {self.dt}")
        if not self.gue_scale > 0:
            raise ParameterError(f"gue_scale must be positive, got {self.gue_scale}")
        if not self.hbar > 0:
            raise ParameterError(f"hbar must be positive, got {self.hbar}")

    def step_angle(self, dimension: int) -> float:
        return self.gue_scale * self.dt * np.sqrt(dimension - 1) / self.hbar

    def check_step_angle(self, dimension: int) -> float:
        angle = self.step_angle(dimension)
        if angle > STEP_ANGLE_WARNING:
            warn(f"effective step angle {angle:.3f} rad exceeds {STEP_ANGLE_WARNING}; steps are not small")
        return angle


def step_scale_for_angle(angle: float, dimension: int) -> float:
    """The gue_scale * dt product (hbar = 1) whose RMS Fubini-Study step angle is ``angle``."""
    if not angle > 0:
        raise ParameterError(f"step angle must be positive, got {angle}")
    if dimension < 2:
        raise ParameterError(f"dimension must be at least 2, got {dimension}")
    return angle / np.sqrt(dimension - 1)


def default_step_config(dimension: int, angle: float = DEFAULT_STEP_ANGLE, drift: DriftRule | None = None) -> StepConfig:
    return StepConfig(dt=1.0, gue_scale=step_scale_for_angle(angle, dimension), drift=drift)


# ── GUE steps ────────────────────────────────────────────────


def random_step(psi, sampler: GueSampler, cfg: StepConfig) -> StateVector:
    """One step exp(-i H dt / hbar) psi for a fresh GUE draw, plus drift, renormalized."""
    values = as_array(psi)
    if values.size != sampler.dimension:
        raise DimensionError(f"state has length {values.size}, sampler draws {sampler.dimension} x {sampler.dimension}")
    cfg.check_step_angle(values.size)
    stepped = advance(values[np.newaxis, :], [sampler], cfg)
    return StateVector(stepped[0])


def random_step_first_order(psi, sampler: GueSampler, cfg: StepConfig) -> StateVector:
    """Euler variant psi - i H psi dt / hbar, renormalized; for cross-checks only."""
    return random_step(psi, sampler, StepConfig(cfg.dt, cfg.gue_scale, cfg.hbar, cfg.drift, exact=False))


def advance(states: np.ndarray, samplers: Sequence[GueSampler], cfg: StepConfig, hamiltonians=None) -> np.ndarray:
    """Advance each row of ``states`` by one step, row ``i`` drawing from ``samplers[i]``.

    Pre-drawn ``hamiltonians`` (one per row) replace the sampler draws.
    """
    if cfg.dt == 0:
        return states.copy()
    if hamiltonians is None:
        hamiltonians = np.array([sampler.draw() for sampler in samplers])
    if cfg.exact:
        stepped = _exact_steps(states, hamiltonians, cfg.dt / cfg.hbar)
    else:
        stepped = states - 1j * (cfg.dt / cfg.hbar) * np.einsum("wij,wj->wi", hamiltonians, states)
    if cfg.drift is not None:
        stepped = stepped + cfg.dt * cfg.drift.directions(states)
    return stepped / np.linalg.norm(stepped, axis=1, keepdims=True)


def _exact_steps(states: np.ndarray, hamiltonians: np.ndarray, tau: float) -> np.ndarray:
    try:
        energies, vectors = np.linalg.eigh(hamiltonians)
    except np.linalg.LinAlgError as e:
        raise DecompositionError(f"Hermitian eigendecomposition failed: {e}") from e
    if not np.all(np.isfinite(energies)):
        raise DecompositionError("eigendecomposition returned non-finite eigenvalues")
    coefficients = np.einsum("wji,wj->wi", vectors.conj(), states)
    coefficients = coefficients * np.exp(-1j * energies * tau)
    return np.einsum("wij,wj->wi", vectors, coefficients)


# ── Grid Hamiltonians ────────────────────────────────────────


class PotentialKind(enum.StrEnum):
    FREE = "free"
    UNIFORM_FORCE = "uniform_force"
    HARMONIC = "harmonic"


@dataclass(frozen=True)
class Potential:
    """A one-axis potential with its classical force.

    ``strength`` is the force f for a uniform force (V = -f x) and the angular
    frequency omega for a harmonic well (V = m omega^2 x^2 / 2).
    """

    kind: PotentialKind
    strength: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))

    def energy(self, x, mass: float = 1.0):
        x = np.asarray(x, dtype=float)
        if self.kind is PotentialKind.UNIFORM_FORCE:
            return -self.strength * x
        if self.kind is PotentialKind.HARMONIC:
            return 0.5 * mass * self.strength**2 * x**2
        return np.zeros_like(x)

    def force(self, x, mass: float = 1.0):
        x = np.asarray(x, dtype=float)
        if self.kind is PotentialKind.UNIFORM_FORCE:
            return np.full_like(x, self.strength)
        if self.kind is PotentialKind.HARMONIC:
            return -mass * self.strength**2 * x
        return np.zeros_like(x)


@dataclass(frozen=True, eq=False)
class GridHamiltonian:
    """Kinetic plus potential energy on a grid; ``mass`` may be given per axis."""

    grid: Grid
    mass: float | tuple[float, ...]
    potential: np.ndarray

    def __post_init__(self):
        masses = np.broadcast_to(np.asarray(self.mass, dtype=float), (self.grid.dims,)).copy()
        if not np.all(masses > 0):
            raise ParameterError(f"masses must be positive, got {masses.tolist()}")
        potential = np.asarray(self.potential, dtype=float).reshape(-1)
        if potential.size != self.grid.size:
            raise DimensionError(f"potential has {potential.size} values, grid has {self.grid.size} nodes")
        if not np.all(np.isfinite(potential)):
            raise ParameterError("potential must be finite on every node")
        potential.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "potential", potential)
        object.__setattr__(self, "mass", masses)

    @classmethod
    def free(cls, grid: Grid, mass: float = 1.0) -> "GridHamiltonian":
        return cls(grid, mass, np.zeros(grid.size))

    @classmethod
    def with_potential(cls, grid: Grid, potential: Potential, mass: float = 1.0) -> "GridHamiltonian":
        if grid.dims != 1:
            raise ParameterError("named potentials are one-axis")
        return cls(grid, mass, potential.energy(grid.nodes, mass))

    def kinetic_phase(self, dt: float, hbar: float) -> np.ndarray:
        momenta = np.meshgrid(*([self.grid.momenta] * self.grid.dims), indexing="ij")
        frequency = sum(k**2 / (2.0 * m) for k, m in zip(momenta, self.mass)) * hbar
        return np.exp(-1j * frequency * dt)

    def potential_phase(self, dt: float, hbar: float) -> np.ndarray:
        return np.exp(-1j * self.potential.reshape(self.grid.shape) * dt / hbar)


def _edge_mask(grid: Grid) -> np.ndarray:
    n = grid.points_per_axis
    index = np.abs(np.fft.fftfreq(n) * n)
    per_axis = index >= n / 2 - ALIASING_NODES
    masks = np.meshgrid(*([per_axis] * grid.dims), indexing="ij")
    return np.logical_or.reduce(masks)


def evolve_grid(psi, hamiltonian: GridHamiltonian, dt: float, steps: int, hbar: float = 1.0) -> StateVector:
    """Strang split-step propagation: half potential, full kinetic in Fourier space, half potential."""
    grid = hamiltonian.grid
    values = as_array(psi)
    if values.size != grid.size:
        raise DimensionError(f"state has length {values.size}, grid has {grid.size} nodes")
    if steps < 0 or dt < 0:
        raise ParameterError(f"steps and dt must be non-negative, got steps={steps}, dt={dt}")
    if steps == 0 or dt == 0:
        return StateVector(values)

    half = hamiltonian.potential_phase(dt / 2.0, hbar)
    kinetic = hamiltonian.kinetic_phase(dt, hbar)
    edge = _edge_mask(grid)
    axes = tuple(range(grid.dims))
    field = values.reshape(grid.shape)
    for step in range(steps):
        field = field * half
        spectrum = np.fft.fftn(field, axes=axes, norm="ortho")
        edge_weight = float(np.sum(np.abs(spectrum[edge]) ** 2))
        if edge_weight > ALIASING_WEIGHT:
            raise ResolutionError(
                f"spectral weight {edge_weight:.2e} within {ALIASING_NODES} nodes of the band edge at step {step}"
            )
        field = np.fft.ifftn(spectrum * kinetic, axes=axes, norm="ortho")
        field = field * half
    return StateVector(field.reshape(-1))


def position_moments(psi, grid: Grid) -> tuple[float, float]:
    """Mean and variance of position along a 1-D grid."""
    weights = np.abs(as_array(psi)) ** 2
    weights = weights / weights.sum()
    mean = float(np.sum(weights * grid.nodes))
    return mean, float(np.sum(weights * (grid.nodes - mean) ** 2))


# ── Constrained stepping ─────────────────────────────────────


def constrained_step(psi, step: Callable[[StateVector], StateVector], spec: ManifoldSpec, warm):
    """Apply ``step`` then project back onto ``spec`` starting from ``warm``.

    Returns the projected member and its parameters.
    """
    stepped = step(psi if isinstance(psi, StateVector) else StateVector(psi))
    projection = project_to_manifold(stepped, spec, warm_start=warm)
    return manifold_member(spec, projection.params), projection.params


@dataclass(frozen=True)
class NewtonTrajectory:
    times: np.ndarray
    positions: np.ndarray
    momenta: np.ndarray


def newton_trajectory(a0: float, p0: float, mass: float, potential: Potential, times) -> NewtonTrajectory:
    """Reference solution of Newton's equations by an adaptive Runge-Kutta integrator."""
    times = np.asarray(times, dtype=float)

    def rhs(_, y):
        return [y[1] / mass, float(potential.force(y[0], mass))]

    solution = solve_ivp(
        rhs, (times[0], times[-1]), [a0, p0], method="RK45", t_eval=times, rtol=1e-10, atol=1e-12
    )
    if not solution.success:
        raise ParameterError(f"Newtonian reference integration failed: {solution.message}")
    return NewtonTrajectory(times=times, positions=solution.y[0], momenta=solution.y[1])


def tangent_step_covariance(psi, sampler: GueSampler, cfg: StepConfig, draws: int) -> np.ndarray:
    """Empirical covariance of tangent-projected step displacements at ``psi``.

    Displacements are expressed in an orthonormal basis of the tangent space,
    so an isotropic step distribution gives a multiple of the identity.
    """
    ray = Ray.of(psi)
    base = ray.vector
    complement = null_space(base[np.newaxis, :].conj())
    rows = []
    for _ in range(draws):
        stepped = as_array(random_step(ray, sampler, cfg))
        # fix the global phase so the displacement is tangent
        stepped = stepped * np.exp(-1j * np.angle(np.vdot(base, stepped)))
        rows.append(complement.conj().T @ as_array(tangent_project(ray, stepped).direction))
    samples = np.array(rows)
    return (samples.conj().T @ samples) / draws
