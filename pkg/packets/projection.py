"""Nearest-point projection of a state onto an embedded packet manifold.

The projection maximizes |<member(theta), psi>|^2. Without a warm start a coarse
scan over grid-aligned members picks the starting point; a trust-region Newton
ascent (scipy ``trust-exact``) then refines it in grid units.
"""

import logging
from typing import NamedTuple

import numpy as np
from scipy import optimize

from core.exceptions import DimensionError, ParameterError, ProjectionError
from hilbert.states import StateVector, as_array, fs_distance, normalize
from packets.embedding import (
    ALIASING_SIGMAS,
    gaussian_axis,
    gaussian_axis_derivatives,
    manifold_member,
    momentum_axis,
    momentum_axis_derivative,
)
from packets.grid import SUPPORT_MARGIN_SIGMAS, ManifoldKind, ManifoldSpec

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 500
GRADIENT_TOLERANCE = 1e-10
ACCEPTED_GRADIENT = 1e-8
HESSIAN_STEP = 1e-4
STALL_STEP = 1e-6
SCAN_BUDGET = 2_000_000
TIE_TOLERANCE = 1e-9


class Projection(NamedTuple):
    params: np.ndarray
    distance: float


class FactorProjection(NamedTuple):
    particle: StateVector
    center: float
    fidelity: float


def project_to_manifold(psi, spec: ManifoldSpec, warm_start=None) -> Projection:
    """Closest member of ``spec`` to ``psi`` and the Fubini-Study distance to it."""
    values = as_array(psi)
    if values.size != spec.dimension:
        raise DimensionError(f"state has length {values.size}, manifold space has {spec.dimension}")
    objective = _Objective(spec, values)

    if warm_start is None:
        start = _scan(spec, objective.tensor)
    else:
        start = np.asarray(warm_start, dtype=float).reshape(-1)
        if start.size != spec.parameter_count:
            raise ParameterError(f"warm start has {start.size} parameters, expected {spec.parameter_count}")

    result = optimize.minimize(
        objective.value_and_gradient,
        start / objective.scale,
        jac=True,
        hess=objective.hessian,
        method="trust-exact",
        options={"gtol": GRADIENT_TOLERANCE, "maxiter": MAX_ITERATIONS},
    )
    params = result.x * objective.scale
    distance = fs_distance(values, manifold_member(spec, params))
    gradient = float(np.linalg.norm(result.jac))
    if not (result.success or gradient <= ACCEPTED_GRADIENT or _stalled(objective, result.x, result.jac)):
        raise ProjectionError(
            f"projection did not converge after {result.nit} iterations (|grad| = {gradient:.2e}): {result.message}",
            best_params=params,
            best_distance=distance,
        )
    logger.debug(f"Projected onto {spec.kind} manifold in {result.nit} iterations, distance {distance:.3e}")
    return Projection(params=params, distance=distance)


def project_factor(psi, spec: ManifoldSpec, particle_dimension: int, warm_center: float | None = None) -> FactorProjection:
    """Best product approximation chi (x) omega(a) of a joint state, device factor second.

    Maximizes ||(1 (x) <omega(a)|) psi||^2 over the device center a (1-D device grid).
    """
    if spec.kind is not ManifoldKind.POSITION or spec.factors != 1 or spec.grid.dims != 1:
        raise ParameterError("factor projection supports a one-factor 1-D position manifold")
    values = as_array(psi)
    if values.size != particle_dimension * spec.dimension:
        raise DimensionError(
            f"joint state has length {values.size}, expected {particle_dimension} x {spec.dimension}"
        )
    joint = values.reshape(particle_dimension, spec.dimension)
    grid, sigma = spec.grid, spec.sigma

    def weight(center: float) -> float:
        reduced = joint @ np.conj(gaussian_axis(grid, center, sigma))
        return float(np.vdot(reduced, reduced).real)

    if warm_center is None:
        candidates = np.array([gaussian_axis(grid, c, sigma) for c in grid.nodes])
        weights = np.sum(np.abs(joint @ np.conj(candidates).T) ** 2, axis=0)
        warm_center = float(grid.nodes[_first_best(weights)])

    result = optimize.minimize_scalar(
        lambda center: -weight(center),
        bounds=(warm_center - grid.spacing, warm_center + grid.spacing),
        method="bounded",
        options={"xatol": 1e-10 * grid.spacing, "maxiter": MAX_ITERATIONS},
    )
    center = float(result.x)
    reduced = joint @ np.conj(gaussian_axis(grid, center, sigma))
    particle = normalize(reduced)
    return FactorProjection(particle=particle, center=center, fidelity=-float(result.fun))


# ── Internals ────────────────────────────────────────────────


def _contract(tensor: np.ndarray, vectors: list[np.ndarray]) -> complex:
    for vector in vectors:
        tensor = np.tensordot(np.conj(vector), tensor, axes=(0, 0))
    return complex(tensor)


def _stalled(objective: "_Objective", scaled: np.ndarray, gradient: np.ndarray) -> bool:
    """True at a local maximum of the overlap whose remaining Newton step is below ``STALL_STEP`` grid units.

    Near |overlap| = 1 the gain of such a step is below double precision, so
    trust-exact stops without reporting success.
    """
    hessian = objective.hessian(scaled)
    try:
        factor = np.linalg.cholesky(hessian)
    except np.linalg.LinAlgError:
        return False
    step = np.linalg.solve(factor.T, np.linalg.solve(factor, gradient))
    return bool(np.linalg.norm(step) < STALL_STEP)


def _first_best(values: np.ndarray) -> int:
    best = values.max()
    return int(np.flatnonzero(values >= best * (1.0 - TIE_TOLERANCE))[0])


class _Objective:
    """-|<member(theta), psi>|^2 in grid units (centers / dx, momenta / dk)."""

    def __init__(self, spec: ManifoldSpec, values: np.ndarray):
        self.spec = spec
        self.tensor = values.reshape((spec.grid.points_per_axis,) * spec.axis_count)
        self.layout = list(_layout(spec))
        grid = spec.grid
        self.scale = np.array(
            [grid.spacing if role == "center" else grid.momentum_spacing for _, role in self.layout]
        )

    def _axes(self, params: np.ndarray):
        spec, grid, sigma = self.spec, self.spec.grid, self.spec.sigma
        pairs = spec.split(params)
        if spec.kind is ManifoldKind.MOMENTUM:
            members = [momentum_axis(grid, b, sigma) for b, _ in pairs]
            derivatives = [{"momentum": momentum_axis_derivative(grid, b, sigma)} for b, _ in pairs]
        else:
            members = [gaussian_axis(grid, c, sigma, q) for c, q in pairs]
            derivatives = []
            for c, q in pairs:
                d_center, d_momentum = gaussian_axis_derivatives(grid, c, sigma, q)
                derivatives.append({"center": d_center, "momentum": d_momentum})
        return members, derivatives

    def value_and_gradient(self, scaled: np.ndarray):
        params = scaled * self.scale
        members, derivatives = self._axes(params)
        overlap = _contract(self.tensor, members)
        gradient = np.empty(len(self.layout))
        for index, (axis, role) in enumerate(self.layout):
            replaced = list(members)
            replaced[axis] = derivatives[axis][role]
            d_overlap = _contract(self.tensor, replaced)
            gradient[index] = -2.0 * (np.conj(overlap) * d_overlap).real * self.scale[index]
        return -abs(overlap) ** 2, gradient

    def hessian(self, scaled: np.ndarray) -> np.ndarray:
        size = scaled.size
        hessian = np.empty((size, size))
        for j in range(size):
            shift = np.zeros(size)
            shift[j] = HESSIAN_STEP
            _, plus = self.value_and_gradient(scaled + shift)
            _, minus = self.value_and_gradient(scaled - shift)
            hessian[:, j] = (plus - minus) / (2.0 * HESSIAN_STEP)
        return 0.5 * (hessian + hessian.T)


def _layout(spec: ManifoldSpec):
    """(axis, role) for each parameter, in parameter-vector order."""
    dims = spec.grid.dims
    for factor in range(spec.factors):
        axes = [factor * dims + i for i in range(dims)]
        if spec.kind is ManifoldKind.MOMENTUM:
            yield from ((axis, "momentum") for axis in axes)
            continue
        yield from ((axis, "center") for axis in axes)
        if spec.kind is ManifoldKind.PHASE_SPACE:
            yield from ((axis, "momentum") for axis in axes)


def _candidates(spec: ManifoldSpec) -> list[tuple[float, float]]:
    """Per-axis scan candidates, sorted lexicographically by (center, momentum)."""
    grid, sigma = spec.grid, spec.sigma
    momenta = np.sort(grid.momenta)
    if spec.kind is ManifoldKind.POSITION:
        return [(float(c), 0.0) for c in grid.nodes]
    if spec.kind is ManifoldKind.MOMENTUM:
        inside = momenta[np.abs(momenta) + SUPPORT_MARGIN_SIGMAS * sigma <= grid.band_limit]
        return [(float(b), 0.0) for b in (inside if inside.size else momenta)]
    guard = grid.band_limit - ALIASING_SIGMAS / sigma
    allowed = momenta[np.abs(momenta) < guard]
    return [(float(c), float(q)) for c in grid.nodes for q in allowed]


def _candidate_matrix(spec: ManifoldSpec, candidates) -> np.ndarray:
    grid, sigma = spec.grid, spec.sigma
    if spec.kind is ManifoldKind.MOMENTUM:
        return np.array([momentum_axis(grid, b, sigma) for b, _ in candidates])
    return np.array([gaussian_axis(grid, c, sigma, q) for c, q in candidates])


def _scan(spec: ManifoldSpec, tensor: np.ndarray) -> np.ndarray:
    candidates = _candidates(spec)
    stride = 1
    while (len(candidates[::stride])) ** spec.axis_count > SCAN_BUDGET:
        stride *= 2
    candidates = candidates[::stride]
    matrix = _candidate_matrix(spec, candidates)

    overlaps = tensor
    for _ in range(spec.axis_count):
        overlaps = np.tensordot(overlaps, np.conj(matrix).T, axes=(0, 0))
    flat = np.abs(overlaps.reshape(-1)) ** 2
    best = np.unravel_index(_first_best(flat), overlaps.shape)
    pairs = [candidates[i] for i in best]
    logger.debug(f"Scan over {flat.size} members picked {pairs}")
    return spec.join(pairs)


def scan_distances(psi, spec: ManifoldSpec) -> np.ndarray:
    """Fubini-Study distance from ``psi`` to every grid-aligned scan member (for exhaustive checks)."""
    values = as_array(psi)
    tensor = values.reshape((spec.grid.points_per_axis,) * spec.axis_count)
    matrix = _candidate_matrix(spec, _candidates(spec))
    matrix = matrix / np.linalg.norm(matrix, axis=1, keepdims=True)
    overlaps = tensor
    for _ in range(spec.axis_count):
        overlaps = np.tensordot(overlaps, np.conj(matrix).T, axes=(0, 0))
    return np.arccos(np.clip(np.abs(overlaps), 0.0, 1.0))
