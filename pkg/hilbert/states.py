"""Finite-dimensional Hilbert space and projective space primitives.

States are stored as immutable complex128 arrays. A ``Ray`` is a normalized
representative; every Ray operation ignores the global phase of that
representative.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from core.exceptions import DegenerateStateError, DimensionError, ParameterError

NORM_TOLERANCE = 1e-12
SINGULAR_VALUE_FLOOR = 1e-14


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=np.complex128).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over a fixed basis of length N >= 2."""

    amplitudes: np.ndarray

    def __post_init__(self):
        array = _frozen(self.amplitudes)
        if array.size < 2:
            raise DimensionError(f"a state needs at least 2 amplitudes, got {array.size}")
        if not np.all(np.isfinite(array)):
            raise ParameterError("state amplitudes must be finite")
        object.__setattr__(self, "amplitudes", array)

    @classmethod
    def basis(cls, dimension: int, index: int) -> "StateVector":
        """The computational basis vector e_index (0-based)."""
        values = np.zeros(dimension, dtype=np.complex128)
        values[index] = 1.0
        return cls(values)

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tolerance: float = NORM_TOLERANCE) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tolerance

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __len__(self):
        return self.dimension

    def __repr__(self):
        return f"StateVector(N={self.dimension})"


@dataclass(frozen=True, eq=False)
class Ray:
    """A point of projective space, held through a normalized representative."""

    representative: StateVector

    def __post_init__(self):
        vector = self.representative
        if not isinstance(vector, StateVector):
            vector = StateVector(vector)
        if not vector.is_normalized():
            vector = normalize(vector)
        object.__setattr__(self, "representative", vector)

    @classmethod
    def of(cls, state) -> "Ray":
        """Build a Ray from any state-like value, normalizing it."""
        if isinstance(state, Ray):
            return state
        return cls(normalize(as_state(state)))

    @property
    def vector(self) -> np.ndarray:
        return self.representative.amplitudes

    @property
    def dimension(self) -> int:
        return self.representative.dimension

    def __repr__(self):
        return f"Ray(N={self.dimension})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A direction in the tangent space of projective space at ``base``."""

    base: Ray
    direction: StateVector = field(repr=False)

    def __post_init__(self):
        if self.direction.dimension != self.base.dimension:
            raise DimensionError(
                f"tangent direction has length {self.direction.dimension}, base has {self.base.dimension}"
            )

    def norm(self) -> float:
        return self.direction.norm()

    def scaled(self, factor: float) -> "TangentVector":
        return TangentVector(self.base, StateVector(self.direction.amplitudes * factor))


def as_state(value) -> StateVector:
    if isinstance(value, StateVector):
        return value
    if isinstance(value, Ray):
        return value.representative
    return StateVector(value)


def as_array(value) -> np.ndarray:
    """Raw amplitude array of a StateVector, Ray or array-like."""
    if isinstance(value, StateVector):
        return value.amplitudes
    if isinstance(value, Ray):
        return value.vector
    return np.asarray(value, dtype=np.complex128).reshape(-1)


def _check_dimensions(left: np.ndarray, right: np.ndarray):
    if left.shape[-1] != right.shape[-1]:
        raise DimensionError(f"dimension mismatch: {left.shape[-1]} vs {right.shape[-1]}")


# ── Operations ───────────────────────────────────────────────


def inner(psi, phi) -> complex:
    """Hermitian inner product sum(conj(psi_k) * phi_k)."""
    left, right = as_array(psi), as_array(phi)
    _check_dimensions(left, right)
    return complex(np.vdot(left, right))


def normalize(psi) -> StateVector:
    """Unit-norm representative of the same ray."""
    values = as_array(psi)
    norm = np.linalg.norm(values)
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateStateError("cannot normalize the zero vector")
    return StateVector(values / norm)


def fs_distance(a, b) -> float:
    """Fubini-Study distance arccos|<a, b>| between two rays, in [0, pi/2]."""
    left, right = as_array(Ray.of(a)), as_array(Ray.of(b))
    _check_dimensions(left, right)
    overlap = abs(np.vdot(left, right))
    return float(np.arccos(np.clip(overlap, 0.0, 1.0)))


def fs_distances(states: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Row-wise Fubini-Study distances of normalized rows of ``states`` to ``target``."""
    _check_dimensions(states, target)
    overlaps = np.abs(states @ np.conj(target))
    return np.arccos(np.clip(overlaps, 0.0, 1.0))


def tangent_project(base, v) -> TangentVector:
    """Remove the component of ``v`` along ``base``: v - base <base, v>."""
    ray = Ray.of(base)
    values = as_array(v)
    _check_dimensions(ray.vector, values)
    direction = values - ray.vector * np.vdot(ray.vector, values)
    return TangentVector(ray, StateVector(direction))


def schmidt_coefficients(psi, dim_a: int, dim_b: int) -> np.ndarray:
    """Squared singular values of psi reshaped as a dim_a x dim_b matrix."""
    values = as_array(psi)
    if dim_a < 1 or dim_b < 1 or dim_a * dim_b != values.size:
        raise DimensionError(f"cannot factor a length-{values.size} state as {dim_a} x {dim_b}")
    singular = np.linalg.svd(values.reshape(dim_a, dim_b), compute_uv=False)
    singular = singular[singular > SINGULAR_VALUE_FLOOR]
    return singular**2


def schmidt_entropy(psi, dim_a: int, dim_b: int) -> float:
    """Entanglement entropy in nats, with 0 ln 0 = 0; zero exactly for product states."""
    weights = schmidt_coefficients(psi, dim_a, dim_b)
    if weights.size == 0:
        raise DegenerateStateError("zero state has no Schmidt decomposition")
    if abs(weights.sum() - 1.0) > 1e-8:
        raise ParameterError(f"schmidt_entropy expects a normalized state, norm^2 = {weights.sum():.3e}")
    entropy = -float(np.sum(xlogy(weights, weights)))
    return max(entropy, 0.0)


def random_state(rng: np.random.Generator, dimension: int) -> StateVector:
    """Haar-random normalized state."""
    values = rng.standard_normal(dimension) + 1j * rng.standard_normal(dimension)
    return normalize(values)
