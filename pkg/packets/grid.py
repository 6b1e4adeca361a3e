"""Spatial grids, packet parameters and manifold descriptions."""

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import ParameterError, warn

logger = logging.getLogger(__name__)

MIN_POINTS_PER_AXIS = 16
SUPPORT_MARGIN_SIGMAS = 5.0
MAX_FACTORS = 2


@dataclass(frozen=True)
class Grid:
    """A periodic grid of ``points_per_axis`` nodes per axis on [axis_min, axis_max).

    Amplitude convention: the amplitude at node x_k is psi(x_k) * dx**(dims/2),
    so that sum |c_k|^2 approximates the integral of |psi|^2.
    """

    points_per_axis: int
    axis_min: float
    axis_max: float
    dims: int = 1

    def __post_init__(self):
        if self.points_per_axis < MIN_POINTS_PER_AXIS:
            raise ParameterError(f"grid needs at least {MIN_POINTS_PER_AXIS} points per axis, got {self.points_per_axis}")
        if not self.axis_max > self.axis_min:
            raise ParameterError(f"axis_max ({self.axis_max}) must exceed axis_min ({self.axis_min})")
        if self.dims not in (1, 2, 3):
            raise ParameterError(f"dims must be 1, 2 or 3, got {self.dims}")

    @property
    def spacing(self) -> float:
        return (self.axis_max - self.axis_min) / self.points_per_axis

    @property
    def extent(self) -> float:
        return self.axis_max - self.axis_min

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dims

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dims

    @property
    def nodes(self) -> np.ndarray:
        """Node coordinates along one axis."""
        return self.axis_min + self.spacing * np.arange(self.points_per_axis)

    @property
    def momenta(self) -> np.ndarray:
        """Angular wavenumbers of the discrete Fourier modes along one axis, FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    @property
    def momentum_spacing(self) -> float:
        return 2.0 * np.pi / self.extent

    @property
    def band_limit(self) -> float:
        return np.pi / self.spacing

    def coordinates(self) -> list[np.ndarray]:
        """Per-axis coordinate arrays broadcast to the full grid shape (ij indexing)."""
        return np.meshgrid(*([self.nodes] * self.dims), indexing="ij")

    def contains(self, point, margin: float = 0.0) -> bool:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        return bool(np.all(point >= self.axis_min + margin) and np.all(point <= self.axis_max - margin))

    def echo(self) -> dict:
        return {
            "points_per_axis": self.points_per_axis,
            "axis_min": self.axis_min,
            "axis_max": self.axis_max,
            "dims": self.dims,
        }


@dataclass(frozen=True)
class GaussianParams:
    """Center ``a``, momentum ``p`` (hbar = 1) and width ``sigma`` of a packet."""

    a: np.ndarray
    p: np.ndarray
    sigma: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        p = np.zeros_like(a) if self.p is None else np.atleast_1d(np.asarray(self.p, dtype=float))
        if a.shape != p.shape:
            raise ParameterError(f"center has {a.size} components, momentum has {p.size}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
            raise ParameterError("packet parameters must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "sigma", float(self.sigma))

    def check_support(self, grid: Grid) -> bool:
        """Warn when the packet sits closer than 5 sigma to a grid edge."""
        if self.a.size != grid.dims:
            raise ParameterError(f"center has {self.a.size} components, grid has {grid.dims} axes")
        inside = grid.contains(self.a, SUPPORT_MARGIN_SIGMAS * self.sigma)
        if not inside:
            warn(f"packet at {self.a.tolist()} with sigma={self.sigma} is within 5 sigma of the grid edge")
        return inside


class ManifoldKind(enum.StrEnum):
    POSITION = "position"
    PHASE_SPACE = "phase_space"
    MOMENTUM = "momentum"


@dataclass(frozen=True)
class ManifoldSpec:
    """An embedded manifold of packets: its kind, width, grid and number of factors."""

    kind: ManifoldKind
    sigma: float
    grid: Grid
    factors: int = 1
    parameter_names: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ManifoldKind(self.kind))
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not 1 <= self.factors <= MAX_FACTORS:
            raise ParameterError(f"manifolds with {self.factors} factors are not supported (max {MAX_FACTORS})")
        object.__setattr__(self, "parameter_names", tuple(self._names()))

    def _names(self):
        axes = range(self.grid.dims)
        for factor in range(self.factors):
            if self.kind is ManifoldKind.MOMENTUM:
                yield from (f"b{factor}_{i}" for i in axes)
            else:
                yield from (f"a{factor}_{i}" for i in axes)
                if self.kind is ManifoldKind.PHASE_SPACE:
                    yield from (f"p{factor}_{i}" for i in axes)

    @property
    def parameter_count(self) -> int:
        per_factor = 2 * self.grid.dims if self.kind is ManifoldKind.PHASE_SPACE else self.grid.dims
        return per_factor * self.factors

    @property
    def axis_count(self) -> int:
        return self.grid.dims * self.factors

    @property
    def dimension(self) -> int:
        """Length of state vectors living on this manifold's space."""
        return self.grid.size**self.factors

    def split(self, params) -> list[tuple[float, float]]:
        """Per-axis (center, momentum) pairs in axis order; momentum manifolds use (b, 0)."""
        params = np.asarray(params, dtype=float)
        if params.size != self.parameter_count:
            raise ParameterError(f"{self.kind} manifold takes {self.parameter_count} parameters, got {params.size}")
        dims = self.grid.dims
        pairs = []
        per_factor = params.reshape(self.factors, -1)
        for block in per_factor:
            if self.kind is ManifoldKind.PHASE_SPACE:
                pairs.extend(zip(block[:dims], block[dims:]))
            else:
                pairs.extend((value, 0.0) for value in block)
        return pairs

    def join(self, pairs) -> np.ndarray:
        """Inverse of ``split``."""
        dims = self.grid.dims
        params = []
        for factor in range(self.factors):
            block = pairs[factor * dims:(factor + 1) * dims]
            params.extend(center for center, _ in block)
            if self.kind is ManifoldKind.PHASE_SPACE:
                params.extend(momentum for _, momentum in block)
        return np.asarray(params, dtype=float)
