"""Gaussian packets on a grid and the embeddings of classical space into the space of states.

``make_position_packet`` realizes omega(a) = g_{a,sigma}; ``make_phase_packet``
realizes Omega(a, p); ``momentum_member`` is the Fourier image of a position
packet. Closed-form overlaps cover the centered-width case and the displaced
case.
"""

import logging

import numpy as np

from core.exceptions import GridSupportError, ParameterError, ResolutionError, warn
from hilbert.states import Ray, StateVector, TangentVector, normalize, tangent_project
from packets.grid import SUPPORT_MARGIN_SIGMAS, GaussianParams, Grid, ManifoldKind, ManifoldSpec

logger = logging.getLogger(__name__)

NORM_DEFICIT_TOLERANCE = 1e-6
ALIASING_SIGMAS = 1.5


# ── Per-axis building blocks ─────────────────────────────────


def gaussian_axis(grid: Grid, center: float, sigma: float, momentum: float = 0.0) -> np.ndarray:
    """Analytically normalized 1-D packet sampled on the grid nodes (amplitude convention applied)."""
    x = grid.nodes
    envelope = (2.0 * np.pi * sigma**2) ** -0.25 * np.exp(-((x - center) ** 2) / (4.0 * sigma**2))
    return envelope * np.exp(1j * momentum * x) * np.sqrt(grid.spacing)


def gaussian_axis_derivatives(grid: Grid, center: float, sigma: float, momentum: float = 0.0):
    """Derivatives of ``gaussian_axis`` with respect to center and momentum."""
    x = grid.nodes
    values = gaussian_axis(grid, center, sigma, momentum)
    return values * (x - center) / (2.0 * sigma**2), values * 1j * x


def momentum_axis(grid: Grid, b: float, sigma: float) -> np.ndarray:
    """1-D state whose discrete momentum amplitudes are a Gaussian of width sigma centered at b."""
    k = grid.momenta
    spectrum = (2.0 * np.pi * sigma**2) ** -0.25 * np.exp(-((k - b) ** 2) / (4.0 * sigma**2))
    spectrum = spectrum * np.sqrt(grid.momentum_spacing)
    return _from_momentum(grid, spectrum)


def momentum_axis_derivative(grid: Grid, b: float, sigma: float) -> np.ndarray:
    k = grid.momenta
    spectrum = (2.0 * np.pi * sigma**2) ** -0.25 * np.exp(-((k - b) ** 2) / (4.0 * sigma**2))
    spectrum = spectrum * np.sqrt(grid.momentum_spacing) * (k - b) / (2.0 * sigma**2)
    return _from_momentum(grid, spectrum)


def _from_momentum(grid: Grid, spectrum: np.ndarray) -> np.ndarray:
    # unitary inverse DFT, phases referenced to x = 0 so members are centered at the origin
    phased = spectrum * np.exp(1j * grid.momenta * grid.axis_min)
    return np.sqrt(grid.points_per_axis) * np.fft.ifft(phased)


def _outer(factors: list[np.ndarray]) -> np.ndarray:
    result = factors[0]
    for factor in factors[1:]:
        result = np.multiply.outer(result, factor)
    return result.reshape(-1)


def _finish(values: np.ndarray, what: str) -> StateVector:
    deficit = abs(1.0 - float(np.vdot(values, values).real))
    if deficit > NORM_DEFICIT_TOLERANCE:
        raise GridSupportError(f"{what} leaks off the grid (norm deficit {deficit:.2e})")
    return normalize(values)


# ── Embeddings ───────────────────────────────────────────────


def make_position_packet(grid: Grid, a, sigma: float) -> StateVector:
    """omega(a): the normalized packet g_{a,sigma} on the grid."""
    params = GaussianParams(a=a, p=None, sigma=sigma)
    params.check_support(grid)
    values = _outer([gaussian_axis(grid, center, sigma) for center in params.a])
    return _finish(values, f"packet at {params.a.tolist()}")


def make_phase_packet(grid: Grid, a, p, sigma: float) -> StateVector:
    """Omega(a, p): the packet g_{a,sigma} carrying momentum p."""
    params = GaussianParams(a=a, p=p, sigma=sigma)
    params.check_support(grid)
    guard = grid.band_limit - ALIASING_SIGMAS / sigma
    if np.any(np.abs(params.p) >= guard):
        raise ResolutionError(
            f"momentum {params.p.tolist()} exceeds the band limit guard {guard:.4g} of this grid"
        )
    values = _outer([gaussian_axis(grid, c, sigma, q) for c, q in zip(params.a, params.p)])
    return _finish(values, f"packet at {params.a.tolist()}")


def momentum_member(grid: Grid, b, sigma: float) -> StateVector:
    """Member of the momentum manifold: the Fourier image of g_{b,sigma}.

    In position space it is centered at the origin with width 1/(2 sigma) and
    mean momentum b.
    """
    params = GaussianParams(a=b, p=None, sigma=sigma)
    if params.a.size != grid.dims:
        raise ParameterError(f"momentum has {params.a.size} components, grid has {grid.dims} axes")
    if np.any(np.abs(params.a) + SUPPORT_MARGIN_SIGMAS * sigma > grid.band_limit):
        raise ResolutionError(f"momentum packet at {params.a.tolist()} does not fit the band limit {grid.band_limit:.4g}")
    if not grid.contains(np.zeros(grid.dims), SUPPORT_MARGIN_SIGMAS / (2.0 * sigma)):
        warn(f"momentum packets of sigma={sigma} are wider than the grid around the origin")
    values = _outer([momentum_axis(grid, center, sigma) for center in params.a])
    return _finish(values, f"momentum packet at {params.a.tolist()}")


def manifold_member(spec: ManifoldSpec, params) -> StateVector:
    """Normalized member of ``spec`` at ``params`` without support warnings."""
    values = _outer(member_axes(spec, params))
    return normalize(values)


def member_axes(spec: ManifoldSpec, params) -> list[np.ndarray]:
    grid, sigma = spec.grid, spec.sigma
    if spec.kind is ManifoldKind.MOMENTUM:
        return [momentum_axis(grid, b, sigma) for b, _ in spec.split(params)]
    return [gaussian_axis(grid, c, sigma, q) for c, q in spec.split(params)]


# ── Closed-form overlaps ─────────────────────────────────────


def overlap_centered(d: float, sigma: float, dims: int = 3) -> float:
    """<psi_d, g_{a,sigma}> for a centered Gaussian psi_d whose |psi|^2 has variance d^2.

    For dims = 3 this is (2 sigma d / (sigma^2 + d^2))^{3/2}.
    """
    if not (d > 0 and sigma > 0):
        raise ParameterError(f"d and sigma must be positive, got d={d}, sigma={sigma}")
    return float((2.0 * sigma * d / (sigma**2 + d**2)) ** (dims / 2.0))


def overlap_displaced(distance: float, sigma: float) -> float:
    """|<omega(a), omega(b)>| = exp(-|a - b|^2 / (8 sigma^2))."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    return float(np.exp(-(distance**2) / (8.0 * sigma**2)))


# ── Tangent directions ───────────────────────────────────────


def position_tangents(grid: Grid, a, sigma: float) -> list[StateVector]:
    """Unnormalized derivatives of g_{a,sigma} along each center coordinate."""
    params = GaussianParams(a=a, p=None, sigma=sigma)
    axes = [gaussian_axis(grid, c, sigma) for c in params.a]
    tangents = []
    for i, center in enumerate(params.a):
        factors = list(axes)
        factors[i], _ = gaussian_axis_derivatives(grid, center, sigma)
        tangents.append(StateVector(_outer(factors)))
    return tangents


def sigma_tangent(grid: Grid, a, sigma: float) -> TangentVector:
    """Unit tangent at g_{a,sigma} of the path obtained by varying sigma."""
    params = GaussianParams(a=a, p=None, sigma=sigma)
    base = make_position_packet(grid, params.a, sigma)
    coordinates = grid.coordinates()
    radius2 = sum((x - c) ** 2 for x, c in zip(coordinates, params.a)).reshape(-1)
    derivative = base.amplitudes * (-grid.dims / (2.0 * sigma) + radius2 / (2.0 * sigma**3))
    tangent = tangent_project(Ray(base), derivative)
    return TangentVector(tangent.base, normalize(tangent.direction))


def induced_metric(spec: ManifoldSpec, params, step: float = 1e-5) -> np.ndarray:
    """Pullback of the Fubini-Study metric onto ``spec`` at ``params``.

    g_ij = Re[<d_i m, d_j m> - <d_i m, m><m, d_j m>], derivatives by central
    differences of normalized members.
    """
    params = np.asarray(params, dtype=float)
    center = manifold_member(spec, params).amplitudes
    derivatives = []
    for i in range(params.size):
        shift = np.zeros_like(params)
        shift[i] = step
        plus = manifold_member(spec, params + shift).amplitudes
        minus = manifold_member(spec, params - shift).amplitudes
        derivatives.append((plus - minus) / (2.0 * step))
    derivatives = np.array(derivatives)
    gram = np.conj(derivatives) @ derivatives.T
    along = np.conj(derivatives) @ center
    metric = (gram - np.outer(along, np.conj(along))).real
    return 0.5 * (metric + metric.T)
