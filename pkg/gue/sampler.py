"""Seedable sampler of Gaussian-unitary-ensemble Hamiltonians.

Normalization: density proportional to exp(-Tr H^2 / (2 s^2)), i.e. every
independent real Gaussian has variance s^2. Diagonal entries are N(0, s^2);
off-diagonal entries are (X + iY)/sqrt(2) with X, Y ~ N(0, s^2), so
E|H_jk|^2 = s^2 and E[Tr H^2] = N^2 s^2.

Streams: the sampler for trial ``t`` of a run with master seed ``m`` is seeded
with ``SeedSequence(m, spawn_key=(t,))`` (numpy's hash-based derivation) driving
a PCG64 generator.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from core.exceptions import ParameterError

logger = logging.getLogger(__name__)

UNITARITY_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """An exactly Hermitian N x N complex matrix."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ParameterError(f"Hamiltonian must be square, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ParameterError("Hamiltonian entries must be finite")
        if not np.array_equal(entries, entries.conj().T):
            raise ParameterError("Hamiltonian is not exactly Hermitian")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


@dataclass(eq=False)
class GueSampler:
    """Single-owner source of independent GUE draws."""

    dimension: int
    scale: float
    rng_seed: int
    spawn_key: tuple[int, ...] = ()
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.dimension < 2:
            raise ParameterError(f"GUE dimension must be at least 2, got {self.dimension}")
        if not self.scale > 0:
            raise ParameterError(f"GUE scale must be positive, got {self.scale}")
        if not 0 <= self.rng_seed < 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.rng_seed}")
        sequence = np.random.SeedSequence(self.rng_seed, spawn_key=self.spawn_key)
        self._rng = np.random.Generator(np.random.PCG64(sequence))

    @property
    def rng(self) -> np.random.Generator:
        return self._rng

    def draw(self) -> np.ndarray:
        """Raw Hermitian array of one draw (no wrapper, for hot loops)."""
        return self.draw_many(1)[0]

    def draw_many(self, count: int) -> np.ndarray:
        """``count`` consecutive draws of the stream, shape (count, N, N).

        One call of ``draw_many(k)`` consumes the stream exactly like k calls of
        ``draw``, so buffering never changes a trial's outcome.
        """
        n, s = self.dimension, self.scale
        normals = self._rng.standard_normal((count, 2, n, n)) * s
        real, imag = normals[:, 0], normals[:, 1]
        upper = np.triu((real + 1j * imag) / np.sqrt(2.0), k=1)
        draws = upper + upper.conj().transpose(0, 2, 1)
        diagonal = np.arange(n)
        draws[:, diagonal, diagonal] = real[:, diagonal, diagonal]
        return draws

    def sample(self) -> HermitianMatrix:
        return HermitianMatrix(self.draw())


def derive_sampler(master_seed: int, trial_index: int, dimension: int, scale: float) -> GueSampler:
    """The sampler owned by one trial of a run."""
    return GueSampler(dimension=dimension, scale=scale, rng_seed=master_seed, spawn_key=(trial_index,))


def sample(sampler: GueSampler) -> HermitianMatrix:
    return sampler.sample()


# ── Diagnostics ──────────────────────────────────────────────


def semicircle_cdf(x) -> np.ndarray:
    """CDF of the Wigner semicircle law on [-2, 2]."""
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + x * np.sqrt(4.0 - x**2) / (4.0 * np.pi) + np.arcsin(x / 2.0) / np.pi


def scaled_spectrum(sampler: GueSampler, draws: int) -> np.ndarray:
    """Eigenvalues of ``draws`` samples divided by s * sqrt(N)."""
    norm = sampler.scale * np.sqrt(sampler.dimension)
    return np.concatenate([np.linalg.eigvalsh(sampler.draw()) / norm for _ in range(draws)])


def spectral_ks(sampler: GueSampler, draws: int) -> stats._stats_py.KstestResult:
    """Kolmogorov-Smirnov test of the scaled spectrum against the semicircle law."""
    return stats.kstest(scaled_spectrum(sampler, draws), semicircle_cdf)


@dataclass(frozen=True)
class InvarianceReport:
    draws: int
    first_moment_discrepancy: float
    second_moment_discrepancy: float
    second_moment_standard_error: float

    @property
    def max_discrepancy(self) -> float:
        return max(self.first_moment_discrepancy, self.second_moment_discrepancy)

    def within(self, standard_errors: float) -> bool:
        return self.second_moment_discrepancy <= standard_errors * self.second_moment_standard_error


def unitary_invariance_check(sampler: GueSampler, unitary, draws: int) -> InvarianceReport:
    """Compare first and second entry moments of {H} and {U H U^dagger}.

    Both ensembles are built from the same draws; the discrepancy is the largest
    absolute difference of the entrywise means and of the entrywise E|H_jk|^2.
    """
    unitary = np.asarray(unitary, dtype=np.complex128)
    n = sampler.dimension
    if unitary.shape != (n, n):
        raise ParameterError(f"unitary must be {n} x {n}, got {unitary.shape}")
    if not np.allclose(unitary.conj().T @ unitary, np.eye(n), atol=UNITARITY_TOLERANCE, rtol=0.0):
        raise ParameterError("matrix is not unitary to 1e-12")
    if draws < 2:
        raise ParameterError("invariance check needs at least 2 draws")

    samples = np.array([sampler.draw() for _ in range(draws)])
    rotated = unitary @ samples @ unitary.conj().T
    first = np.abs(samples.mean(axis=0) - rotated.mean(axis=0)).max()
    power, rotated_power = np.abs(samples) ** 2, np.abs(rotated) ** 2
    second = np.abs(power.mean(axis=0) - rotated_power.mean(axis=0)).max()
    # |H_jk|^2 is s^2 * Exp(1) off the diagonal and s^2 * chi^2_1 on it
    error = np.sqrt(2.0 * 2.0 / draws) * sampler.scale**2
    logger.info(f"Unitary invariance over {draws} draws: first {first:.3e}, second {second:.3e}")
    return InvarianceReport(draws, float(first), float(second), float(error))


def derive_seed(master_seed: int, *key: int) -> int:
    """A 64-bit seed for a sub-run identified by ``key`` (e.g. case and sweep index)."""
    sequence = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return int(sequence.generate_state(1, np.uint64)[0])
