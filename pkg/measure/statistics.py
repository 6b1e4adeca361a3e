"""Statistical checks applied to trial outcomes and walker samples."""

import logging
from typing import NamedTuple

import numpy as np
from scipy import stats

from core.exceptions import ParameterError, TestValidityWarning, warn
from measure.walks import TrialStats

logger = logging.getLogger(__name__)

MIN_EXPECTED_COUNT = 5


def chi_square_uniformity(stats_a: TrialStats, stats_b: TrialStats) -> float:
    """Pearson chi-square homogeneity p-value of the hit counts of two runs."""
    if stats_a.target_count != stats_b.target_count:
        raise ParameterError(
            f"runs use different detector sets ({stats_a.target_count} vs {stats_b.target_count} targets)"
        )
    table = np.array([stats_a.counts, stats_b.counts])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2 or np.array_equal(table[0], table[1]):
        return 1.0
    result = stats.chi2_contingency(table, correction=False)
    if np.min(result.expected_freq) < MIN_EXPECTED_COUNT:
        warn(
            f"expected cell count {np.min(result.expected_freq):.2f} is below {MIN_EXPECTED_COUNT}",
            category=TestValidityWarning,
        )
    logger.info(f"Chi-square homogeneity: statistic {result.statistic:.4f}, p = {result.pvalue:.4f}")
    return float(result.pvalue)


def two_proportion_p_value(count_a: int, count_b: int, total: int) -> float:
    """Two-sided z-test that two hit counts out of the same ``total`` trials share one proportion."""
    pooled = (count_a + count_b) / (2.0 * total)
    if pooled in (0.0, 1.0):
        return 1.0
    error = np.sqrt(2.0 * pooled * (1.0 - pooled) / total)
    z = (count_a - count_b) / total / error
    return float(2.0 * stats.norm.sf(abs(z)))


def binomial_z_scores(frequencies, expected, total: int) -> np.ndarray:
    """(observed - expected) / binomial standard deviation, per cell."""
    frequencies, expected = np.asarray(frequencies, dtype=float), np.asarray(expected, dtype=float)
    error = np.sqrt(np.clip(expected * (1.0 - expected), 1e-300, None) / max(total, 1))
    return (frequencies - expected) / error


class NormalityScreen(NamedTuple):
    skewness: float
    excess_kurtosis: float
    skewness_error: float
    kurtosis_error: float

    def passes(self, skewness_limit: float, kurtosis_limit: float) -> bool:
        return abs(self.skewness) < skewness_limit and abs(self.excess_kurtosis) < kurtosis_limit


def normality_screen(sample) -> NormalityScreen:
    sample = np.asarray(sample, dtype=float).reshape(-1)
    n = sample.size
    if n < 8:
        raise ParameterError(f"normality screening needs at least 8 values, got {n}")
    return NormalityScreen(
        skewness=float(stats.skew(sample)),
        excess_kurtosis=float(stats.kurtosis(sample)),
        skewness_error=float(np.sqrt(6.0 / n)),
        kurtosis_error=float(np.sqrt(24.0 / n)),
    )


def linear_fit_r2(x, y) -> tuple[float, float]:
    """Slope and R^2 of the least-squares line through (x, y)."""
    fit = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return float(fit.slope), float(fit.rvalue**2)
