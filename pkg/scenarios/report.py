"""Scenario reports: configuration echo, statistics, time series and tolerance flags."""

import logging
import operator
from dataclasses import dataclass, field

from measure.walks import TrialStats

logger = logging.getLogger(__name__)

COMPARISONS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class Flag:
    """Pass/fail check of ``value`` against the tolerance ``config[tolerance_key]``."""

    name: str
    value: float
    comparison: str
    tolerance_key: str
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "comparison": self.comparison,
            "tolerance_key": self.tolerance_key,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass
class Series:
    header: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def append(self, *values):
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        index = self.header.index(name)
        return [row[index] for row in self.rows]


@dataclass
class ScenarioReport:
    scenario: str
    config: dict
    seed: int
    statistics: dict = field(default_factory=dict)
    series: dict[str, Series] = field(default_factory=dict)
    flags: list[Flag] = field(default_factory=list)
    trials: TrialStats | None = None

    def check(self, name: str, value: float, comparison: str, tolerance_key: str) -> bool:
        """Record a flag; the tolerance must be part of the configuration echo."""
        tolerance = self.config[tolerance_key]
        passed = bool(COMPARISONS[comparison](value, tolerance))
        self.flags.append(Flag(name, float(value), comparison, tolerance_key, float(tolerance), passed))
        if not passed:
            logger.warning(f"[{self.scenario}] {name} = {value:.6g} fails {comparison} {tolerance_key} ({tolerance})")
        return passed

    def flag(self, name: str) -> Flag:
        return next(f for f in self.flags if f.name == name)

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.flags)

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "config": self.config,
            "statistics": self.statistics,
            "flags": [f.as_dict() for f in self.flags],
            "passed": self.passed,
        }
