"""Shared types: observation streams, prediction intervals, feature schedules.

Conventions used across the package:

* an interval is a pair of extended reals (lower, upper); the whole line is
  ``(-inf, +inf)`` and the pair ``(+inf, -inf)`` encodes the empty set,
* significance levels always form a strictly decreasing ladder, so the
  interval at a larger level is contained in the interval at a smaller one,
* a feature schedule describes how many explanatory variables are visible
  to a predictor at each step of an on-line run.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import inf, isinf, isnan
from typing import Iterable, Iterator, Sequence

import numpy as np


class RankDeficiencyError(ValueError):
    """An unregularized fit required a full-rank design matrix and did not get one."""


class DegenerateFitError(ValueError):
    """A score is undefined because the fitted residual spread is exactly zero."""


class SummaryMismatchError(ValueError):
    """Summary components are mutually inconsistent (negative residual energy)."""


class MatrixParseError(ValueError):
    """A matrix file could not be parsed; carries the offending 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True, eq=False)
class Observation:
    """One (explanatory vector, response) pair.

    The explanatory part may be empty (zero features), in which case the
    regression model reduces to an intercept-only location model.
    """

    explanatory: np.ndarray
    response: float

    def __post_init__(self):
        x = np.asarray(self.explanatory, dtype=float).ravel()
        if x.size and not np.all(np.isfinite(x)):
            raise ValueError("explanatory components must be finite")
        y = float(self.response)
        if isnan(y) or isinf(y):
            raise ValueError("response must be finite")
        object.__setattr__(self, "explanatory", x)
        object.__setattr__(self, "response", y)


class History:
    """Growing record of revealed observations with a cached design matrix.

    Design rows are (1, x_1, ..., x_K).  The matrix is kept in a doubling
    buffer so appending is amortized O(K) and ``design_matrix`` is a cheap
    view, which keeps a full on-line pass at O(sum_n n K^2).
    """

    def __init__(self, feature_count: int):
        if feature_count < 0:
            raise ValueError("feature_count must be nonnegative")
        self._k = int(feature_count)
        self._design = np.empty((16, self._k + 1))
        self._responses = np.empty(16)
        self._n = 0

    @classmethod
    def from_observations(cls, observations: Iterable[Observation]) -> "History":
        observations = list(observations)
        if not observations:
            raise ValueError("cannot infer the feature count from an empty sequence")
        history = cls(observations[0].explanatory.size)
        for obs in observations:
            history.append(obs)
        return history

    def append(self, observation: Observation) -> None:
        if observation.explanatory.size != self._k:
            raise ValueError(
                f"expected {self._k} features, got {observation.explanatory.size}"
            )
        if self._n == self._design.shape[0]:
            design = np.empty((2 * self._n, self._k + 1))
            design[: self._n] = self._design[: self._n]
            responses = np.empty(2 * self._n)
            responses[: self._n] = self._responses[: self._n]
            self._design, self._responses = design, responses
        self._design[self._n, 0] = 1.0
        self._design[self._n, 1:] = observation.explanatory
        self._responses[self._n] = observation.response
        self._n += 1

    def __len__(self) -> int:
        return self._n

    @property
    def feature_count(self) -> int:
        return self._k

    @property
    def design_matrix(self) -> np.ndarray:
        """All design rows so far, shape (n, K+1).  Treat as read-only."""
        return self._design[: self._n]

    @property
    def features(self) -> np.ndarray:
        """Explanatory rows without the leading ones column, shape (n, K)."""
        return self._design[: self._n, 1:]

    @property
    def responses(self) -> np.ndarray:
        return self._responses[: self._n]


@dataclass(frozen=True)
class PredictionInterval:
    """A closed interval of candidate responses, possibly unbounded or empty.

    The empty set is encoded as (+inf, -inf); its length is defined to be 0.
    """

    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if isnan(lo) or isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi and not (lo == inf and hi == -inf):
            raise ValueError(f"invalid endpoints ({lo!r}, {hi!r})")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def full_line(cls) -> "PredictionInterval":
        return cls(-inf, inf)

    @classmethod
    def empty(cls) -> "PredictionInterval":
        return cls(inf, -inf)

    @property
    def is_empty(self) -> bool:
        return self.lower == inf and self.upper == -inf

    @property
    def is_bounded(self) -> bool:
        return self.is_empty or (not isinf(self.lower) and not isinf(self.upper))

    @property
    def length(self) -> float:
        if self.is_empty:
            return 0.0
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        if self.is_empty:
            return False
        return self.lower <= value <= self.upper


def validate_levels(levels) -> tuple[float, ...]:
    """Coerce a significance ladder to a validated tuple.

    Levels must lie strictly inside (0, 1) and be strictly decreasing, which
    makes the intervals returned for one call nested by construction.
    """
    if isinstance(levels, EpsilonLadder):
        return levels.levels
    out = tuple(float(e) for e in levels)
    if not out:
        raise ValueError("at least one significance level is required")
    for e in out:
        if isnan(e) or not 0.0 < e < 1.0:
            raise ValueError(f"significance level {e!r} outside (0, 1)")
    for a, b in zip(out, out[1:]):
        if not a > b:
            raise ValueError("significance levels must be strictly decreasing")
    return out


@dataclass(frozen=True)
class EpsilonLadder:
    """Strictly decreasing significance levels, largest (least confident) first."""

    levels: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", validate_levels(tuple(self.levels)))

    @classmethod
    def parse(cls, text: str) -> "EpsilonLadder":
        """Parse a comma-separated list; the levels are sorted decreasing first."""
        try:
            raw = [float(tok) for tok in text.split(",") if tok.strip()]
        except ValueError as err:
            raise ValueError(f"cannot parse significance levels {text!r}") from err
        if len(set(raw)) != len(raw):
            raise ValueError("duplicate significance levels")
        return cls(tuple(sorted(raw, reverse=True)))

    def __iter__(self) -> Iterator[float]:
        return iter(self.levels)

    def __len__(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class FeatureSchedule:
    """Number of explanatory variables visible to the predictor at each step.

    Before ``switch_step`` only the first ``early_count`` features enter the
    regression; from that step on the first ``full_count`` do.  This mirrors
    a forecaster who distrusts a wide model until enough data has arrived.
    """

    early_count: int
    switch_step: int
    full_count: int

    def __post_init__(self):
        if self.early_count < 1 or self.full_count < 1 or self.switch_step < 1:
            raise ValueError("schedule counts and switch step must be positive")
        if self.early_count > self.full_count:
            raise ValueError("early_count must not exceed full_count")

    @classmethod
    def for_feature_count(cls, feature_count: int, early_count: int = 10) -> "FeatureSchedule":
        """Default schedule: min(early_count, K) features until step K+3, then all K."""
        if feature_count < 1:
            raise ValueError("feature_count must be positive")
        return cls(min(early_count, feature_count), feature_count + 3, feature_count)

    def active_features(self, step: int) -> int:
        return self.early_count if step < self.switch_step else self.full_count


Stream = Sequence[Observation]
