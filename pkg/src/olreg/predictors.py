"""Interval predictors for on-line linear regression.

Every predictor here answers the same question: after n-1 revealed
observations and a new explanatory vector, which candidate responses y would
not look strange at significance level epsilon?  The reported interval is the
convex hull of the surviving candidates, one interval per level of a strictly
decreasing ladder.

Four predictors are provided, differing in what they assume about the data:

* ``iid_predict`` assumes exchangeability only.  A candidate survives when
  the rank of its ridge residual magnitude among all n residual magnitudes is
  not extreme; the exact survivor set is found by a sweep over the at most
  2n - 2 points where two residual magnitudes cross.
* ``gauss_predict`` assumes the full linear-Gaussian model and inverts the
  classical studentized prediction pivot.
* ``mva_predict`` assumes Gaussian noise but nothing about the explanatory
  law; it studentizes the last centered ridge residual and classifies the
  resulting quadratic inequality in y.
* ``iidgauss_predict`` assumes the Gaussian response model with exchangeable
  explanatory vectors and estimates the survivor set by Monte Carlo draws
  from the exact conditional distribution given the sufficient summary.

``wilks_predict`` is the model-free order-statistic predictor used as a
baseline: it needs no explanatory data at all.

Conventions: intervals are closed, the pair (+inf, -inf) encodes the empty
set, and degenerate fits fall back to documented conventions (a zero
estimated spread gives a point interval, an identically zero spread over all
candidates gives the full line) instead of empty output.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, inf, sqrt

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .base import (
    DegenerateFitError,
    FeatureSchedule,
    History,
    PredictionInterval,
    Observation,
    RankDeficiencyError,
    SummaryMismatchError,
    validate_levels,
)
from .numerics import (
    RCOND_FLOOR,
    ResidualDecomposition,
    RidgeProjector,
    StudentT,
    residual_decomposition,
)
from .sampler import complement_directions, random_orderings


def _full_lines(count: int) -> list[PredictionInterval]:
    return [PredictionInterval.full_line() for _ in range(count)]


def _new_row(x_new, feature_count: int) -> np.ndarray:
    x = np.asarray(x_new, dtype=float).ravel()
    if x.size != feature_count:
        raise ValueError(f"expected {feature_count} features, got {x.size}")
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError("explanatory components must be finite")
    return x


def _augmented_design(
    history: History, x_new: np.ndarray, schedule: FeatureSchedule | None
) -> np.ndarray:
    """Design matrix over all n rows, truncated to the scheduled column count."""
    k = history.feature_count
    x = _new_row(x_new, k)
    n = len(history) + 1
    active = schedule.active_features(n) if schedule is not None else k
    if active > k:
        raise ValueError(f"schedule asks for {active} features but only {k} exist")
    design = np.empty((n, active + 1))
    design[: n - 1] = history.design_matrix[:, : active + 1]
    design[-1, 0] = 1.0
    design[-1, 1:] = x[:active]
    return design


# ---------------------------------------------------------------------------
# Rank-counting predictor for exchangeable data (the "IID" predictor)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepState:
    """Sorted crossing points with membership deltas and boundary counts.

    ``points`` starts at -inf and ends at +inf; ``deltas`` aligns with it and
    its running prefix sum equals n * p(y) for y in the half-open cell that
    starts at the corresponding point, where p(y) is the fraction of the n
    residual magnitudes at least as large as the candidate's own.
    ``left_count`` and ``right_count`` tally the comparison sets that are
    unbounded to the left and to the right.
    """

    points: np.ndarray
    deltas: np.ndarray
    left_count: int
    right_count: int

    def prefix_counts(self) -> np.ndarray:
        return np.cumsum(self.deltas)


def build_sweep(offset: np.ndarray, slope: np.ndarray) -> SweepState:
    """Locate every candidate response where two residual magnitudes cross.

    The i-th residual is the affine function offset_i + y * slope_i, and the
    comparison set S_i = {y : |e_i(y)| >= |e_n(y)|} is closed: an interval, a
    point, one ray, two rays, the whole line, or empty.  Each bounded
    transition contributes a crossing point carrying +1 where S_i begins and
    -1 where it ends; sets reaching an infinity are tallied in the boundary
    counts instead.  Ties in slope or offset are compared exactly: equality
    of floats is the event the case analysis is about, and near-coincident
    slopes simply produce a far-away crossing point that the infinite
    sentinels absorb.
    """
    offset = np.array(offset, dtype=float)
    slope = np.array(slope, dtype=float)
    if offset.shape != slope.shape or offset.ndim != 1 or offset.size < 1:
        raise ValueError("offset and slope must be 1-d arrays of equal positive length")
    # Normalize signs so every slope is nonnegative; |e_i| is unchanged.
    flip = slope < 0.0
    offset[flip] = -offset[flip]
    slope[flip] = -slope[flip]
    last_offset = float(offset[-1])
    last_slope = float(slope[-1])

    points: list[float] = []
    deltas: list[int] = []
    left = right = 0
    for a_i, b_i in zip(offset[:-1].tolist(), slope[:-1].tolist()):
        if b_i != last_slope:
            # Both magnitudes cross twice (counting multiplicity): where the
            # difference and where the sum of the two affine maps vanish.
            first = -(a_i - last_offset) / (b_i - last_slope)
            second = -(a_i + last_offset) / (b_i + last_slope)
            lo, hi = (first, second) if first <= second else (second, first)
            if b_i < last_slope:
                # S_i is the closed interval [lo, hi]; add both points even
                # when they coincide (the set is then a single point).
                points += [lo, hi]
                deltas += [1, -1]
            elif first == second:
                # Tangency from above: S_i is the whole line.
                left += 1
                right += 1
            else:
                # S_i is the pair of closed rays extending past lo and hi.
                points += [lo, hi]
                deltas += [-1, 1]
                left += 1
                right += 1
        elif a_i == last_offset:
            # Identical magnitudes: S_i is the whole line.
            left += 1
            right += 1
        elif last_slope != 0.0:
            # Equal nonzero slopes: one crossing, S_i is a single ray.
            crossing = -(a_i + last_offset) / (2.0 * last_slope)
            points.append(crossing)
            if a_i > last_offset:
                deltas.append(1)
                right += 1
            else:
                deltas.append(-1)
                left += 1
        elif abs(a_i) >= abs(last_offset):
            # Both magnitudes constant: S_i is everything or nothing.
            left += 1
            right += 1

    all_points = np.array([-inf] + points + [inf])
    all_deltas = np.array([left + 1] + deltas + [-right - 1], dtype=np.int64)
    # Stable ascending sort; at ties the +1 entries must come first so the
    # prefix peak at a point equals the membership count at that point.
    order = np.lexsort((-all_deltas, all_points))
    return SweepState(all_points[order], all_deltas[order], left, right)


def sweep_hull(state: SweepState, count: int, epsilon: float) -> PredictionInterval:
    """Convex hull of the candidates whose rank fraction exceeds ``epsilon``.

    The prefix sums give count * p(y) per cell; a cell or point qualifies
    when p(y) > epsilon.  The hull runs from the first qualifying position to
    the point just after the last one: qualifying sets are closed, so the
    supremum of a qualifying open cell is itself a member.
    """
    fractions = state.prefix_counts() / count
    qualifying = np.flatnonzero(fractions > epsilon)
    if qualifying.size == 0:
        return PredictionInterval.empty()
    return PredictionInterval(
        state.points[qualifying[0]], state.points[qualifying[-1] + 1]
    )


def iid_predict(
    history: History,
    x_new,
    levels,
    ridge: float = 0.0,
    schedule: FeatureSchedule | None = None,
) -> list[PredictionInterval]:
    """Distribution-free prediction intervals from ridge residual ranks.

    A candidate response y survives at level epsilon when more than an
    epsilon fraction of the n ridge residual magnitudes (computed with the
    candidate appended) are at least as large as the candidate's own.  Ties
    count in the candidate's favour, which makes the predictor conservative:
    its error rate never exceeds epsilon in probability, at the price of
    slightly longer intervals than the tie-smoothed ideal.

    With an empty history every candidate is maximally typical, so the full
    line is returned at any level.
    """
    levels = validate_levels(levels)
    n = len(history) + 1
    if n == 1:
        return _full_lines(len(levels))
    design = _augmented_design(history, x_new, schedule)
    decomposition = residual_decomposition(RidgeProjector(design, ridge), history.responses)
    state = build_sweep(decomposition.offset, decomposition.slope)
    return [sweep_hull(state, n, eps) for eps in levels]


def iid_score(design, responses, ridge: float = 0.0) -> float:
    """Ridge residual magnitude of the last observation given all n rows."""
    responses = np.asarray(responses, dtype=float)
    return float(abs(RidgeProjector(design, ridge).residuals(responses)[-1]))


def iid_pvalue(scores, tie_break: float) -> float:
    """Rank fraction of the last score with randomized tie handling.

    ``tie_break`` is the tie weight tau in [0, 1]: strictly larger scores
    always count against the last observation, equal ones count with weight
    tau.  tau = 1 reproduces the deterministic (conservative) rule.
    """
    if not 0.0 <= tie_break <= 1.0:
        raise ValueError("tie_break must lie in [0, 1]")
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.size < 1:
        raise ValueError("scores must be a nonempty 1-d array")
    last = scores[-1]
    larger = int(np.count_nonzero(scores > last))
    equal = int(np.count_nonzero(scores == last))
    return (larger + tie_break * equal) / scores.size


def iid_bounded_threshold(epsilon: float) -> int:
    """Smallest step at which the rank predictor can return a bounded interval."""
    return ceil(1.0 / epsilon)


# ---------------------------------------------------------------------------
# Studentized pivot predictor under the full linear-Gaussian model ("Gauss")
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussFit:
    """Least-squares fit of the history plus the geometry of one new point."""

    coefficients: np.ndarray
    sigma_hat: float
    leverage: float
    point_prediction: float
    degrees_of_freedom: int


def gauss_fit(history: History, x_new) -> GaussFit:
    """Fit the history by least squares and studentize the new design point.

    ``sigma_hat`` is the usual unbiased residual scale estimate and
    ``leverage`` the quadratic form z'(Z'Z)^{-1}z of the new design row; the
    prediction pivot (y - point_prediction) / (sigma_hat * sqrt(1 + leverage))
    follows a Student t law with ``degrees_of_freedom`` when the model holds.
    """
    x = _new_row(x_new, history.feature_count)
    design = history.design_matrix
    rows, cols = design.shape
    if rows <= cols:
        raise RankDeficiencyError(
            f"need more than {cols} observations to estimate the residual scale"
        )
    coefficients, _, rank, _ = np.linalg.lstsq(design, history.responses, rcond=None)
    if rank < cols:
        raise RankDeficiencyError("history design matrix is rank deficient")
    fitted_residuals = history.responses - design @ coefficients
    dof = rows - cols
    sigma_hat = sqrt(float(fitted_residuals @ fitted_residuals) / dof)
    new_row = np.concatenate([[1.0], x])
    gram_factor = cho_factor(design.T @ design, lower=True)
    leverage = float(new_row @ cho_solve(gram_factor, new_row))
    return GaussFit(
        coefficients=coefficients,
        sigma_hat=sigma_hat,
        leverage=leverage,
        point_prediction=float(coefficients @ new_row),
        degrees_of_freedom=dof,
    )


def gauss_predict(history: History, x_new, levels) -> list[PredictionInterval]:
    """Classical studentized prediction intervals, full line before step K+3.

    Below step K + 3 the residual scale has no degrees of freedom, so the
    predictor abstains with the whole line; from K + 3 on the intervals are
    exact under the linear-Gaussian model.  A zero estimated scale (perfectly
    interpolated history) collapses the interval to the point prediction.
    """
    levels = validate_levels(levels)
    n = len(history) + 1
    if n < history.feature_count + 3:
        return _full_lines(len(levels))
    fit = gauss_fit(history, x_new)
    if fit.sigma_hat == 0.0:
        return [
            PredictionInterval(fit.point_prediction, fit.point_prediction)
            for _ in levels
        ]
    spread = fit.sigma_hat * sqrt(1.0 + fit.leverage)
    dist = StudentT(fit.degrees_of_freedom)
    out = []
    for eps in levels:
        half = dist.upper_quantile(eps / 2.0) * spread
        out.append(
            PredictionInterval(fit.point_prediction - half, fit.point_prediction + half)
        )
    return out


@dataclass(frozen=True, eq=False)
class GaussSummary:
    """Design cross-moments of a history: enough to studentize any new point."""

    count: int
    gram: np.ndarray
    moment: np.ndarray
    square_sum: float

    @classmethod
    def from_history(cls, history: History) -> "GaussSummary":
        design = history.design_matrix
        y = history.responses
        return cls(
            count=len(history),
            gram=design.T @ design,
            moment=design.T @ y,
            square_sum=float(y @ y),
        )

    def updated(self, observation: Observation) -> "GaussSummary":
        row = np.concatenate([[1.0], observation.explanatory])
        y = observation.response
        return GaussSummary(
            count=self.count + 1,
            gram=self.gram + np.outer(row, row),
            moment=self.moment + y * row,
            square_sum=self.square_sum + y * y,
        )


def gauss_score(summary: GaussSummary, observation: Observation) -> float:
    """Studentized residual magnitude of a new observation, from moments only.

    Equals |y - yhat| / (sigma_hat * sqrt(1 + leverage)) computed from the
    raw history; requires at least K + 2 summarized observations so the
    residual scale has a positive number of degrees of freedom.
    """
    cols = summary.gram.shape[0]
    dof = summary.count - cols
    if dof < 1:
        raise ValueError(f"need more than {cols} summarized observations")
    spectrum = np.linalg.svd(summary.gram, compute_uv=False)
    if spectrum[0] == 0.0 or spectrum[-1] / spectrum[0] < RCOND_FLOOR:
        raise RankDeficiencyError("summarized design is rank deficient")
    factor = cho_factor(summary.gram, lower=True)
    coefficients = cho_solve(factor, summary.moment)
    residual_energy = max(summary.square_sum - float(summary.moment @ coefficients), 0.0)
    sigma_hat = sqrt(residual_energy / dof)
    if sigma_hat == 0.0:
        raise DegenerateFitError("summarized history is perfectly interpolated")
    row = np.concatenate([[1.0], observation.explanatory])
    leverage = float(row @ cho_solve(factor, row))
    prediction = float(coefficients @ row)
    return abs(observation.response - prediction) / (sigma_hat * sqrt(1.0 + leverage))


# ---------------------------------------------------------------------------
# Studentized centered-residual predictor ("MVA"): Gaussian noise, free design
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticRegion:
    """The candidate set {y : lead y^2 + 2 cross y + constant < 0}."""

    lead: float
    cross: float
    constant: float

    @property
    def discriminant(self) -> float:
        return self.cross * self.cross - self.lead * self.constant

    def contains(self, value: float) -> bool:
        return (self.lead * value + 2.0 * self.cross) * value + self.constant < 0.0

    def hull(self) -> PredictionInterval:
        """Convex hull of the region.

        A negative leading coefficient means the region reaches both
        infinities (its complement is at most an interval), so the hull is
        the whole line.  A vanishing leading coefficient leaves a ray, the
        line, or nothing; a positive one leaves an open interval between the
        roots or nothing.
        """
        if self.lead < 0.0:
            return PredictionInterval.full_line()
        if self.lead == 0.0:
            if self.cross > 0.0:
                return PredictionInterval(-inf, -self.constant / (2.0 * self.cross))
            if self.cross < 0.0:
                return PredictionInterval(-self.constant / (2.0 * self.cross), inf)
            if self.constant < 0.0:
                return PredictionInterval.full_line()
            return PredictionInterval.empty()
        disc = self.discriminant
        if disc <= 0.0:
            return PredictionInterval.empty()
        root = sqrt(disc)
        return PredictionInterval(
            (-self.cross - root) / self.lead, (-self.cross + root) / self.lead
        )


def mva_region(offset, slope, count: int, t_value: float) -> QuadraticRegion:
    """Quadratic form of the studentized-last-centered-residual inequality.

    ``offset`` and ``slope`` decompose the n ridge residuals as affine
    functions of the candidate response; both are centered here by the mean
    of their first n-1 components.  A candidate survives when

        sqrt((n-1)/n) |a_n + y b_n| < t * sqrt(sum_{i<n} (a_i + y b_i)^2 / (n-2)),

    which after squaring is the region carried by the returned coefficients.
    """
    offset = np.asarray(offset, dtype=float)
    slope = np.asarray(slope, dtype=float)
    n = count
    a = offset - offset[:-1].mean()
    b = slope - slope[:-1].mean()
    scale = float((n - 1) * (n - 2))
    weight = t_value * t_value * n
    head_a, head_b = a[:-1], b[:-1]
    return QuadraticRegion(
        lead=scale * float(b[-1] * b[-1]) - weight * float(head_b @ head_b),
        cross=scale * float(a[-1] * b[-1]) - weight * float(head_a @ head_b),
        constant=scale * float(a[-1] * a[-1]) - weight * float(head_a @ head_a),
    )


def mva_hull(offset, slope, count: int, t_value: float) -> PredictionInterval:
    """Hull of the studentized-centered-residual region for one t threshold.

    When every centered residual of the first n-1 observations is exactly
    zero at every candidate (offset and slope heads all zero), the statistic
    is 0/0 and carries no evidence against any candidate, so the full line is
    returned rather than the empty set the raw algebra would give.
    """
    offset = np.asarray(offset, dtype=float)
    slope = np.asarray(slope, dtype=float)
    a = offset - offset[:-1].mean()
    b = slope - slope[:-1].mean()
    if not a[:-1].any() and not b[:-1].any():
        return PredictionInterval.full_line()
    return mva_region(offset, slope, count, t_value).hull()


def centered_residual_score(residuals) -> float:
    """Last residual centered by the earlier mean, over the centered spread.

    The raw-data route to the same score that ``mva_score`` computes from a
    moment summary: with residuals e_1 ... e_n, returns
    (e_n - mean(e_1..e_{n-1})) / sqrt(sum_{i<n} (e_i - mean)^2), keeping the
    sign.  Zero spread among the earlier residuals is a degenerate fit.
    """
    residuals = np.asarray(residuals, dtype=float).ravel()
    if residuals.size < 3:
        raise ValueError("need at least three residuals")
    head = residuals[:-1]
    head_mean = head.mean()
    spread = float(((head - head_mean) ** 2).sum())
    if spread == 0.0:
        raise DegenerateFitError("earlier residuals have zero spread")
    return float((residuals[-1] - head_mean) / sqrt(spread))


def mva_predict(
    history: History,
    x_new,
    levels,
    ridge: float = 0.0,
    schedule: FeatureSchedule | None = None,
) -> list[PredictionInterval]:
    """Prediction intervals from the studentized last centered ridge residual.

    Valid whenever the noise is Gaussian, whatever the explanatory vectors
    are; informative from step 3 on.  Residuals come from one ridge fit of
    all n rows, so the candidate response enters every residual and the
    survivor set is a quadratic region classified exactly (no search).
    """
    levels = validate_levels(levels)
    n = len(history) + 1
    if n < 3:
        return _full_lines(len(levels))
    design = _augmented_design(history, x_new, schedule)
    decomposition = residual_decomposition(RidgeProjector(design, ridge), history.responses)
    dist = StudentT(n - 2)
    return [
        mva_hull(
            decomposition.offset,
            decomposition.slope,
            n,
            dist.upper_quantile(eps / 2.0),
        )
        for eps in levels
    ]


@dataclass(frozen=True, eq=False)
class MvaSummary:
    """Raw cross-moments of a history, feature-truncation deferred to scoring."""

    count: int
    feature_sum: np.ndarray
    response_sum: float
    feature_gram: np.ndarray
    cross: np.ndarray
    square_sum: float

    @classmethod
    def from_history(cls, history: History) -> "MvaSummary":
        x = history.features
        y = history.responses
        return cls(
            count=len(history),
            feature_sum=x.sum(axis=0),
            response_sum=float(y.sum()),
            feature_gram=x.T @ x,
            cross=x.T @ y,
            square_sum=float(y @ y),
        )

    def updated(self, observation: Observation) -> "MvaSummary":
        x = observation.explanatory
        y = observation.response
        return MvaSummary(
            count=self.count + 1,
            feature_sum=self.feature_sum + x,
            response_sum=self.response_sum + y,
            feature_gram=self.feature_gram + np.outer(x, x),
            cross=self.cross + y * x,
            square_sum=self.square_sum + y * y,
        )


def mva_score(
    summary: MvaSummary,
    observation: Observation,
    ridge: float = 0.0,
    active_count: int | None = None,
) -> float:
    """Last centered ridge residual over the root of the centered energy.

    The score is signed: (e_n - mean of earlier residuals) divided by the
    root of the summed squared deviations of the earlier residuals, all
    computed from moments.  ``active_count`` truncates the regression to the
    first features, mirroring a feature schedule.
    """
    k = summary.feature_sum.size
    active = k if active_count is None else int(active_count)
    if not 0 <= active <= k:
        raise ValueError(f"active_count must lie in [0, {k}]")
    x = observation.explanatory[:active]
    head = summary.count
    n = head + 1
    if n < 3:
        raise ValueError("need at least three observations in total")

    cols = active + 1
    gram = np.empty((cols, cols))
    gram[0, 0] = head
    gram[0, 1:] = summary.feature_sum[:active]
    gram[1:, 0] = summary.feature_sum[:active]
    gram[1:, 1:] = summary.feature_gram[:active, :active]
    head_moment = np.concatenate([[summary.response_sum], summary.cross[:active]])

    new_row = np.concatenate([[1.0], x])
    full_gram = gram + np.outer(new_row, new_row)
    full_moment = head_moment + observation.response * new_row
    if ridge > 0.0:
        full_gram = full_gram + ridge * np.eye(cols)
    else:
        spectrum = np.linalg.svd(full_gram, compute_uv=False)
        if spectrum[0] == 0.0 or spectrum[-1] / spectrum[0] < RCOND_FLOOR:
            raise RankDeficiencyError("design is rank deficient; use a positive ridge")
    coefficients = cho_solve(cho_factor(full_gram, lower=True), full_moment)

    last_residual = observation.response - float(new_row @ coefficients)
    head_row_sum = np.concatenate([[head], summary.feature_sum[:active]])
    head_residual_sum = summary.response_sum - float(head_row_sum @ coefficients)
    head_mean = head_residual_sum / head
    head_energy = (
        summary.square_sum
        - 2.0 * float(head_moment @ coefficients)
        + float(coefficients @ gram @ coefficients)
    )
    centered_energy = head_energy - head * head_mean * head_mean
    if centered_energy <= 0.0:
        if centered_energy < -1e-8 * max(summary.square_sum, 1.0):
            raise SummaryMismatchError("inconsistent summary moments")
        raise DegenerateFitError("earlier residuals have zero spread")
    return (last_residual - head_mean) / sqrt(centered_energy)


# ---------------------------------------------------------------------------
# Order-statistic predictor (no model, responses only)
# ---------------------------------------------------------------------------


def wilks_predict(responses, depth: int) -> PredictionInterval:
    """Interval between the depth-th smallest and depth-th largest response.

    With n - 1 past responses and order-statistic depth r, the interval
    misses the next response of an exchangeable continuous sequence with
    probability exactly 2r / n.  When the history is too short for the
    requested depth (n <= 2r) no finite statement is possible and the full
    line is returned.
    """
    values = np.asarray(responses, dtype=float).ravel()
    if depth < 1:
        raise ValueError("depth must be a positive integer")
    n = values.size + 1
    if n <= 2 * depth:
        return PredictionInterval.full_line()
    ordered = np.sort(values)
    return PredictionInterval(ordered[depth - 1], ordered[n - depth - 1])


def wilks_level(step: int, depth: int) -> float:
    """Significance level achieved by ``wilks_predict`` at the given step."""
    return 2.0 * depth / step


# ---------------------------------------------------------------------------
# Monte-Carlo predictor under the Gaussian response model ("IID-Gauss")
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloConfig:
    """Knobs of the Monte-Carlo survivor search.

    ``samples`` conditional draws give the p-value estimate
    (1 + #{draws at least as strange}) / (samples + 1); the survivor set
    boundary is bracketed by geometric expansion from the least-squares
    point prediction out to ``search_bound`` and then pinned down with
    ``bisection_steps`` halvings per endpoint.
    """

    samples: int = 999
    seed: object = 0
    search_bound: float = 1e6
    bisection_steps: int = 40


def _mc_machinery(
    history: History,
    x: np.ndarray,
    ridge: float,
    schedule: FeatureSchedule | None,
    mc: MonteCarloConfig,
):
    """Common-draw p-value machinery shared by prediction and verification.

    Returns ``(pvalue, center, scale)`` where ``pvalue`` maps a candidate
    response to its Monte-Carlo p-value, ``center`` is the least-squares
    point prediction and ``scale`` a step size matched to the conditional
    spread; returns None while the conditional law is degenerate (fewer
    than K + 2 total observations, or no samples requested).
    """
    k = history.feature_count
    n = len(history) + 1
    if n < k + 2 or mc.samples < 1:
        return None
    x = _new_row(x, k)

    design = np.empty((n, k + 1))
    design[: n - 1] = history.design_matrix
    design[-1, 0] = 1.0
    design[-1, 1:] = x
    gram = design.T @ design
    spectrum = np.linalg.svd(gram, compute_uv=False)
    if spectrum[0] == 0.0 or spectrum[-1] / spectrum[0] < RCOND_FLOOR:
        raise RankDeficiencyError("augmented design is rank deficient")
    factor = cho_factor(gram, lower=True)

    responses = history.responses
    fixed_moment = design[: n - 1].T @ responses
    new_row = design[-1]
    fixed_solution = cho_solve(factor, fixed_moment)
    unit_solution = cho_solve(factor, new_row)
    fixed_fit = design @ fixed_solution
    unit_fit = design @ unit_solution
    # Residual energy of the summary as a quadratic in the candidate y.
    energy_const = float(responses @ responses) - float(fixed_moment @ fixed_solution)
    energy_lin = -(float(fixed_moment @ unit_solution) + float(new_row @ fixed_solution))
    energy_quad = 1.0 - float(new_row @ unit_solution)

    # The draws must depend on the history only through its bag of rows
    # (permuting past observations must not change the output), so drawn
    # orderings index the rows through a canonical lexicographic order.
    canonical = np.lexsort(design.T[::-1])
    rng = np.random.default_rng(mc.seed)
    orderings = canonical[random_orderings(rng, mc.samples, n)]
    directions = complement_directions(rng, design, orderings, factor)

    active = schedule.active_features(n) if schedule is not None else k
    if active > k:
        raise ValueError(f"schedule asks for {active} features but only {k} exist")
    cols = active + 1
    truncated = design[:, :cols]
    trunc_gram = truncated.T @ truncated
    if ridge > 0.0:
        trunc_gram = trunc_gram + ridge * np.eye(cols)
    else:
        spectrum = np.linalg.svd(trunc_gram, compute_uv=False)
        if spectrum[0] == 0.0 or spectrum[-1] / spectrum[0] < RCOND_FLOOR:
            raise RankDeficiencyError("truncated design is rank deficient")
    trunc_factor = cho_factor(trunc_gram, lower=True)

    rows = truncated[orderings]
    last_rows = rows[:, -1, :]

    def last_residual(values: np.ndarray) -> np.ndarray:
        moments = np.einsum("mnk,mn->mk", rows, values)
        coef = cho_solve(trunc_factor, moments.T).T
        return values[:, -1] - np.einsum("mk,mk->m", last_rows, coef)

    draw_const = last_residual(fixed_fit[orderings])
    draw_lin = last_residual(unit_fit[orderings])
    draw_dir = last_residual(directions)

    observed = residual_decomposition(RidgeProjector(truncated, ridge), responses)
    observed_const = float(observed.offset[-1])
    observed_lin = float(observed.slope[-1])

    denominator = mc.samples + 1

    def pvalue(y: float) -> float:
        radius = sqrt(max(energy_const + y * (energy_lin + y * energy_quad), 0.0))
        scores = np.abs(draw_const + y * draw_lin + radius * draw_dir)
        target = abs(observed_const + y * observed_lin)
        return (1 + int(np.count_nonzero(scores >= target))) / denominator

    solution, *_ = np.linalg.lstsq(history.design_matrix, responses, rcond=None)
    center = float(new_row @ solution)
    center_radius = sqrt(
        max(energy_const + center * (energy_lin + center * energy_quad), 0.0)
    )
    scale = max(
        center_radius / sqrt(max(n - k - 1, 1)),
        1e-3 * (1.0 + abs(center)),
        1e-6,
    )
    return pvalue, center, scale


def iidgauss_predict(
    history: History,
    x_new,
    levels,
    ridge: float = 0.0,
    schedule: FeatureSchedule | None = None,
    mc: MonteCarloConfig | None = None,
) -> list[PredictionInterval]:
    """Monte-Carlo prediction intervals under the Gaussian response model.

    For each candidate response, appending it to the history fixes the
    sufficient summary (feature bag, response moments); the candidate's
    p-value is the chance that a fresh sequence drawn from the conditional
    law given that summary has a last ridge residual at least as large as
    the observed one.  The chance is estimated by ``mc.samples`` common
    draws: the bag ordering and sphere directions are drawn once per call
    and reused for every candidate, so each draw's score is an explicit
    affine function of the candidate plus a radius term, and one p-value
    evaluation costs O(samples).

    The reported interval brackets the estimated survivor set and is an
    approximation on two counts (Monte-Carlo noise, and a bisection search
    that assumes the survivor set is an interval around the point
    prediction).  Needs at least K + 2 total observations, otherwise the
    conditional law is degenerate and the full line is returned.
    """
    levels = validate_levels(levels)
    mc = mc if mc is not None else MonteCarloConfig()
    machinery = _mc_machinery(history, x_new, ridge, schedule, mc)
    if machinery is None:
        return _full_lines(len(levels))
    pvalue, center, scale = machinery
    center_pvalue = pvalue(center)

    out: list[PredictionInterval] = []
    for eps in levels:
        if center_pvalue <= eps:
            out.append(PredictionInterval.empty())
            continue
        lower = _mc_boundary(pvalue, center, eps, -1.0, mc, scale)
        upper = _mc_boundary(pvalue, center, eps, +1.0, mc, scale)
        out.append(PredictionInterval(lower, upper))
    # Bisection noise can break nesting by a hair; widen outward to restore it.
    for j in range(1, len(out)):
        if out[j].is_empty:
            continue
        prev = out[j - 1]
        if prev.is_empty:
            continue
        out[j] = PredictionInterval(
            min(out[j].lower, prev.lower), max(out[j].upper, prev.upper)
        )
    return out


def iidgauss_pvalue(
    history: History,
    observation: Observation,
    ridge: float = 0.0,
    schedule: FeatureSchedule | None = None,
    mc: MonteCarloConfig | None = None,
) -> float:
    """Monte-Carlo p-value of a realized observation against its history.

    Uses the same common draws as ``iidgauss_predict`` with the same
    configuration, so the realized p-value and the reported intervals agree.
    While the conditional law is degenerate every observation is maximally
    typical and the p-value is one.
    """
    mc = mc if mc is not None else MonteCarloConfig()
    machinery = _mc_machinery(
        history, observation.explanatory, ridge, schedule, mc
    )
    if machinery is None:
        return 1.0
    pvalue, _, _ = machinery
    return pvalue(float(observation.response))


def _mc_boundary(
    pvalue, center: float, epsilon: float, direction: float, mc: MonteCarloConfig, scale: float
) -> float:
    """One endpoint of {y : pvalue(y) > epsilon}, searched outward from center."""
    inside = center
    step = scale
    while True:
        candidate = center + direction * step
        if abs(candidate) > mc.search_bound:
            return direction * inf
        if pvalue(candidate) <= epsilon:
            outside = candidate
            break
        inside = candidate
        step *= 2.0
    for _ in range(mc.bisection_steps):
        middle = 0.5 * (inside + outside)
        if pvalue(middle) > epsilon:
            inside = middle
        else:
            outside = middle
    return 0.5 * (inside + outside)
