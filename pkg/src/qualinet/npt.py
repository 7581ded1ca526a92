"""Node probability table synthesis for ranked and indicator nodes.

Ranked nodes carry an ordered k-state scale mapped onto equal sub-intervals
of [0, 1].  Conditional columns are produced by discretizing a doubly
truncated Normal whose mean is a weighted mean of the parent levels;
negative influences enter the mean as 1 - x instead of x.  Indicator
columns come either from one truncated Normal per parent state
(partitioned) or from a linear mean in the parent level (arithmetic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "ArithmeticIndicator",
    "NptError",
    "ParentLink",
    "PartitionedIndicator",
    "RankedScale",
    "TNormalSpec",
    "build_indicator_npt",
    "build_ranked_npt",
    "default_state_labels",
    "discretize_tnormal",
    "effective_level",
    "std_normal_cdf",
]

_SQRT2 = math.sqrt(2.0)

_NAMED_LABELS = {
    2: ("low", "high"),
    3: ("low", "medium", "high"),
    5: ("very_low", "low", "medium", "high", "very_high"),
}


class NptError(ValueError):
    """Raised for invalid distribution or table specifications."""


def default_state_labels(state_count: int) -> tuple[str, ...]:
    """Ordered state labels for a ranked scale, worst to best."""
    if state_count < 2:
        raise NptError(f"ranked scale needs at least 2 states, got {state_count}")
    named = _NAMED_LABELS.get(state_count)
    if named is not None:
        return named
    return tuple(f"level_{i + 1}" for i in range(state_count))


@dataclass(frozen=True)
class RankedScale:
    """Equal-width partition of [0, 1] into an ordered state scale."""

    state_count: int
    labels: tuple[str, ...]

    @classmethod
    def of(cls, state_count: int, labels: Sequence[str] | None = None) -> "RankedScale":
        if labels is None:
            labels = default_state_labels(state_count)
        labels = tuple(labels)
        if len(labels) != state_count:
            raise NptError(
                f"{state_count} states but {len(labels)} labels: {labels!r}"
            )
        return cls(state_count, labels)

    def boundaries(self) -> tuple[float, ...]:
        k = self.state_count
        return tuple(i / k for i in range(k + 1))

    def midpoint(self, state: int) -> float:
        if not 0 <= state < self.state_count:
            raise NptError(f"state index {state} out of range for k={self.state_count}")
        return (2 * state + 1) / (2 * self.state_count)

    def midpoints(self) -> tuple[float, ...]:
        return tuple(self.midpoint(i) for i in range(self.state_count))


@dataclass(frozen=True)
class TNormalSpec:
    """Normal distribution doubly truncated to a finite support."""

    mean: float
    variance: float
    support: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        if not math.isfinite(self.mean):
            raise NptError(f"non-finite mean {self.mean!r}")
        if not (self.variance > 0.0 and math.isfinite(self.variance)):
            raise NptError(f"variance must be positive and finite, got {self.variance!r}")
        lo, hi = self.support
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise NptError(f"invalid support {self.support!r}")


@dataclass(frozen=True)
class ParentLink:
    """Weight and direction of one parent in a weighted-mean aggregation."""

    weight: float = 1.0
    negative: bool = False

    def __post_init__(self) -> None:
        if not (self.weight > 0.0 and math.isfinite(self.weight)):
            raise NptError(f"weight must be positive and finite, got {self.weight!r}")


@dataclass(frozen=True)
class PartitionedIndicator:
    """One (mean, variance) pair per parent state, worst to best."""

    distributions: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class ArithmeticIndicator:
    """Linear indicator mean: intercept + slope * parent level."""

    intercept: float
    slope: float
    variance: float


def std_normal_cdf(x: float) -> float:
    """Standard Normal CDF, accurate across the full double range."""
    # erfc keeps relative accuracy in the far tails where 1 - erf(x) cancels.
    return 0.5 * math.erfc(-x / _SQRT2)


def discretize_tnormal(spec: TNormalSpec, boundaries: Sequence[float]) -> list[float]:
    """Probability mass of a truncated Normal per interval of its support.

    ``boundaries`` must partition the support: len >= 2, strictly increasing,
    first == support lo, last == support hi.  The result is renormalized to
    sum exactly 1.  When the mean sits so far outside the support that every
    interval mass underflows, the whole mass is placed on the interval
    nearest to the mean.
    """
    bounds = [float(b) for b in boundaries]
    if len(bounds) < 2:
        raise NptError("need at least 2 interval boundaries")
    for a, b in zip(bounds, bounds[1:]):
        if not a < b:
            raise NptError(f"interval boundaries not strictly increasing: {bounds!r}")
    lo, hi = spec.support
    if abs(bounds[0] - lo) > 1e-9 or abs(bounds[-1] - hi) > 1e-9:
        raise NptError(
            f"boundaries [{bounds[0]}, {bounds[-1]}] do not span support [{lo}, {hi}]"
        )

    sigma = math.sqrt(spec.variance)
    raw = []
    for a, b in zip(bounds, bounds[1:]):
        mass = std_normal_cdf((b - spec.mean) / sigma) - std_normal_cdf((a - spec.mean) / sigma)
        raw.append(max(mass, 0.0))
    total = math.fsum(raw)
    if total <= 0.0:
        # Degenerate normalizer: mean many sigmas outside the support.
        target = min(max(spec.mean, lo), hi)
        index = _containing_interval(bounds, target)
        return [1.0 if i == index else 0.0 for i in range(len(bounds) - 1)]
    return [p / total for p in raw]


def _containing_interval(bounds: list[float], value: float) -> int:
    """Index of the half-open interval [a, b) containing value; last is closed."""
    for i in range(len(bounds) - 2):
        if bounds[i] <= value < bounds[i + 1]:
            return i
    return len(bounds) - 2


def effective_level(
    states: Sequence[int],
    links: Sequence[ParentLink],
    scales: Sequence[RankedScale],
) -> float:
    """Weighted mean of parent levels in [0, 1], inverting negative links."""
    if not links:
        raise NptError("weighted mean needs at least one parent")
    if not len(states) == len(links) == len(scales):
        raise NptError(
            f"mismatched lengths: {len(states)} states, {len(links)} links, {len(scales)} scales"
        )
    num = 0.0
    den = 0.0
    for state, link, scale in zip(states, links, scales):
        x = scale.midpoint(state)
        if link.negative:
            x = 1.0 - x
        num += link.weight * x
        den += link.weight
    return num / den


def _parent_combinations(cardinalities: Sequence[int]):
    """All parent state combinations, row-major, last parent fastest."""
    combo = [0] * len(cardinalities)
    total = 1
    for k in cardinalities:
        total *= k
    for _ in range(total):
        yield tuple(combo)
        for axis in range(len(cardinalities) - 1, -1, -1):
            combo[axis] += 1
            if combo[axis] < cardinalities[axis]:
                break
            combo[axis] = 0


def build_ranked_npt(
    parent_scales: Sequence[RankedScale],
    links: Sequence[ParentLink],
    variance: float,
    child_scale: RankedScale,
) -> list[list[float]]:
    """Conditional columns of a ranked child, one per parent combination.

    Columns are ordered row-major over the parent states with the last
    parent varying fastest; ``columns[combo][state]`` is the probability of
    the child state given that combination.
    """
    if len(parent_scales) != len(links):
        raise NptError(f"{len(parent_scales)} parents but {len(links)} links")
    bounds = child_scale.boundaries()
    columns = []
    for combo in _parent_combinations([s.state_count for s in parent_scales]):
        mu = effective_level(combo, links, parent_scales)
        columns.append(discretize_tnormal(TNormalSpec(mu, variance), bounds))
    return columns


def build_indicator_npt(
    expression: PartitionedIndicator | ArithmeticIndicator,
    parent_scale: RankedScale,
    boundaries: Sequence[float],
) -> list[list[float]]:
    """Conditional columns of an indicator node, one per parent state.

    The indicator distribution is truncated to [first boundary, last
    boundary] and discretized into the given intervals.
    """
    bounds = [float(b) for b in boundaries]
    if len(bounds) < 2:
        raise NptError("indicator needs at least 2 interval boundaries")
    support = (bounds[0], bounds[-1])
    columns = []
    if isinstance(expression, PartitionedIndicator):
        if len(expression.distributions) != parent_scale.state_count:
            raise NptError(
                f"partitioned expression has {len(expression.distributions)} entries "
                f"for {parent_scale.state_count} parent states"
            )
        for mean, variance in expression.distributions:
            columns.append(discretize_tnormal(TNormalSpec(mean, variance, support), bounds))
    elif isinstance(expression, ArithmeticIndicator):
        for state in range(parent_scale.state_count):
            mu = expression.intercept + expression.slope * parent_scale.midpoint(state)
            columns.append(discretize_tnormal(TNormalSpec(mu, expression.variance, support), bounds))
    else:
        raise NptError(f"unknown indicator expression {expression!r}")
    return columns
