"""What queried nodes can infer about a query's target.

Every queried node is treated as an observer that knows alpha and delta.
Colluders additionally pool their observations and attribute them to one
search, so a later colluder inherits the upper bound of the first colluder
whose bound was correct.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

from .chord import QueryTrace
from .errors import AnalysisError, ParameterError
from .iris import IrisParams
from .ring import RingParams, cw_distance, lerp_toward

KINDS = ("eq_eq", "le_eq", "eq_le", "le_le")


@dataclass(frozen=True)
class PrivacyObservation:
    node: int
    is_colluder: bool
    upper_bound: int
    prior: int
    posterior: int
    correct_estimate: bool

    @property
    def ratio(self) -> float:
        return self.posterior / self.prior


@dataclass(frozen=True)
class ColluderModel:
    colluders: frozenset[int] = frozenset()
    link_queries: bool = True


@dataclass
class PrivacyReport:
    observations: list[PrivacyObservation] = field(default_factory=list)
    min_ratio: Optional[float] = None
    alpha: float = 0.0
    delta: int = 0

    @property
    def colluded(self) -> int:
        """How many queried nodes were colluders."""
        return sum(o.is_colluder for o in self.observations)


def _check_trace(trace: QueryTrace, params: IrisParams, ring: RingParams) -> None:
    if trace.delta is not None and trace.delta != params.delta:
        raise AnalysisError(f"trace ran with delta={trace.delta}, analysis asked for {params.delta}")
    for i, s in enumerate(trace.steps):
        if s.alpha is None:
            raise AnalysisError("vanilla Chord traces carry no reference points to analyze")
        if s.alpha != params.alpha:
            raise AnalysisError(f"step {i} used alpha={s.alpha}, analysis asked for {params.alpha}")
        expected = lerp_toward(s.queried, s.reference, s.alpha, ring)
        if expected == s.queried:
            expected = (s.queried + 1) % ring.size
        if expected != s.queried_id:
            raise AnalysisError(f"step {i}: queried id {s.queried_id} does not follow from its reference point")


def analyze_trace(
    trace: QueryTrace,
    params: IrisParams,
    model: ColluderModel,
    ring: RingParams,
    correct_only: bool = True,
) -> PrivacyReport:
    """Prior and posterior target ranges seen by every queried node.

    With ``correct_only`` the colluders know which of their bounds are right
    (the worst case for the requester), so only a correct bound is shared,
    and ``min_ratio`` is taken over correct estimates only.
    """
    _check_trace(trace, params, ring)
    delta = params.delta
    if delta == 0:
        raise AnalysisError("delta = 0 leaves every observer with an empty prior range")
    size = ring.size
    anchor: Optional[tuple[int, int]] = None  # (node, upper bound) of the shared colluder bound
    observations = []
    for s in trace.steps:
        colluder = s.queried in model.colluders
        own_ub = (s.queried + delta) % size
        if colluder and model.link_queries and anchor is not None:
            first, ub = anchor
            prior = delta - cw_distance(first, s.queried, ring)
        else:
            ub = own_ub
            prior = delta
        correct = cw_distance(s.queried, trace.target, ring) <= cw_distance(s.queried, ub, ring)
        if prior <= 0:
            # the walk has passed the shared bound, which therefore was wrong
            prior, correct = 1, False
        posterior = max(min(cw_distance(s.queried_id, ub, ring), prior), 1)
        observations.append(PrivacyObservation(s.queried, colluder, ub, prior, posterior, correct))
        if colluder and model.link_queries and anchor is None and (correct or not correct_only):
            anchor = (s.queried, ub)
    ratios = [o.ratio for o in observations if o.correct_estimate or not correct_only]
    return PrivacyReport(
        observations=observations,
        min_ratio=min(ratios) if ratios else None,
        alpha=params.alpha,
        delta=delta,
    )


def min_privacy_ratio(reports: Iterable[PrivacyReport]) -> float:
    """Smallest ratio over a collection of reports; reports without ratios are skipped."""
    reports = list(reports)
    if not reports:
        raise ParameterError("no reports to aggregate")
    ratios = [r.min_ratio for r in reports if r.min_ratio is not None]
    if not ratios:
        raise ParameterError("none of the reports contains a usable observation")
    return min(ratios)


def _check_kind(kind: str) -> tuple[str, str]:
    if kind not in KINDS:
        raise ParameterError(f"kind must be one of {KINDS}, got {kind!r}")
    event, cond = kind.split("_")
    return event, cond


def analytic_probability(kind: str, o: int, x: int, delta: int) -> float:
    """Attacker's view of the target offset ``O`` given the reference offset ``R``.

    ``kind`` is ``<event>_<condition>``: ``eq_eq`` is P(O=o | R=x), ``le_eq``
    is P(O<=o | R=x), ``eq_le`` is P(O=o | R<=x), ``le_le`` is P(O<=o | R<=x).
    Offsets are measured from the queried node, whose bound sits at ``delta``.
    """
    event, cond = _check_kind(kind)
    if not 0 <= x < o <= delta:
        raise ParameterError(f"need 0 <= x < o <= delta, got x={x}, o={o}, delta={delta}")
    if cond == "eq":
        return 1.0 / (delta - x) if event == "eq" else (o - x) / (delta - x)
    if event == "eq":
        return 2.0 / (2 * delta - x - 1)
    return (2 * o - x - 1) / (2 * delta - x - 1)


class Estimate(NamedTuple):
    """Frequency estimate; ``value`` is None when no sample meets the condition."""

    value: Optional[float]
    hits: int
    conditioned: int


def empirical_probability(samples: Sequence[tuple[int, int]], kind: str, o: int, x: int) -> Estimate:
    """Relative frequency of the event among samples ``(target_offset, r_offset)`` meeting the condition."""
    event, cond = _check_kind(kind)
    conditioned = hits = 0
    for t, r in samples:
        if (r == x) if cond == "eq" else (r <= x):
            conditioned += 1
            if (t == o) if event == "eq" else (t <= o):
                hits += 1
    return Estimate(hits / conditioned if conditioned else None, hits, conditioned)


def quantize_offsets(target_offset: int, r_offset: int, delta: int, grid: int = 100) -> tuple[int, int]:
    """Map raw offsets onto a ``grid``-cell frame where the bound sits at ``grid``.

    Targets land in ``1..grid`` (rounded up) and reference points in
    ``0..grid-1`` (rounded down), matching ``0 <= R < O <= delta``.
    """
    if delta <= 0:
        raise ParameterError("delta must be positive")
    t = min(max(math.ceil(target_offset * grid / delta), 1), grid)
    r = min(r_offset * grid // delta, grid - 1)
    return t, r
