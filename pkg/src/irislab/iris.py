"""Privacy-preserving retrieval over an unmodified Chord network.

Instead of asking each hop for the target, the requester asks for an
identifier interpolated between the queried node and a random reference point
that precedes the target.  The first hop is chosen at least ``delta``
addresses before the target when the routing table allows it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .chord import (
    Network,
    QueryTrace,
    RoutingTable,
    Step,
    fetch,
    lookup_step,
    routing_table,
)
from .errors import ParameterError, RoutingAttackError
from .ring import RingParams, cw_distance, in_cw_interval, lerp_toward, offset_back

# (queried node, target, rng) -> reference point on [queried, target)
ReferencePicker = Callable[[int, int, np.random.Generator], int]
# iteration index -> alpha for that iteration
AlphaSchedule = Callable[[int], float]


@dataclass(frozen=True)
class IrisParams:
    alpha: float
    delta: int
    bound_check_enabled: bool = False
    gamma: Optional[float] = None
    f: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.delta < 0:
            raise ParameterError(f"delta must be non-negative, got {self.delta}")
        if self.bound_check_enabled and self.gamma is None and self.f is None:
            raise ParameterError("bound check needs either gamma or f")

    def validate(self, ring: RingParams) -> None:
        if self.delta > ring.size - 1:
            raise ParameterError(f"delta {self.delta} exceeds 2^{ring.m} - 1")


def delta_from_fraction(frac: float, ring: RingParams) -> int:
    """Absolute delta for a fraction of the address space, truncated and capped at 2^m - 1."""
    if not 0.0 <= frac <= 1.0:
        raise ParameterError(f"delta fraction must lie in [0, 1], got {frac}")
    return min(int(frac * ring.size), ring.size - 1)


def select_start_node(rt: RoutingTable, target: int, delta: int, ring: RingParams) -> int:
    """First node to query: the entry closest after ``target - delta`` that precedes the target.

    Falls back to the entry most closely preceding ``target - delta``.
    """
    span = cw_distance(rt.owner, target, ring)
    s_pos = max(span - delta, 0)
    after_s = None
    before_s = None
    for e in rt.entries:
        p = cw_distance(rt.owner, e, ring)
        if p == 0:
            continue
        if s_pos <= p < span:
            if after_s is None or p < after_s[0]:
                after_s = (p, e)
        elif p < s_pos:
            if before_s is None or p > before_s[0]:
                before_s = (p, e)
    if after_s is not None:
        return after_s[1]
    if before_s is not None:
        return before_s[1]
    return rt.successor


def uniform_reference(node: int, target: int, rng: np.random.Generator, ring: RingParams) -> int:
    span = cw_distance(node, target, ring)
    return (node + int(rng.integers(0, span))) % ring.size


def bound_check(d_x: int, d_r: float, f: float = 0.0, gamma: Optional[float] = None) -> bool:
    """Accept a relayed node as responsible only if it is at least ``T = gamma * d_r`` away.

    ``gamma`` defaults to ``1/f``; with ``f == 0`` and no ``gamma`` the check
    is vacuous.
    """
    if gamma is None:
        if f == 0:
            return True
        if not 0.0 < f <= 1.0:
            raise ParameterError(f"f must lie in (0, 1], got {f}")
        gamma = 1.0 / f
    if d_r <= 0:
        raise ParameterError("d_r must be positive")
    return d_x >= gamma * d_r


def estimate_node_range(net: Network, requester: int) -> int:
    """The requester's own predecessor gap, used as its estimate of one node's range."""
    rt = routing_table(net, requester)
    return cw_distance(rt.predecessor, requester, net.ring) or net.ring.size


def iris_retrieve(
    net: Network,
    requester: int,
    target: int,
    params: IrisParams,
    rng: Optional[np.random.Generator] = None,
    pick_reference: Optional[ReferencePicker] = None,
    alpha_schedule: Optional[AlphaSchedule] = None,
) -> tuple[Any, QueryTrace]:
    """Locate and fetch ``target`` without ever naming it to an intermediate node.

    ``pick_reference`` overrides the uniform reference draw (used to replay
    fixed examples); ``alpha_schedule`` supplies a per-iteration alpha.
    """
    ring = net.ring
    ring.check(target)
    params.validate(ring)
    net.require_member(requester)
    if rng is None:
        rng = np.random.default_rng()
    trace = QueryTrace(requester=requester, target=target, delta=params.delta)

    rt = routing_table(net, requester)
    if in_cw_interval(target, rt.predecessor, requester, ring):
        trace.terminal = requester
        return fetch(net, requester, target), trace
    if in_cw_interval(target, requester, rt.successor, ring):
        trace.terminal = rt.successor
        return fetch(net, rt.successor, target), trace

    d_r = None
    if params.bound_check_enabled:
        d_r = estimate_node_range(net, requester)

    current = select_start_node(rt, target, params.delta, ring)
    i = 0
    while True:
        dist = cw_distance(current, target, ring)
        alpha = params.alpha if alpha_schedule is None else alpha_schedule(i)
        if not 0.0 <= alpha < 1.0:
            raise ParameterError(f"alpha schedule returned {alpha} at iteration {i}")
        if pick_reference is None:
            ref = uniform_reference(current, target, rng, ring)
        else:
            ref = pick_reference(current, target, rng)
        qid = lerp_toward(current, ref, alpha, ring)
        if qid == current:
            # a node owns its own id, so asking for it would stall the walk
            qid = (current + 1) % ring.size
        res = lookup_step(net, current, qid)
        trace.steps.append(Step(current, ref, qid, res.next, dist, alpha))
        d_next = cw_distance(current, res.next, ring)
        if d_next >= dist:
            if d_r is not None and not bound_check(d_next, d_r, params.f or 0.0, params.gamma):
                raise RoutingAttackError(i, current, res.next, d_next, _threshold(params, d_r))
            current = res.next
            break
        current = res.next
        i += 1

    trace.terminal = current
    return fetch(net, current, target), trace


def _threshold(params: IrisParams, d_r: float) -> float:
    gamma = params.gamma if params.gamma is not None else 1.0 / params.f
    return gamma * d_r


def predicted_distance(d0: float, alpha: float, n: int) -> float:
    """Expected distance to the target after ``n`` iterations."""
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"alpha must lie in [0, 1), got {alpha}")
    if n < 0:
        raise ParameterError("n must be non-negative")
    return d0 * ((alpha + 1.0) / 2.0) ** n


def predicted_hops(d0: float, nu: float, alpha: float) -> float:
    """Expected iterations until the distance shrinks to one node gap ``nu``."""
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"alpha must lie in [0, 1), got {alpha}")
    if nu <= 0:
        raise ParameterError("nu must be positive")
    if d0 < nu:
        return 0.0
    return (math.log(d0) - math.log(nu)) / (math.log(2.0) - math.log(alpha + 1.0))
