"""Chord network model: placement, routing tables, lookups, store/retrieve.

Routing is adversary-agnostic.  The adversary set is carried on the network
so that the privacy analysis can tell which queried nodes collude.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import CapacityError, ParameterError, SetupError, StateError
from .ring import RingParams, cw_distance, in_cw_interval

NETWORK_FILE_MAGIC = "IRISLAB-NETWORK"
NETWORK_FILE_VERSION = 1


@dataclass(frozen=True)
class RoutingTable:
    owner: int
    entries: tuple[int, ...]
    predecessor: int

    @property
    def successor(self) -> int:
        return self.entries[0]


@dataclass(frozen=True)
class LookupResult:
    next: int
    is_final: bool


@dataclass(frozen=True)
class Step:
    """One lookup issued by a requester.

    ``reference`` and ``queried_id`` equal the target for vanilla Chord.
    ``alpha`` is None for vanilla Chord steps.
    """

    queried: int
    reference: int
    queried_id: int
    returned: int
    distance: int
    alpha: Optional[float] = None


@dataclass
class QueryTrace:
    requester: int
    target: int
    steps: list[Step] = field(default_factory=list)
    terminal: Optional[int] = None
    delta: Optional[int] = None

    @property
    def hops(self) -> int:
        return len(self.steps)

    @property
    def queried_nodes(self) -> list[int]:
        return [s.queried for s in self.steps]

    @property
    def queried_ids(self) -> list[int]:
        return [s.queried_id for s in self.steps]


@dataclass
class Network:
    ring: RingParams
    nodes: tuple[int, ...]
    adversaries: frozenset[int] = frozenset()
    seed: Optional[int] = None
    fraction: float = 0.0
    objects: dict[int, dict[int, Any]] = field(default_factory=dict, repr=False)
    _tables: dict[int, RoutingTable] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes))
        if len(set(nodes)) != len(nodes):
            raise ParameterError("node identifiers must be distinct")
        if nodes:
            self.ring.check(nodes[0])
            self.ring.check(nodes[-1])
        if not self.adversaries <= set(nodes):
            raise ParameterError("adversaries must be a subset of nodes")
        self.nodes = nodes
        self._members = set(nodes)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def nu(self) -> float:
        """Mean gap between adjacent nodes."""
        return (self.ring.size - 1) / self.node_count

    @property
    def d_a(self) -> float:
        """Mean gap between adjacent colluding nodes (inf without adversaries)."""
        if not self.adversaries:
            return math.inf
        return (self.ring.size - 1) / len(self.adversaries)

    def __contains__(self, ident: int) -> bool:
        return ident in self._members

    def require_member(self, ident: int) -> None:
        if ident not in self._members:
            raise ParameterError(f"{ident} is not a node of this network")

    def with_adversary_fraction(self, f: float) -> "Network":
        """Same placement, adversaries re-drawn for fraction ``f``.

        Sets drawn from one seed are nested: a smaller fraction selects a
        prefix of the same permutation.
        """
        if self.seed is None:
            raise StateError("network has no seed to derive adversaries from")
        return Network(
            ring=self.ring,
            nodes=self.nodes,
            adversaries=_draw_adversaries(self.nodes, f, self.seed),
            seed=self.seed,
            fraction=f,
        )


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    node_ss, adv_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(node_ss), np.random.default_rng(adv_ss)


def adversary_count(n: int, f: float) -> int:
    return int(math.floor(f * n + 0.5))


def _draw_adversaries(nodes: tuple[int, ...], f: float, seed: int) -> frozenset[int]:
    if not 0.0 <= f <= 1.0:
        raise ParameterError(f"adversary fraction must lie in [0, 1], got {f}")
    _, adv_rng = _streams(seed)
    order = adv_rng.permutation(len(nodes))
    k = adversary_count(len(nodes), f)
    return frozenset(nodes[i] for i in order[:k])


def _sample_distinct(rng: np.random.Generator, size: int, n: int) -> list[int]:
    if n > size // 2:
        return [int(v) for v in rng.permutation(size)[:n]]
    # top up with exactly the deficit each round so the result is the first n distinct draws
    distinct = np.empty(0, dtype=np.uint64)
    while distinct.size < n:
        batch = rng.integers(0, size, size=n - distinct.size, dtype=np.uint64)
        distinct = np.unique(np.concatenate([distinct, batch]))
    return distinct.tolist()


def generate_network(ring: RingParams, n: int, f: float, seed: int) -> Network:
    """Place ``n`` distinct nodes uniformly and mark ``round(f*n)`` of them adversarial."""
    if n < 1:
        raise ParameterError("a network needs at least one node")
    if n > ring.size:
        raise CapacityError(f"{n} nodes do not fit in 2^{ring.m} addresses")
    if not 0.0 <= f <= 1.0:
        raise ParameterError(f"adversary fraction must lie in [0, 1], got {f}")
    node_rng, _ = _streams(seed)
    nodes = tuple(sorted(_sample_distinct(node_rng, ring.size, n)))
    return Network(
        ring=ring,
        nodes=nodes,
        adversaries=_draw_adversaries(nodes, f, seed),
        seed=seed,
        fraction=f,
    )


def responsible_node(net: Network, ident: int) -> int:
    """First node equal to or clockwise after ``ident``."""
    if not net.nodes:
        raise StateError("empty network")
    i = bisect.bisect_left(net.nodes, ident)
    return net.nodes[i] if i < len(net.nodes) else net.nodes[0]


def successor(net: Network, node: int) -> int:
    i = bisect.bisect_right(net.nodes, node)
    return net.nodes[i] if i < len(net.nodes) else net.nodes[0]


def predecessor(net: Network, ident: int) -> int:
    """Nearest node strictly counter-clockwise of ``ident`` (itself on a one-node ring)."""
    i = bisect.bisect_left(net.nodes, ident)
    return net.nodes[i - 1]


def routing_table(net: Network, owner: int) -> RoutingTable:
    rt = net._tables.get(owner)
    if rt is None:
        net.require_member(owner)
        size = net.ring.size
        entries = tuple(responsible_node(net, (owner + (1 << j)) % size) for j in range(net.ring.m))
        rt = RoutingTable(owner=owner, entries=entries, predecessor=predecessor(net, owner))
        net._tables[owner] = rt
    return rt


def closest_preceding(rt: RoutingTable, target: int, ring: RingParams) -> int:
    """Entry farthest from the owner that still lies strictly inside ``(owner, target)``."""
    size = ring.size
    span = (target - rt.owner) % size or size
    # entries are non-decreasing in distance from the owner, so the first hit from the far end is the best
    for e in reversed(rt.entries):
        if 0 < (e - rt.owner) % size < span:
            return e
    return rt.successor


def lookup_step(net: Network, queried: int, target: int) -> LookupResult:
    """What ``queried`` answers when asked about ``target``.

    A node that owns the target names itself; a node whose successor owns it
    names the successor; otherwise it relays to its closest preceding entry.
    """
    rt = routing_table(net, queried)
    ring = net.ring
    if in_cw_interval(target, rt.predecessor, queried, ring):
        return LookupResult(queried, True)
    if in_cw_interval(target, queried, rt.successor, ring):
        return LookupResult(rt.successor, True)
    return LookupResult(closest_preceding(rt, target, ring), False)


def fetch(net: Network, node: int, ident: int) -> Any:
    net.require_member(node)
    return net.objects.get(node, {}).get(ident)


def push(net: Network, node: int, ident: int, data: Any) -> bool:
    net.require_member(node)
    if responsible_node(net, ident) != node:
        return False
    net.objects.setdefault(node, {})[ident] = data
    return True


def _resolve(net: Network, origin: int, target: int) -> tuple[int, QueryTrace]:
    net.require_member(origin)
    trace = QueryTrace(requester=origin, target=target)
    # the origin answers its own routing question locally, without a message
    first = lookup_step(net, origin, target)
    current = first.next
    if first.is_final:
        trace.terminal = current
        return current, trace
    ring = net.ring
    for _ in range(net.node_count):
        res = lookup_step(net, current, target)
        trace.steps.append(
            Step(current, target, target, res.next, cw_distance(current, target, ring))
        )
        if res.is_final:
            trace.terminal = res.next
            return res.next, trace
        current = res.next
    raise StateError("lookup did not converge")  # unreachable on a consistent ring


def chord_retrieve(net: Network, requester: int, target: int) -> tuple[Any, QueryTrace]:
    node, trace = _resolve(net, requester, target)
    return fetch(net, node, target), trace


def chord_store(net: Network, holder: int, target: int, data: Any) -> bool:
    node, _ = _resolve(net, holder, target)
    return push(net, node, target, data)


def save_network(net: Network, path) -> Path:
    """Write a network as a versioned, line-oriented text file."""
    path = Path(path)
    lines = [
        f"{NETWORK_FILE_MAGIC} {NETWORK_FILE_VERSION}",
        f"m {net.ring.m}",
        f"n {net.node_count}",
        f"f {net.fraction!r}",
        f"seed {net.seed if net.seed is not None else '-'}",
        "nodes",
        *map(str, net.nodes),
        f"adversaries {len(net.adversaries)}",
        *map(str, sorted(net.adversaries)),
    ]
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise SetupError(f"cannot write network file {path}: {exc}") from exc
    return path


def load_network(path) -> Network:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise SetupError(f"cannot read network file {path}: {exc}") from exc
    try:
        magic, version = lines[0].split()
        if magic != NETWORK_FILE_MAGIC or int(version) != NETWORK_FILE_VERSION:
            raise SetupError(f"{path}: unsupported network file header {lines[0]!r}")
        header = dict(line.split(" ", 1) for line in lines[1:5])
        n = int(header["n"])
        if lines[5] != "nodes":
            raise SetupError(f"{path}: missing node section")
        nodes = tuple(int(v) for v in lines[6 : 6 + n])
        tag, count = lines[6 + n].split()
        if tag != "adversaries":
            raise SetupError(f"{path}: missing adversary section")
        adversaries = frozenset(int(v) for v in lines[7 + n : 7 + n + int(count)])
        seed = None if header["seed"] == "-" else int(header["seed"])
        return Network(
            ring=RingParams(int(header["m"])),
            nodes=nodes,
            adversaries=adversaries,
            seed=seed,
            fraction=float(header["f"]),
        )
    except (ValueError, KeyError, IndexError) as exc:
        raise SetupError(f"{path}: malformed network file ({exc})") from exc
