import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irislab.chord import (
    Network,
    chord_retrieve,
    chord_store,
    closest_preceding,
    fetch,
    generate_network,
    load_network,
    lookup_step,
    push,
    responsible_node,
    routing_table,
    save_network,
)
from irislab.errors import CapacityError, ParameterError, SetupError, StateError
from irislab.ring import RingParams

from conftest import EXAMPLE_RING, linear_scan_responsible


@st.composite
def small_networks(draw):
    m = draw(st.integers(1, 8))
    size = 1 << m
    nodes = draw(st.sets(st.integers(0, size - 1), min_size=1, max_size=min(32, size)))
    return Network(RingParams(m), tuple(nodes))


def test_generate_full_scale():
    ring = RingParams(23)
    net = generate_network(ring, 1000, 0.0, seed=1)
    assert net.node_count == 1000 and len(set(net.nodes)) == 1000
    assert not net.adversaries
    assert list(net.nodes) == sorted(net.nodes)
    half = generate_network(ring, 1000, 0.5, seed=1)
    assert len(half.adversaries) == 500
    assert half.nodes == net.nodes


def test_generate_single_node_owns_everything():
    net = generate_network(RingParams(6), 1, 0.0, seed=3)
    (only,) = net.nodes
    assert all(responsible_node(net, i) == only for i in range(64))
    assert lookup_step(net, only, 17).next == only


def test_generate_capacity_and_domain():
    with pytest.raises(CapacityError):
        generate_network(RingParams(3), 9, 0.0, seed=0)
    with pytest.raises(ParameterError):
        generate_network(RingParams(3), 4, 1.5, seed=0)
    full = generate_network(RingParams(3), 8, 0.0, seed=0)
    assert full.nodes == tuple(range(8))


def test_generate_is_deterministic_and_nested():
    ring = RingParams(16)
    a = generate_network(ring, 200, 1 / 3, seed=42)
    b = generate_network(ring, 200, 1 / 3, seed=42)
    assert a.nodes == b.nodes and a.adversaries == b.adversaries
    assert generate_network(ring, 200, 1 / 3, seed=43).nodes != a.nodes
    small = a.with_adversary_fraction(1 / 8)
    assert small.adversaries <= a.adversaries
    assert len(small.adversaries) == 25


def test_derived_statistics():
    net = generate_network(RingParams(23), 1000, 0.5, seed=0)
    assert net.nu == pytest.approx((2**23 - 1) / 1000)
    assert net.d_a == pytest.approx((2**23 - 1) / 500)


def test_responsible_node_examples(lookup_example_net, walk_example_net):
    assert responsible_node(lookup_example_net, 62) == 3
    assert responsible_node(lookup_example_net, 42) == 42
    assert responsible_node(walk_example_net, 75) == 76
    with pytest.raises(StateError):
        responsible_node(Network(EXAMPLE_RING, ()), 5)


def test_routing_table_small_ring():
    net = Network(RingParams(3), (0, 1, 3))
    rt = routing_table(net, 0)
    assert rt.entries == (1, 3, 0)
    assert rt.successor == 1 and rt.predecessor == 3
    with pytest.raises(ParameterError):
        routing_table(net, 2)


def test_routing_table_entries_match_definition():
    for seed in range(3):
        net = generate_network(RingParams(23), 1000, 0.0, seed)
        for owner in net.nodes[::50]:
            rt = routing_table(net, owner)
            assert rt.successor == net.nodes[(net.nodes.index(owner) + 1) % 1000]
            for j, e in enumerate(rt.entries, start=1):
                assert e == linear_scan_responsible(net.nodes, (owner + 2 ** (j - 1)) % 2**23)


def test_closest_preceding_examples(lookup_example_net):
    rt = routing_table(lookup_example_net, 8)
    assert closest_preceding(rt, 62, EXAMPLE_RING) == 42
    assert closest_preceding(rt, 9, EXAMPLE_RING) == 14  # nothing lies inside (8, 9)


def test_lookup_step_examples(lookup_example_net):
    r = lookup_step(lookup_example_net, 42, 62)
    assert (r.next, r.is_final) == (61, False)
    r = lookup_step(lookup_example_net, 61, 62)
    assert (r.next, r.is_final) == (3, True)
    r = lookup_step(lookup_example_net, 3, 62)
    assert (r.next, r.is_final) == (3, True)
    with pytest.raises(ParameterError):
        lookup_step(lookup_example_net, 4, 62)


def test_chord_retrieve_worked_lookup(lookup_example_net):
    assert push(lookup_example_net, 3, 62, "payload")
    data, trace = chord_retrieve(lookup_example_net, 8, 62)
    assert trace.queried_nodes + [trace.terminal] == [42, 61, 3]
    assert data == "payload"


def test_chord_retrieve_requester_owns_target(lookup_example_net):
    data, trace = chord_retrieve(lookup_example_net, 42, 40)
    assert trace.hops == 0 and trace.terminal == 42 and data is None


def test_store_and_fetch(lookup_example_net):
    assert fetch(lookup_example_net, 3, 62) is None
    assert chord_store(lookup_example_net, 8, 62, b"d")
    assert fetch(lookup_example_net, 3, 62) == b"d"
    assert chord_retrieve(lookup_example_net, 56, 62)[0] == b"d"
    assert not push(lookup_example_net, 61, 62, b"x")
    assert push(lookup_example_net, 61, 60, b"y") and fetch(lookup_example_net, 61, 60) == b"y"


def test_store_at_own_identifier_needs_no_lookup(lookup_example_net):
    from irislab.chord import _resolve

    node, trace = _resolve(lookup_example_net, 46, 44)
    assert node == 46 and trace.hops == 0
    assert chord_store(lookup_example_net, 46, 44, 1)


def test_exhaustive_small_rings_match_linear_scan():
    for m, n in ((3, 1), (4, 5), (6, 16), (8, 32)):
        ring = RingParams(m)
        for seed in range(3):
            net = generate_network(ring, n, 0.0, seed)
            for req in net.nodes:
                for target in range(ring.size):
                    _, trace = chord_retrieve(net, req, target)
                    assert trace.terminal == linear_scan_responsible(net.nodes, target)
                    assert trace.hops <= n


@settings(max_examples=60, deadline=None)
@given(small_networks(), st.data())
def test_retrieve_terminates_at_responsible(net, data):
    req = data.draw(st.sampled_from(net.nodes))
    target = data.draw(st.integers(0, net.ring.size - 1))
    _, trace = chord_retrieve(net, req, target)
    assert trace.terminal == linear_scan_responsible(net.nodes, target)
    dists = [s.distance for s in trace.steps]
    assert all(a > b for a, b in zip(dists, dists[1:]))


def test_hop_count_is_logarithmic():
    ring = RingParams(23)
    hops = []
    for seed in range(50):
        net = generate_network(ring, 1000, 0.0, seed)
        rng = np.random.default_rng(seed)
        for _ in range(4):
            req = net.nodes[int(rng.integers(1000))]
            hops.append(chord_retrieve(net, req, int(rng.integers(ring.size)))[1].hops)
    assert np.mean(hops) <= 2 * math.log2(1000)


def test_network_file_round_trip(tmp_path):
    net = generate_network(RingParams(20), 300, 1 / 6, seed=9)
    p = save_network(net, tmp_path / "a.net")
    back = load_network(p)
    assert back.nodes == net.nodes and back.adversaries == net.adversaries
    assert back.seed == 9 and back.fraction == pytest.approx(1 / 6) and back.ring == net.ring
    save_network(generate_network(RingParams(20), 300, 1 / 6, seed=9), tmp_path / "b.net")
    assert (tmp_path / "a.net").read_bytes() == (tmp_path / "b.net").read_bytes()


def test_network_file_errors(tmp_path):
    with pytest.raises(SetupError, match="missing.net"):
        load_network(tmp_path / "missing.net")
    bad = tmp_path / "bad.net"
    bad.write_text("SOMETHING 1\n")
    with pytest.raises(SetupError, match="bad.net"):
        load_network(bad)
    net = generate_network(RingParams(8), 10, 0.0, seed=1)
    good = save_network(net, tmp_path / "trunc.net").read_text().splitlines()
    bad.write_text("\n".join(good[:8]) + "\n")
    with pytest.raises(SetupError):
        load_network(bad)
