import bisect

import pytest

from irislab.chord import Network
from irislab.ring import RingParams

# The two worked examples never state m; 7 bits is the smallest ring that
# holds every identifier they draw.
EXAMPLE_RING = RingParams(7)

# Requester 8 resolving object 62: 42 -> 61 -> 3.
LOOKUP_EXAMPLE_NODES = (3, 8, 14, 21, 32, 38, 42, 46, 51, 56, 61)

# Requester 44, object 75: queried 55, 62, 69, terminal 76.
WALK_EXAMPLE_NODES = (8, 21, 32, 44, 55, 62, 69, 76, 90, 105, 120)

_acceptance_lines: list[str] = []


def record_criterion(number, passed, detail):
    _acceptance_lines.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def linear_scan_responsible(nodes, ident):
    for n in sorted(nodes):
        if n >= ident:
            return n
    return min(nodes)


def bisect_responsible(nodes, ident):
    i = bisect.bisect_left(nodes, ident)
    return nodes[i % len(nodes)]


@pytest.fixture
def lookup_example_net():
    return Network(EXAMPLE_RING, LOOKUP_EXAMPLE_NODES)


@pytest.fixture
def walk_example_net():
    return Network(EXAMPLE_RING, WALK_EXAMPLE_NODES)
