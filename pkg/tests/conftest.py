import pytest

from ridepool.netgraph import RoadNetwork, make_grid
from ridepool.units import USEC


def line_network(n=6, edge_mi=0.2, edge_s=24):
    """Nodes A,B,C,... in a row, both directions, uniform arcs."""
    names = [chr(ord("A") + i) for i in range(n)]
    arcs = []
    for a, b in zip(names, names[1:]):
        arcs.append((a, b, edge_mi, edge_s))
        arcs.append((b, a, edge_mi, edge_s))
    return RoadNetwork(names, arcs)


def sec(x):
    return x * USEC


@pytest.fixture(scope="session")
def grid10():
    return make_grid(10, 10, 0.2, 30)


@pytest.fixture()
def line6():
    return line_network(6)
