"""Monetary formulas: fares, customer total cost and provider profit.

A solitary ride costs a base fare plus a distance charge over the
origin-destination shortest path.  Under provider-centered pooling every
poolable customer pays the discounted solitary fare whether or not she is
matched.  Under customer-centered pooling a matched pair is quoted a single
fare covering both riders' legs plus a change fee for rewriting the
schedule; six stop orderings are possible depending on whether the earlier
customer is already riding and on the dropoff order.

A customer's total cost is her fare plus her value of time applied to the
span between request and dropoff.  Money is kept in integer mils (tenths of
a cent) so every comparison is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .domain import Request
from .netgraph import RoadNetwork
from .units import (
    Money,
    distance_charge_mils,
    fraction_from,
    mils_from_usd,
    time_cost_mils,
)


class InvalidGeometry(Exception):
    """The supplied pooled-stop ordering contradicts its own timing claims."""


@dataclass(frozen=True)
class Tariff:
    """Fare and cost parameters, monetary fields in mils."""

    base_fare: int
    per_mile: int
    change_fee: int
    discount_factor: Fraction
    detour_factor: Fraction
    provider_cost_per_mile: int

    def __post_init__(self):
        if self.base_fare < 0 or self.change_fee < 0:
            raise ValueError("base fare and change fee must be non-negative")
        if self.per_mile <= 0 or self.provider_cost_per_mile <= 0:
            raise ValueError("per-mile rates must be positive")
        if not 0 < self.discount_factor <= 1:
            raise ValueError("discount factor must be in (0, 1]")
        if self.detour_factor <= 0:
            raise ValueError("detour factor must be positive")

    @classmethod
    def from_usd(
        cls,
        base_fare=2.50,
        per_mile=2.50,
        change_fee=2.00,
        discount_factor="0.8",
        detour_factor="0.3",
        provider_cost_per_mile=2.945,
    ) -> "Tariff":
        return cls(
            base_fare=mils_from_usd(base_fare),
            per_mile=mils_from_usd(per_mile),
            change_fee=mils_from_usd(change_fee),
            discount_factor=fraction_from(discount_factor),
            detour_factor=fraction_from(detour_factor),
            provider_cost_per_mile=mils_from_usd(provider_cost_per_mile),
        )


@dataclass(frozen=True)
class CostQuote:
    """Frozen per-customer economics: fare, dropoff time and total cost."""

    fare: Money
    dropoff_time: int  # usec
    total_cost: Money


@dataclass(frozen=True)
class PoolGeometry:
    """Which of the six pooled stop orderings applies.

    Cases 1-2: the earlier customer is already riding when the new request
    arrives at `request_time_j`; the ride continues from `vehicle_location`
    and the earlier customer is dropped first (1) or last (2).
    Cases 3-6: neither customer has been picked up; 3-4 pick up the earlier
    customer first, 5-6 the new one first; odd cases drop the earlier
    customer first.
    """

    case: int
    request_time_j: int  # usec
    pickup_time_i: int  # usec, scheduled pickup of the earlier customer
    vehicle_location: str | None = None

    def __post_init__(self):
        if self.case not in range(1, 7):
            raise InvalidGeometry(f"case must be 1..6, got {self.case}")
        if self.case <= 2:
            if self.vehicle_location is None:
                raise InvalidGeometry("cases 1-2 need the vehicle location")
            if self.pickup_time_i > self.request_time_j:
                raise InvalidGeometry(
                    "cases 1-2 require the earlier customer to be picked up already"
                )
        elif self.pickup_time_i <= self.request_time_j:
            raise InvalidGeometry("cases 3-6 require the earlier pickup to be pending")


def variable_charge(t: Tariff, dist_umiles: int) -> int:
    """Distance-dependent fare component, rounded once on the total."""
    return distance_charge_mils(t.per_mile, dist_umiles)


def route_distance_umiles(net: RoadNetwork, waypoints) -> int:
    """Sum of shortest-path leg mileages over consecutive waypoints."""
    total = 0
    for a, b in zip(waypoints, waypoints[1:]):
        if a != b:
            total += net.distance_umiles(net.index(a), net.index(b))
    return total


def route_fare(t: Tariff, net: RoadNetwork, waypoints, change_events: int) -> int:
    """Base fare + distance charge over a waypoint itinerary + change fees."""
    dist = route_distance_umiles(net, waypoints)
    return t.base_fare + variable_charge(t, dist) + change_events * t.change_fee


def solitary_fare(t: Tariff, net: RoadNetwork, origin: str, destination: str) -> int:
    if origin == destination:
        raise ValueError("solitary fare needs distinct origin and destination")
    dist = net.distance_umiles(net.index(origin), net.index(destination))
    return t.base_fare + variable_charge(t, dist)


def pcp_fare(t: Tariff, solitary: Money) -> Fraction:
    """Discounted fare charged to every poolable customer, matched or not."""
    if solitary < 0:
        raise ValueError("solitary fare must be non-negative")
    return t.discount_factor * solitary


def _case_waypoints(case: int, i: Request, j: Request, location: str | None):
    oi, di, oj, dj = i.origin, i.destination, j.origin, j.destination
    if case == 1:
        return (oi, location, oj, di, dj)
    if case == 2:
        return (oi, location, oj, dj, di)
    if case == 3:
        return (oi, oj, di, dj)
    if case == 4:
        return (oi, oj, dj, di)
    if case == 5:
        return (oj, oi, di, dj)
    return (oj, oi, dj, di)


def ccp_pooled_fare(
    t: Tariff, net: RoadNetwork, i: Request, j: Request, geometry: PoolGeometry
) -> int:
    """Joint fare for a pooled pair: one base fare, the ordered stop legs
    of the applicable case, and one change fee for the schedule rewrite."""
    waypoints = _case_waypoints(geometry.case, i, j, geometry.vehicle_location)
    return route_fare(t, net, waypoints, 1)


def total_cost(fare: Money, r: Request, dropoff: int) -> Money:
    """Fare plus cost of time between request and dropoff."""
    if dropoff < r.request_time:
        raise ValueError("dropoff precedes request time")
    if r.value_of_time is None:
        raise ValueError(f"request {r.id} has no value of time yet")
    return fare + time_cost_mils(r.value_of_time, dropoff - r.request_time)


def quote(fare: Money, r: Request, dropoff: int) -> CostQuote:
    return CostQuote(fare=fare, dropoff_time=dropoff, total_cost=total_cost(fare, r, dropoff))


def provider_profit(fares_collected: Money, fleet_umiles: int, t: Tariff) -> Money:
    """Collected fares minus mileage-dependent cost; fixed costs excluded."""
    if fleet_umiles < 0:
        raise ValueError("fleet mileage must be non-negative")
    return fares_collected - distance_charge_mils(t.provider_cost_per_mile, fleet_umiles)
