"""Core entities: trip requests, vehicle schedules and completed runs.

A vehicle schedule is an ordered list of (location, time, op, customer)
entries where op is REC (request received / rerouting point), PU (pickup)
or DO (dropoff).  Assigning a request rewrites the future part of the
schedule: a REC entry is recorded at the vehicle's anchor (the next node it
can reroute from) and all downstream pickup/dropoff times are recomputed
from shortest paths.  Vehicles carry at most two riders at once.

Times are integer microseconds, distances integer micro-miles; see `units`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, NamedTuple

from .netgraph import RoadNetwork
from .units import mils_from_usd, usec_from_seconds

REC = "REC"
PU = "PU"
DO = "DO"

CAPACITY = 2  # concurrent riders per vehicle


class CapacityViolation(Exception):
    """A plan would put more than two riders in the vehicle at once."""


class OrderingViolation(Exception):
    """A plan breaks the REC -> PU -> DO ordering for some customer."""


@dataclass(frozen=True)
class Request:
    """A customer trip request.

    `value_of_time` is in mils per minute and `poolable` is a flag; both may
    be None on ingested trips, in which case the simulation draws them from
    its seeded streams before processing.
    """

    id: int
    origin: str
    destination: str
    request_time: int  # usec; equals the preferred pickup time
    value_of_time: int | None  # mils per minute
    max_wait: int  # usec
    poolable: bool | None

    def __post_init__(self):
        if self.origin == self.destination:
            raise ValueError(f"request {self.id}: origin equals destination")
        if self.max_wait <= 0:
            raise ValueError(f"request {self.id}: max_wait must be positive")
        if self.value_of_time is not None and self.value_of_time < 0:
            raise ValueError(f"request {self.id}: value of time must be non-negative")

    @classmethod
    def build(
        cls,
        id,
        origin,
        destination,
        request_time_s,
        max_wait_s,
        value_of_time_usd_per_min=None,
        poolable=None,
    ) -> "Request":
        vot = None
        if value_of_time_usd_per_min is not None:
            vot = mils_from_usd(value_of_time_usd_per_min)
        return cls(
            id=id,
            origin=origin,
            destination=destination,
            request_time=usec_from_seconds(request_time_s),
            value_of_time=vot,
            max_wait=usec_from_seconds(max_wait_s),
            poolable=poolable,
        )

    def resolved(self, value_of_time=None, poolable=None) -> "Request":
        kwargs = {}
        if self.value_of_time is None:
            kwargs["value_of_time"] = value_of_time
        if self.poolable is None:
            kwargs["poolable"] = poolable
        return replace(self, **kwargs) if kwargs else self


class ScheduleEntry(NamedTuple):
    location: str
    time: int  # usec
    op: str
    customer: int


class Stop(NamedTuple):
    """One future pickup or dropoff in an insertion plan."""

    op: str
    customer: int
    location: str


@dataclass(frozen=True)
class InsertionPlan:
    """Ordered interleaving of the new customer's PU/DO with the active stops."""

    new_customer: int
    stops: tuple[Stop, ...]

    def key(self) -> tuple:
        return tuple((s.op, s.customer, s.location) for s in self.stops)


@dataclass
class ActiveRide:
    """Currently committed, not yet completed ride on a vehicle."""

    pickup_time: int
    dropoff_time: int
    origin_idx: int
    dest_idx: int


@dataclass(frozen=True)
class Run:
    """Maximal interval during which a vehicle is continuously occupied."""

    vehicle: int
    customers: tuple[int, ...]  # in first-pickup order, unique
    start_time: int
    end_time: int
    total_fare: object  # mils (int or Fraction)


class VehicleState:
    """One vehicle: schedule history, as-driven path and current commitments.

    `trace_*` arrays are the node-by-node plan the vehicle follows, including
    everything already driven; rerouting truncates only the untraveled tail.
    The anchor is the next trace node at or after the current time: a vehicle
    between nodes is treated as "will be at the anchor at its arrival time".
    """

    def __init__(self, vid: int, start_node: str, net: RoadNetwork):
        self.id = vid
        self.net = net
        start_idx = net.index(start_node)
        self.schedule: list[ScheduleEntry] = []
        self.trace_nodes: list[int] = [start_idx]
        self.trace_times: list[int] = [0]
        self.trace_cum: list[int] = [0]
        self._pos = 0
        self.active: dict[int, ActiveRide] = {}
        self.anchor_node: str = start_node
        self.anchor_time: int = 0
        # run accounting used by customer-centered pooling
        self.fare_waypoints: list[int] = []
        self.fare_wp_times: list[int] = []
        self.run_fare: int = 0
        self.run_events: int = 0

    # -- state queries ---------------------------------------------------------

    def prune(self, now: int) -> None:
        done = [c for c, ride in self.active.items() if ride.dropoff_time <= now]
        for c in done:
            del self.active[c]

    def is_idle(self, now: int) -> bool:
        self.prune(now)
        return not self.active

    def picked_up(self, customer: int, now: int) -> bool:
        return self.active[customer].pickup_time <= now

    def anchor_at(self, now: int) -> tuple[int, int, int]:
        """(trace position, node index, time) of the next reroutable point."""
        if self.is_idle(now):
            pos = len(self.trace_nodes) - 1
            return pos, self.trace_nodes[pos], now
        pos = self._pos
        while self.trace_times[pos] < now:
            pos += 1
        return pos, self.trace_nodes[pos], self.trace_times[pos]

    def driven_umiles(self) -> int:
        """Mileage of the full trace (history plus still-planned tail)."""
        return self.trace_cum[-1]

    def position_cum_at(self, now: int) -> int:
        """Cumulative mileage up to the last node reached by `now`."""
        pos = 0
        while pos + 1 < len(self.trace_times) and self.trace_times[pos + 1] <= now:
            pos += 1
        return self.trace_cum[pos]


def active_schedule(v: VehicleState, t: int) -> list[ScheduleEntry]:
    """Entries scheduled at or after t, order preserved."""
    return [e for e in v.schedule if e.time >= t]


def plan_stop_times(
    v: VehicleState, stops: Iterable[Stop], now: int
) -> tuple[list[int], int, int, int]:
    """Arrival times for each stop plus (anchor node, anchor time, added mileage).

    Pure preview of what `apply_assignment` would schedule; used for
    candidate evaluation without mutating the vehicle.
    """
    net = v.net
    pos, anchor_idx, anchor_time = v.anchor_at(now)
    times = []
    cur = anchor_idx
    t = anchor_time
    new_dist = 0
    for stop in stops:
        j = net.index(stop.location)
        if j != cur:
            t += net.duration_usec(cur, j)
            new_dist += net.distance_umiles(cur, j)
            cur = j
        times.append(t)
    old_tail = v.trace_cum[-1] - v.trace_cum[pos]
    return times, anchor_idx, anchor_time, new_dist - old_tail


def apply_assignment(v: VehicleState, plan: InsertionPlan, now: int) -> VehicleState:
    """Commit an insertion plan: rewrite the future schedule from the anchor.

    The new customer gets a REC entry at (anchor, now); every downstream stop
    time is recomputed from shortest paths.  Raises CapacityViolation or
    OrderingViolation if the plan is malformed.  Past entries and committed
    REC entries are untouched.
    """
    net = v.net
    v.prune(now)
    _validate_plan(v, plan, now)

    pos, anchor_idx, anchor_time = v.anchor_at(now)
    # the untraveled tail is abandoned; everything up to the anchor is driven
    del v.trace_nodes[pos + 1 :]
    del v.trace_times[pos + 1 :]
    del v.trace_cum[pos + 1 :]
    self_pos = pos
    v._pos = self_pos

    entries = [e for e in v.schedule if e.time <= now]
    anchor_id = net.node_ids[anchor_idx]
    entries.append(ScheduleEntry(anchor_id, now, REC, plan.new_customer))

    cur = anchor_idx
    t = anchor_time
    for stop in plan.stops:
        j = net.index(stop.location)
        if j != cur:
            hops = net.path_indices(cur, j)
            for a, b in zip(hops, hops[1:]):
                len_umi, dur_us = net.arc_attrs(a, b)
                t += dur_us
                v.trace_nodes.append(b)
                v.trace_times.append(t)
                v.trace_cum.append(v.trace_cum[-1] + len_umi)
            cur = j
        entries.append(ScheduleEntry(stop.location, t, stop.op, stop.customer))
        if stop.op == PU:
            ride = v.active.get(stop.customer)
            if ride is None:
                v.active[stop.customer] = ActiveRide(t, t, net.index(stop.location), -1)
            else:
                ride.pickup_time = t
        else:
            ride = v.active[stop.customer]
            ride.dropoff_time = t
            ride.dest_idx = net.index(stop.location)

    v.schedule = entries
    v.anchor_node = anchor_id
    v.anchor_time = anchor_time
    return v


def _validate_plan(v: VehicleState, plan: InsertionPlan, now: int) -> None:
    seen: dict[int, list[str]] = {}
    for stop in plan.stops:
        seen.setdefault(stop.customer, []).append(stop.op)

    new_ops = seen.pop(plan.new_customer, [])
    if new_ops != [PU, DO]:
        raise OrderingViolation(
            f"new customer {plan.new_customer} needs exactly PU then DO, got {new_ops}"
        )
    for cust, ride in v.active.items():
        expected = [DO] if ride.pickup_time <= now else [PU, DO]
        if seen.pop(cust, None) != expected:
            raise OrderingViolation(f"plan must keep {expected} for committed customer {cust}")
    if seen:
        raise OrderingViolation(f"plan references unknown customers {sorted(seen)}")

    onboard = sum(1 for ride in v.active.values() if ride.pickup_time <= now)
    for stop in plan.stops:
        if stop.op == PU:
            onboard += 1
            if onboard > CAPACITY:
                raise CapacityViolation(f"plan exceeds capacity {CAPACITY}")
        else:
            onboard -= 1


def extract_runs(v: VehicleState, fares: Mapping[int, object]) -> list[Run]:
    """Partition a realized schedule into occupied intervals.

    A run starts when the empty vehicle picks somebody up and ends when it
    is empty again; its fare is the sum of its customers' fares.
    """
    runs: list[Run] = []
    onboard: set[int] = set()
    customers: list[int] = []
    start = None
    for e in v.schedule:
        if e.op == PU:
            if not onboard:
                start = e.time
                customers = []
            onboard.add(e.customer)
            customers.append(e.customer)
        elif e.op == DO:
            onboard.discard(e.customer)
            if not onboard:
                total = sum(fares[c] for c in customers)
                runs.append(Run(v.id, tuple(customers), start, e.time, total))
    return runs
