"""Deterministic event-driven fleet simulation.

Requests are processed strictly in arrival order; each one triggers an
immediate assignment under the configured mechanism and the chosen plan is
committed to the vehicle's schedule.  Vehicle motion is implicit: schedules
carry exact node arrival times and a rerouted vehicle continues from its
anchor node.  Identical configuration and request streams produce
byte-identical results.

Poolable flags and values of time left unset on requests are drawn from
independent seeded streams; the poolable draw thresholds one uniform per
customer so the poolable populations at increasing MAR levels are nested.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .costshare import RunAccount, RunMember, goalprog_split
from .domain import (
    DO,
    PU,
    InsertionPlan,
    Request,
    Run,
    Stop,
    VehicleState,
    apply_assignment,
    extract_runs,
)
from .mechanisms import (
    SOLITARY,
    UNSERVED,
    CommittedCost,
    Mechanism,
    assign_ccp,
    assign_pcp,
    assign_sro,
    solitary_baseline,
)
from .netgraph import RoadNetwork
from .pricing import Tariff, provider_profit, solitary_fare, total_cost
from .units import Money, time_cost_mils

DEFAULT_VOT_MILS_PER_MIN = (166, 195, 225, 254, 283)
DEFAULT_THRESHOLDS = (
    Fraction(5, 100),
    Fraction(10, 100),
    Fraction(15, 100),
    Fraction(20, 100),
)

_STREAM_POOLABLE = 101
_STREAM_VOT = 102
_STREAM_FLEET = 103


class ConfigError(Exception):
    """The simulation inputs are inconsistent."""


@dataclass(frozen=True)
class SimConfig:
    mechanism: Mechanism
    tariff: Tariff
    fleet_size: int
    mar: Fraction
    rng_seed: int
    network: RoadNetwork
    horizon: int  # usec
    max_wait_override: int | None = None  # usec, replaces per-request limits
    split_scheme: str = "shapley"  # shapley | goalprog
    split_thresholds: tuple[Fraction, ...] = DEFAULT_THRESHOLDS
    initial_vehicle_nodes: tuple[str, ...] | None = None
    vot_values: tuple[int, ...] = DEFAULT_VOT_MILS_PER_MIN  # mils per minute

    def __post_init__(self):
        if self.fleet_size < 1:
            raise ConfigError("fleet_size must be at least 1")
        if not 0 <= self.mar <= 1:
            raise ConfigError("mar must lie in [0, 1]")
        if self.split_scheme not in ("shapley", "goalprog"):
            raise ConfigError(f"unknown split scheme {self.split_scheme!r}")


@dataclass
class CustomerOutcome:
    customer: int
    poolable: bool
    pooled: bool
    vehicle: int
    fare: Money
    pickup_time: int
    dropoff_time: int
    total_cost: Money
    baseline_solitary_cost: int
    solitary_quote: int


@dataclass(frozen=True)
class DecisionRow:
    time: int
    customer: int
    mechanism: str
    decision: str
    vehicle: int | None
    partner: int | None
    fare: Money | None
    baseline_cost: Money | None
    guaranteed_cost: Money | None
    added_distance: int | None  # umiles


@dataclass
class RunRecord:
    run_id: str
    run: Run
    account: RunAccount | None = None  # pooled runs only
    counts: tuple[int, ...] | None = None


@dataclass
class SimResult:
    mechanism: str
    served: int
    unserved: int
    pooled_customers: int
    poolable_customers: int
    fleet_distance: int  # umiles
    fares_total: Money
    profit: Money
    per_customer: dict[int, CustomerOutcome]
    runs: list[RunRecord]
    decision_log: list[DecisionRow]
    unserved_ids: tuple[int, ...]
    requests: dict[int, Request]
    vehicles: list[VehicleState]

    @property
    def n_requests(self) -> int:
        return self.served + self.unserved


def _stream(seed: int, label: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, label])))


def resolve_requests(cfg: SimConfig, requests: list[Request]) -> list[Request]:
    """Fill missing poolable flags and values of time from seeded streams."""
    u = _stream(cfg.rng_seed, _STREAM_POOLABLE).random(len(requests))
    vot_idx = _stream(cfg.rng_seed, _STREAM_VOT).integers(0, len(cfg.vot_values), len(requests))
    mar = float(cfg.mar)
    out = []
    for i, r in enumerate(requests):
        r = r.resolved(
            value_of_time=int(cfg.vot_values[int(vot_idx[i])]),
            poolable=bool(u[i] < mar),
        )
        if cfg.max_wait_override is not None:
            r = replace(r, max_wait=cfg.max_wait_override)
        out.append(r)
    return out


def initial_fleet(cfg: SimConfig) -> list[VehicleState]:
    net = cfg.network
    if cfg.initial_vehicle_nodes is not None:
        if len(cfg.initial_vehicle_nodes) != cfg.fleet_size:
            raise ConfigError("initial_vehicle_nodes must match fleet_size")
        nodes = cfg.initial_vehicle_nodes
    else:
        idx = _stream(cfg.rng_seed, _STREAM_FLEET).integers(0, net.n_nodes, cfg.fleet_size)
        nodes = tuple(net.node_ids[int(i)] for i in idx)
    return [VehicleState(i, node, net) for i, node in enumerate(nodes)]


def _validate(cfg: SimConfig, requests: list[Request], fleet) -> None:
    net = cfg.network
    times = [r.request_time for r in requests]
    if times != sorted(times):
        raise ConfigError("requests must be sorted by request time")
    ids = [r.id for r in requests]
    if len(set(ids)) != len(ids):
        raise ConfigError("request ids must be unique")
    used = {v.trace_nodes[0] for v in fleet}
    for r in requests:
        if not (net.has_node(r.origin) and net.has_node(r.destination)):
            raise ConfigError(f"request {r.id} references nodes off the network")
        used.add(net.index(r.origin))
        used.add(net.index(r.destination))
    nodes = sorted(used)
    for i in nodes:
        for j in nodes:
            if not net.reachable(i, j):
                raise ConfigError(
                    f"nodes {net.node_ids[i]!r} and {net.node_ids[j]!r} are not mutually reachable"
                )


def _solo_plan(r: Request) -> InsertionPlan:
    return InsertionPlan(r.id, (Stop(PU, r.id, r.origin), Stop(DO, r.id, r.destination)))


def run_sim(cfg: SimConfig, requests: list[Request]) -> SimResult:
    """Feed the request stream through the configured mechanism."""
    net = cfg.network
    fleet = initial_fleet(cfg)
    stream = [r for r in resolve_requests(cfg, requests) if r.request_time <= cfg.horizon]
    _validate(cfg, stream, fleet)

    tariff = cfg.tariff
    by_id = {r.id: r for r in stream}
    book: dict[int, CustomerOutcome] = {}
    committed: dict[int, CommittedCost] = {}
    vehicles = {v.id: v for v in fleet}
    log: list[DecisionRow] = []
    unserved_ids: list[int] = []
    pooled_ids: set[int] = set()

    for r in stream:
        now = r.request_time
        if cfg.mechanism == Mechanism.SRO:
            decision = assign_sro(fleet, r, now)
            if decision.kind == SOLITARY:
                quote = solitary_fare(tariff, net, r.origin, r.destination)
                decision.fare = quote
                decision.baseline = total_cost(
                    quote, r, decision.candidate.dropoff_times[r.id]
                )
                decision.guaranteed = decision.baseline
        elif cfg.mechanism == Mechanism.PCP:
            baseline, _ = solitary_baseline(fleet, r, now, net, tariff)
            decision = assign_pcp(fleet, r, now, net, tariff, by_id)
            decision.baseline = baseline
        else:
            decision = assign_ccp(fleet, r, now, net, tariff, by_id, committed)

        if decision.kind == UNSERVED:
            unserved_ids.append(r.id)
            log.append(
                DecisionRow(now, r.id, cfg.mechanism.value, UNSERVED, None, None, None,
                            decision.baseline, None, None)
            )
            continue

        cand = decision.candidate
        v = vehicles[cand.vehicle]
        quote = solitary_fare(tariff, net, r.origin, r.destination)

        if decision.kind == SOLITARY:
            v.prune(now)
            apply_assignment(v, _solo_plan(r), now)
            fare = decision.fare if decision.fare is not None else quote
            pickup = cand.pickup_times[r.id]
            dropoff = cand.dropoff_times[r.id]
            book[r.id] = CustomerOutcome(
                customer=r.id,
                poolable=bool(r.poolable),
                pooled=False,
                vehicle=v.id,
                fare=fare,
                pickup_time=pickup,
                dropoff_time=dropoff,
                total_cost=0,
                baseline_solitary_cost=decision.baseline,
                solitary_quote=quote,
            )
            if cfg.mechanism == Mechanism.CCP:
                committed[r.id] = CommittedCost(
                    customer=r.id, baseline=decision.baseline,
                    guaranteed=decision.guaranteed, fare=fare,
                )
                v.fare_waypoints = [r.origin, r.destination]
                v.fare_wp_times = [pickup, dropoff]
                v.run_fare = quote
                v.run_events = 0
        else:
            k = by_id[cand.partner]
            apply_assignment(v, cand.plan, now)
            pooled_ids.add(r.id)
            pooled_ids.add(k.id)
            kb = book[k.id]
            kb.pooled = True
            kb.dropoff_time = cand.dropoff_times[k.id]
            if k.id in cand.pickup_times:
                kb.pickup_time = cand.pickup_times[k.id]
            if cfg.mechanism == Mechanism.PCP:
                fare = decision.fare
            else:
                fare = decision.fare
                kb.fare = decision.partner_fare
                committed[k.id] = replace(
                    committed[k.id],
                    guaranteed=decision.partner_guaranteed,
                    fare=decision.partner_fare,
                )
                committed[r.id] = CommittedCost(
                    customer=r.id, baseline=decision.baseline,
                    guaranteed=decision.guaranteed, fare=fare,
                )
                v.fare_waypoints = list(cand.new_waypoints)
                v.fare_wp_times = list(cand.new_wp_times)
                v.run_fare = cand.new_run_fare
                v.run_events += 1
            book[r.id] = CustomerOutcome(
                customer=r.id,
                poolable=True,
                pooled=True,
                vehicle=v.id,
                fare=fare,
                pickup_time=cand.pickup_times[r.id],
                dropoff_time=cand.dropoff_times[r.id],
                total_cost=0,
                baseline_solitary_cost=decision.baseline,
                solitary_quote=quote,
            )

        log.append(
            DecisionRow(
                time=now,
                customer=r.id,
                mechanism=cfg.mechanism.value,
                decision=decision.kind,
                vehicle=cand.vehicle,
                partner=cand.partner,
                fare=decision.fare,
                baseline_cost=decision.baseline,
                guaranteed_cost=decision.guaranteed,
                added_distance=cand.added_distance,
            )
        )

    # runs, ex-post splits and final economics
    fares = {cid: o.fare for cid, o in book.items()}
    run_records: list[RunRecord] = []
    for v in fleet:
        for i, run in enumerate(extract_runs(v, fares)):
            rec = RunRecord(run_id=f"v{v.id}r{i}", run=run)
            if cfg.mechanism == Mechanism.CCP and len(run.customers) >= 2:
                members = tuple(
                    RunMember(
                        customer=c,
                        solitary_cost=book[c].baseline_solitary_cost,
                        pooled_time_cost=time_cost_mils(
                            by_id[c].value_of_time,
                            book[c].dropoff_time - by_id[c].request_time,
                        ),
                    )
                    for c in run.customers
                )
                fare_int = run.total_fare
                if isinstance(fare_int, Fraction):
                    assert fare_int.denominator == 1
                    fare_int = fare_int.numerator
                rec.account = RunAccount(rec.run_id, members, fare_int)
                if cfg.split_scheme == "goalprog":
                    split = goalprog_split(rec.account, cfg.split_thresholds)
                    rec.counts = split.counts
                    for entry in split.entries:
                        book[entry.customer].fare = entry.fare
            run_records.append(rec)

    for cid, o in book.items():
        o.total_cost = total_cost(o.fare, by_id[cid], o.dropoff_time)

    fleet_umi = sum(v.driven_umiles() for v in fleet)
    fares_total: Money = sum(o.fare for o in book.values())
    profit = provider_profit(fares_total, fleet_umi, tariff)

    return SimResult(
        mechanism=cfg.mechanism.value,
        served=len(book),
        unserved=len(unserved_ids),
        pooled_customers=len(pooled_ids),
        poolable_customers=sum(1 for r in stream if r.poolable),
        fleet_distance=fleet_umi,
        fares_total=fares_total,
        profit=profit,
        per_customer=book,
        runs=run_records,
        decision_log=log,
        unserved_ids=tuple(unserved_ids),
        requests=by_id,
        vehicles=fleet,
    )


def counterfactual_sro(cfg: SimConfig, requests: list[Request]) -> SimResult:
    """Paired baseline: same seed, fleet and draws, mechanism forced to SRO."""
    return run_sim(replace(cfg, mechanism=Mechanism.SRO), requests)
