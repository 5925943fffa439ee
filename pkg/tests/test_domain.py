import numpy as np
import pytest

from ridepool.domain import (
    DO,
    PU,
    REC,
    CapacityViolation,
    InsertionPlan,
    OrderingViolation,
    Request,
    ScheduleEntry,
    Stop,
    VehicleState,
    active_schedule,
    apply_assignment,
    extract_runs,
    plan_stop_times,
)
from tests.conftest import line_network, sec


def solo_plan(cust, origin, dest):
    return InsertionPlan(cust, (Stop(PU, cust, origin), Stop(DO, cust, dest)))


class TestActiveSchedule:
    def test_empty(self, line6):
        v = VehicleState(0, "A", line6)
        assert active_schedule(v, sec(100)) == []

    def test_filter_by_time(self, line6):
        v = VehicleState(0, "A", line6)
        v.schedule = [
            ScheduleEntry("A", sec(10), PU, 1),
            ScheduleEntry("B", sec(20), DO, 1),
        ]
        assert active_schedule(v, sec(15)) == [ScheduleEntry("B", sec(20), DO, 1)]

    def test_insertion_keeps_future_from_new_pickup(self, line6):
        # vehicle heading to pick up j; i inserted mid-way
        v = VehicleState(2, "A", line6)
        apply_assignment(v, solo_plan(7, "C", "F"), sec(0))
        plan = InsertionPlan(
            8,
            (Stop(PU, 7, "C"), Stop(PU, 8, "D"), Stop(DO, 8, "E"), Stop(DO, 7, "F")),
        )
        apply_assignment(v, plan, sec(24))
        act = active_schedule(v, sec(24))
        assert [(e.op, e.customer) for e in act] == [
            (REC, 8),
            (PU, 7),
            (PU, 8),
            (DO, 8),
            (DO, 7),
        ]
        # queried from the retimed first pickup, only PU/DO entries remain
        at_pickup = active_schedule(v, sec(48))
        assert [(e.op, e.customer) for e in at_pickup] == [
            (PU, 7),
            (PU, 8),
            (DO, 8),
            (DO, 7),
        ]


class TestApplyAssignment:
    def test_empty_vehicle_rec_pu_do(self, line6):
        v = VehicleState(1, "A", line6)
        apply_assignment(v, solo_plan(5, "B", "D"), sec(0))
        assert v.schedule == [
            ScheduleEntry("A", 0, REC, 5),
            ScheduleEntry("B", sec(24), PU, 5),
            ScheduleEntry("D", sec(72), DO, 5),
        ]
        assert v.anchor_node == "A"

    def test_insertion_recomputes_downstream_times(self, line6):
        v = VehicleState(2, "A", line6)
        apply_assignment(v, solo_plan(7, "C", "F"), sec(0))
        assert [e.time for e in v.schedule] == [0, sec(48), sec(120)]
        plan = InsertionPlan(
            8,
            (Stop(PU, 7, "C"), Stop(PU, 8, "D"), Stop(DO, 8, "E"), Stop(DO, 7, "F")),
        )
        apply_assignment(v, plan, sec(24))
        # anchor is B (next node at t=24); committed REC of 7 is untouched
        assert v.schedule[0] == ScheduleEntry("A", 0, REC, 7)
        assert v.schedule[1] == ScheduleEntry("B", sec(24), REC, 8)
        assert [e.time for e in v.schedule[2:]] == [sec(48), sec(72), sec(96), sec(120)]

    def test_third_concurrent_rider_rejected(self, line6):
        v = VehicleState(0, "A", line6)
        apply_assignment(v, solo_plan(1, "B", "F"), sec(0))
        pooled = InsertionPlan(
            2, (Stop(PU, 1, "B"), Stop(PU, 2, "C"), Stop(DO, 2, "E"), Stop(DO, 1, "F"))
        )
        apply_assignment(v, pooled, sec(0))
        third = InsertionPlan(
            3,
            (
                Stop(PU, 1, "B"),
                Stop(PU, 2, "C"),
                Stop(PU, 3, "D"),
                Stop(DO, 3, "E"),
                Stop(DO, 2, "E"),
                Stop(DO, 1, "F"),
            ),
        )
        with pytest.raises(CapacityViolation):
            apply_assignment(v, third, sec(0))

    def test_plan_must_cover_committed_customers(self, line6):
        v = VehicleState(0, "A", line6)
        apply_assignment(v, solo_plan(1, "B", "F"), sec(0))
        dropped = InsertionPlan(2, (Stop(PU, 2, "C"), Stop(DO, 2, "E")))
        with pytest.raises(OrderingViolation):
            apply_assignment(v, dropped, sec(0))

    def test_new_customer_needs_pu_then_do(self, line6):
        v = VehicleState(0, "A", line6)
        backwards = InsertionPlan(1, (Stop(DO, 1, "C"), Stop(PU, 1, "B")))
        with pytest.raises(OrderingViolation):
            apply_assignment(v, backwards, sec(0))

    def test_idle_vehicle_parks_at_last_dropoff(self, line6):
        v = VehicleState(0, "A", line6)
        apply_assignment(v, solo_plan(1, "B", "D"), sec(0))
        assert v.is_idle(sec(72))
        _, anchor, t = v.anchor_at(sec(100))
        assert line6.node_ids[anchor] == "D"
        assert t == sec(100)

    def test_preview_matches_commit(self, line6):
        v = VehicleState(0, "A", line6)
        apply_assignment(v, solo_plan(1, "C", "F"), sec(0))
        # backward-going rider D->C forces a real detour
        stops = (Stop(PU, 1, "C"), Stop(PU, 2, "D"), Stop(DO, 2, "C"), Stop(DO, 1, "F"))
        times, _, _, added = plan_stop_times(v, stops, sec(24))
        apply_assignment(v, InsertionPlan(2, stops), sec(24))
        scheduled = [e.time for e in v.schedule if e.op != REC]
        assert times == scheduled
        # old tail from anchor B is 4 edges; new route B,C,D,C,F is 6 edges
        assert added == 400_000


class TestExtractRuns:
    def _vehicle_with_schedule(self, entries, line):
        v = VehicleState(9, "A", line)
        v.schedule = entries
        return v

    def test_two_solo_runs(self, line6):
        v = self._vehicle_with_schedule(
            [
                ScheduleEntry("A", 0, REC, 1),
                ScheduleEntry("B", sec(24), PU, 1),
                ScheduleEntry("C", sec(48), DO, 1),
                ScheduleEntry("C", sec(60), REC, 2),
                ScheduleEntry("D", sec(84), PU, 2),
                ScheduleEntry("E", sec(108), DO, 2),
            ],
            line6,
        )
        runs = extract_runs(v, {1: 5000, 2: 7000})
        assert [(r.customers, r.start_time, r.end_time, r.total_fare) for r in runs] == [
            ((1,), sec(24), sec(48), 5000),
            ((2,), sec(84), sec(108), 7000),
        ]

    def test_pooled_pair_is_one_run(self, line6):
        v = self._vehicle_with_schedule(
            [
                ScheduleEntry("B", 0, PU, 1),
                ScheduleEntry("C", sec(24), PU, 2),
                ScheduleEntry("D", sec(48), DO, 1),
                ScheduleEntry("E", sec(72), DO, 2),
            ],
            line6,
        )
        runs = extract_runs(v, {1: 4000, 2: 3000})
        assert len(runs) == 1
        assert runs[0].customers == (1, 2)
        assert runs[0].total_fare == 7000

    def test_chained_pooling_single_run(self, line6):
        v = self._vehicle_with_schedule(
            [
                ScheduleEntry("A", 0, PU, 1),
                ScheduleEntry("B", sec(24), PU, 2),
                ScheduleEntry("C", sec(48), DO, 1),
                ScheduleEntry("D", sec(72), PU, 3),
                ScheduleEntry("E", sec(96), DO, 2),
                ScheduleEntry("F", sec(120), DO, 3),
            ],
            line6,
        )
        runs = extract_runs(v, {1: 1000, 2: 2000, 3: 3000})
        assert len(runs) == 1
        assert runs[0].customers == (1, 2, 3)
        assert runs[0].start_time == 0
        assert runs[0].end_time == sec(120)
        assert runs[0].total_fare == 6000

    def test_runs_partition_all_events(self, line6):
        entries = [
            ScheduleEntry("A", 0, PU, 1),
            ScheduleEntry("B", sec(24), DO, 1),
            ScheduleEntry("C", sec(48), PU, 2),
            ScheduleEntry("D", sec(72), PU, 3),
            ScheduleEntry("E", sec(96), DO, 3),
            ScheduleEntry("F", sec(120), DO, 2),
        ]
        v = self._vehicle_with_schedule(entries, line6)
        runs = extract_runs(v, {1: 1, 2: 1, 3: 1})
        covered = [c for r in runs for c in r.customers]
        assert sorted(covered) == [1, 2, 3]
        assert len(covered) == len(set(covered))


class TestInvariantsUnderRandomAssignments:
    def test_replay_invariants(self):
        net = line_network(8)
        rng = np.random.default_rng(42)
        v = VehicleState(0, "A", net)
        names = list(net.node_ids)
        now = 0
        cid = 0
        for _ in range(40):
            now += int(rng.integers(1, 60)) * 1_000_000
            v.prune(now)
            actives = list(v.active)
            cid += 1
            if not actives:
                o, d = rng.choice(len(names), size=2, replace=False)
                apply_assignment(v, solo_plan(cid, names[o], names[d]), now)
            elif len(actives) == 1:
                k = actives[0]
                ride = v.active[k]
                o, d = rng.choice(len(names), size=2, replace=False)
                o_id, d_id = names[o], names[d]
                k_dest = net.node_ids[ride.dest_idx]
                if v.picked_up(k, now):
                    stops = (Stop(PU, cid, o_id), Stop(DO, cid, d_id), Stop(DO, k, k_dest))
                else:
                    k_origin = net.node_ids[ride.origin_idx]
                    stops = (
                        Stop(PU, k, k_origin),
                        Stop(PU, cid, o_id),
                        Stop(DO, cid, d_id),
                        Stop(DO, k, k_dest),
                    )
                apply_assignment(v, InsertionPlan(cid, stops), now)
            else:
                continue

        times = [e.time for e in v.schedule]
        assert times == sorted(times)
        per_cust = {}
        for e in v.schedule:
            per_cust.setdefault(e.customer, []).append(e.op)
        for ops in per_cust.values():
            # each customer: REC first, PU before DO, nothing else interleaved
            assert [o for o in ops if o == REC] == [REC]
            assert ops.index(REC) < ops.index(PU) < ops.index(DO)
        onboard = 0
        for e in v.schedule:
            if e.op == PU:
                onboard += 1
                assert onboard <= 2
            elif e.op == DO:
                onboard -= 1
        # trace is a connected walk with consistent mileage
        for a, b in zip(v.trace_nodes, v.trace_nodes[1:]):
            net.arc_attrs(a, b)
        assert v.trace_cum == sorted(v.trace_cum)


class TestRequestValidation:
    def test_rejects_zero_length_trip(self):
        with pytest.raises(ValueError):
            Request.build(1, "A", "A", 0, 300)

    def test_rejects_negative_value_of_time(self):
        with pytest.raises(ValueError):
            Request.build(1, "A", "B", 0, 300, value_of_time_usd_per_min=-0.1)

    def test_resolution_fills_only_missing(self):
        r = Request.build(1, "A", "B", 0, 300)
        full = r.resolved(value_of_time=225, poolable=True)
        assert full.value_of_time == 225 and full.poolable is True
        fixed = Request.build(2, "A", "B", 0, 300, 0.225, poolable=False)
        assert fixed.resolved(value_of_time=999, poolable=True) == fixed
