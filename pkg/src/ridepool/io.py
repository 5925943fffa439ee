"""File formats: trip CSVs and the result/report writers.

All floating outputs are rendered with exactly four decimals, rounded half
to even from the exact internal integers, so rewriting the same results
produces byte-identical files.
"""

from __future__ import annotations

import csv
from fractions import Fraction

from .domain import Request
from .simengine import SimResult
from .units import MILS, fmt4, fmt_miles, fmt_seconds, fmt_usd

TRIP_COLUMNS = (
    "request_time_s",
    "origin_node",
    "dest_node",
    "value_of_time_usd_per_min",
    "max_wait_s",
    "poolable",
)


def load_trips_csv(path) -> list[Request]:
    """Read a trip file; empty value-of-time or poolable fields stay unset."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TRIP_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"trip file lacks columns: {sorted(missing)}")
        for i, row in enumerate(reader):
            vot = row["value_of_time_usd_per_min"].strip()
            poolable = row["poolable"].strip()
            out.append(
                Request.build(
                    id=i,
                    origin=row["origin_node"].strip(),
                    destination=row["dest_node"].strip(),
                    request_time_s=row["request_time_s"].strip(),
                    max_wait_s=row["max_wait_s"].strip(),
                    value_of_time_usd_per_min=vot or None,
                    poolable=None if poolable == "" else poolable not in ("0", "false", "False"),
                )
            )
    out.sort(key=lambda r: (r.request_time, r.id))
    return out


def save_trips_csv(requests, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIP_COLUMNS)
        for r in requests:
            writer.writerow(
                [
                    fmt_seconds(r.request_time),
                    r.origin,
                    r.destination,
                    "" if r.value_of_time is None else fmt4(r.value_of_time, MILS),
                    fmt_seconds(r.max_wait),
                    "" if r.poolable is None else int(r.poolable),
                ]
            )


DECISION_COLUMNS = (
    "time_s",
    "customer",
    "mechanism",
    "decision",
    "vehicle",
    "partner",
    "fare_usd",
    "baseline_cost_usd",
    "guaranteed_cost_usd",
    "added_distance_mi",
)


def decision_rows(result: SimResult, prefix: tuple = ()):
    for d in result.decision_log:
        yield prefix + (
            fmt_seconds(d.time),
            d.customer,
            d.mechanism,
            d.decision,
            "" if d.vehicle is None else d.vehicle,
            "" if d.partner is None else d.partner,
            "" if d.fare is None else fmt_usd(d.fare),
            "" if d.baseline_cost is None else fmt_usd(d.baseline_cost),
            "" if d.guaranteed_cost is None else fmt_usd(d.guaranteed_cost),
            "" if d.added_distance is None else fmt_miles(d.added_distance),
        )


SPLIT_COLUMNS = (
    "run_id",
    "customer",
    "c_solitary_usd",
    "a_pooled_time_usd",
    "fare_usd",
    "relative_saving",
)


def split_rows(result: SimResult, prefix: tuple = ()):
    """Per-customer rows of every pooled run's final fare division."""
    for rec in result.runs:
        if rec.account is None:
            continue
        for m in rec.account.members:
            fare = result.per_customer[m.customer].fare
            saving = 1 - Fraction(fare + m.pooled_time_cost, m.solitary_cost)
            yield prefix + (
                rec.run_id,
                m.customer,
                fmt_usd(m.solitary_cost),
                fmt_usd(m.pooled_time_cost),
                fmt_usd(fare),
                fmt4(saving),
            )


RUN_ACCOUNT_COLUMNS = (
    "run_id",
    "customer",
    "c_solitary_usd",
    "a_pooled_time_usd",
    "run_fare_usd",
)


def run_account_rows(result: SimResult, prefix: tuple = ()):
    for rec in result.runs:
        if rec.account is None:
            continue
        for m in rec.account.members:
            yield prefix + (
                rec.run_id,
                m.customer,
                fmt_usd(m.solitary_cost),
                fmt_usd(m.pooled_time_cost),
                fmt_usd(rec.account.run_fare),
            )


def load_run_accounts_csv(path):
    """Read run accounts: one row per run member, fare repeated within a run."""
    from .costshare import RunAccount, RunMember
    from .units import mils_from_usd

    groups: dict[str, list] = {}
    fares: dict[str, int] = {}
    order: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RUN_ACCOUNT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"run file lacks columns: {sorted(missing)}")
        for row in reader:
            rid = row["run_id"].strip()
            if rid not in groups:
                groups[rid] = []
                order.append(rid)
                fares[rid] = mils_from_usd(row["run_fare_usd"].strip())
            elif fares[rid] != mils_from_usd(row["run_fare_usd"].strip()):
                raise ValueError(f"run {rid}: inconsistent run_fare_usd across rows")
            groups[rid].append(
                RunMember(
                    customer=int(row["customer"]),
                    solitary_cost=mils_from_usd(row["c_solitary_usd"].strip()),
                    pooled_time_cost=mils_from_usd(row["a_pooled_time_usd"].strip()),
                )
            )
    return [RunAccount(rid, tuple(groups[rid]), fares[rid]) for rid in order]


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
