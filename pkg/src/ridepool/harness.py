"""Scenario-grid execution and result aggregation.

A grid crosses mechanism-applicable parameters (change fee for
customer-centered pooling; discount and detour factors for
provider-centered pooling) with wait limits, fleet sizes, matching
acceptance rates and seeds.  Every pooling cell is paired with a
solitary-rides baseline sharing its seed, fleet placement and request
draws, so per-seed comparisons are coupled; the baseline is independent of
the acceptance rate and cached per (wait, fleet, seed).

Outputs are exact-fraction aggregates; rendering to four decimals happens
only in the writers, so rerunning a grid reproduces files byte for byte.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .domain import Request
from .mechanisms import Mechanism
from .netgraph import RoadNetwork
from .pricing import Tariff
from .simengine import (
    DEFAULT_THRESHOLDS,
    DEFAULT_VOT_MILS_PER_MIN,
    SimConfig,
    SimResult,
    run_sim,
)
from .units import USEC, fmt4, fmt_miles, fmt_usd

BRACKETS = (Fraction(0), Fraction(5, 100), Fraction(10, 100), Fraction(15, 100), Fraction(20, 100))


class MismatchedGrids(Exception):
    """Dominance comparison over summaries with different MAR coverage."""


@dataclass(frozen=True)
class ScenarioGrid:
    mechanisms: tuple[Mechanism, ...]
    max_waits: tuple[int, ...]  # usec
    mars: tuple[Fraction, ...]
    fleet_sizes: tuple[int, ...]
    change_fees: tuple[int, ...]  # mils, CCP only
    discount_factors: tuple[Fraction, ...]  # PCP only
    detour_factors: tuple[Fraction, ...]  # PCP only
    seeds: tuple[int, ...]
    base_fare: int = 2500
    per_mile: int = 2500
    provider_cost_per_mile: int = 2945
    vot_values: tuple[int, ...] = DEFAULT_VOT_MILS_PER_MIN
    split_scheme: str = "shapley"
    split_thresholds: tuple[Fraction, ...] = DEFAULT_THRESHOLDS
    horizon: int = 1800 * USEC

    def tariff(self, change_fee=None, discount=None, detour=None) -> Tariff:
        return Tariff(
            base_fare=self.base_fare,
            per_mile=self.per_mile,
            change_fee=self.change_fees[0] if change_fee is None else change_fee,
            discount_factor=self.discount_factors[0] if discount is None else discount,
            detour_factor=self.detour_factors[0] if detour is None else detour,
            provider_cost_per_mile=self.provider_cost_per_mile,
        )

    def cells(self):
        """Yield (mechanism, params dict) for every applicable combination."""
        for mech in self.mechanisms:
            if mech == Mechanism.SRO:
                for wait, fleet in itertools.product(self.max_waits, self.fleet_sizes):
                    yield mech, {"max_wait": wait, "fleet": fleet}
            elif mech == Mechanism.PCP:
                for wait, fleet, mar, disc, det in itertools.product(
                    self.max_waits, self.fleet_sizes, self.mars,
                    self.discount_factors, self.detour_factors,
                ):
                    yield mech, {
                        "max_wait": wait, "fleet": fleet, "mar": mar,
                        "discount": disc, "detour": det,
                    }
            else:
                for wait, fleet, mar, fee in itertools.product(
                    self.max_waits, self.fleet_sizes, self.mars, self.change_fees
                ):
                    yield mech, {"max_wait": wait, "fleet": fleet, "mar": mar, "fee": fee}


@dataclass
class CellOutcome:
    """One simulation plus its paired solitary baseline, with derived metrics."""

    mechanism: str
    params: dict
    seed: int
    result: SimResult
    baseline: SimResult

    def metrics(self) -> dict:
        res, sro = self.result, self.baseline
        m: dict = {
            "requests": res.n_requests,
            "served": res.served,
            "unserved": res.unserved,
            "poolable": res.poolable_customers,
            "pooled": res.pooled_customers,
            "unserved_pct": Fraction(res.unserved, res.n_requests) * 100 if res.n_requests else None,
            "pooled_share_pct": (
                Fraction(res.pooled_customers, res.poolable_customers) * 100
                if res.poolable_customers else None
            ),
            "fleet_distance": res.fleet_distance,
            "fares": res.fares_total,
            "profit": res.profit,
            "sro_distance": sro.fleet_distance,
            "sro_profit": sro.profit,
            "distance_saving_pct": (
                (1 - Fraction(res.fleet_distance, sro.fleet_distance)) * 100
                if sro.fleet_distance else None
            ),
            "profit_delta_pct": (
                Fraction(res.profit - sro.profit) / sro.profit * 100 if sro.profit > 0 else None
            ),
        }
        served_poolable = [o for o in res.per_customer.values() if o.poolable]
        if served_poolable:
            m["mean_cost_per_poolable"] = Fraction(
                sum(o.total_cost for o in served_poolable), 1
            ) / len(served_poolable)
            m["cost_reduction_pct"] = (
                sum(
                    1 - Fraction(o.total_cost) / o.baseline_solitary_cost
                    for o in served_poolable
                )
                / len(served_poolable)
                * 100
            )
        else:
            m["mean_cost_per_poolable"] = None
            m["cost_reduction_pct"] = None
        m["brackets"] = savings_brackets(res)
        return m


def savings_brackets(result: SimResult, thresholds=BRACKETS):
    """Share of served poolable customers saving at least each threshold
    relative to their frozen solitary baselines; None when there are none."""
    poolable = [o for o in result.per_customer.values() if o.poolable]
    if not poolable:
        return {t: None for t in thresholds}
    out = {}
    for t in thresholds:
        hits = sum(
            1
            for o in poolable
            if o.baseline_solitary_cost - o.total_cost >= t * o.baseline_solitary_cost
        )
        out[t] = Fraction(hits, len(poolable)) * 100
    return out


def run_grid(grid: ScenarioGrid, trips: list[Request], net: RoadNetwork) -> list[CellOutcome]:
    """Execute every grid cell with its paired baseline, seeds innermost."""
    sro_cache: dict[tuple, SimResult] = {}
    outcomes: list[CellOutcome] = []

    def sro_for(wait, fleet, seed):
        key = (wait, fleet, seed)
        if key not in sro_cache:
            cfg = SimConfig(
                mechanism=Mechanism.SRO,
                tariff=grid.tariff(),
                fleet_size=fleet,
                mar=Fraction(0),
                rng_seed=seed,
                network=net,
                horizon=grid.horizon,
                max_wait_override=wait,
                vot_values=grid.vot_values,
            )
            sro_cache[key] = run_sim(cfg, trips)
        return sro_cache[key]

    for mech, params in grid.cells():
        for seed in grid.seeds:
            baseline = sro_for(params["max_wait"], params["fleet"], seed)
            if mech == Mechanism.SRO:
                outcomes.append(CellOutcome(mech.value, dict(params), seed, baseline, baseline))
                continue
            tariff = grid.tariff(
                change_fee=params.get("fee"),
                discount=params.get("discount"),
                detour=params.get("detour"),
            )
            cfg = SimConfig(
                mechanism=mech,
                tariff=tariff,
                fleet_size=params["fleet"],
                mar=params["mar"],
                rng_seed=seed,
                network=net,
                horizon=grid.horizon,
                max_wait_override=params["max_wait"],
                split_scheme=grid.split_scheme,
                split_thresholds=grid.split_thresholds,
                vot_values=grid.vot_values,
            )
            outcomes.append(
                CellOutcome(mech.value, dict(params), seed, run_sim(cfg, trips), baseline)
            )
    return outcomes


@dataclass
class MechanismSummary:
    """Seed-averaged metrics of one mechanism setting across MAR levels."""

    label: str
    mechanism: str
    params: dict
    per_mar: dict  # mar -> {metric: Fraction | None}

    def mars(self):
        return tuple(sorted(self.per_mar))

    def series(self, metric):
        return [self.per_mar[m][metric] for m in self.mars()]


def _mean(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return sum(vals, Fraction(0)) / len(vals)


def summarize(outcomes: list[CellOutcome]) -> list[MechanismSummary]:
    """Average cell metrics over seeds, grouped by mechanism setting."""
    groups: dict[tuple, dict] = {}
    for oc in outcomes:
        if oc.mechanism == Mechanism.SRO.value:
            continue
        p = oc.params
        key = (
            oc.mechanism, p["max_wait"], p["fleet"],
            p.get("fee"), p.get("discount"), p.get("detour"),
        )
        groups.setdefault(key, {}).setdefault(p["mar"], []).append(oc.metrics())

    summaries = []
    for key in sorted(groups, key=repr):
        mech, wait, fleet, fee, disc, det = key
        bits = [mech, f"w{wait // USEC}", f"u{fleet}"]
        if fee is not None:
            bits.append(f"fee{fmt_usd(fee)}")
        if disc is not None:
            bits.append(f"disc{fmt4(disc)}")
        if det is not None:
            bits.append(f"det{fmt4(det)}")
        per_mar = {}
        for mar, rows in groups[key].items():
            agg = {}
            for metric in (
                "unserved_pct", "pooled_share_pct", "distance_saving_pct",
                "profit_delta_pct", "profit", "mean_cost_per_poolable",
                "cost_reduction_pct",
            ):
                agg[metric] = _mean(r[metric] for r in rows)
            agg["brackets"] = {
                t: _mean(r["brackets"][t] for r in rows) for t in BRACKETS
            }
            per_mar[mar] = agg
        summaries.append(
            MechanismSummary(
                label="-".join(bits),
                mechanism=mech,
                params={"max_wait": wait, "fleet": fleet, "fee": fee,
                        "discount": disc, "detour": det},
                per_mar=per_mar,
            )
        )
    return summaries


@dataclass(frozen=True)
class DominanceResult:
    kind: str  # "dominates" | "partial" | "none"
    mar_lo: Fraction | None = None
    mar_hi: Fraction | None = None


def pareto_dominance(a: MechanismSummary, b: MechanismSummary) -> DominanceResult:
    """Weakly higher provider profit and weakly lower customer cost.

    Full dominance must hold at every MAR; otherwise the longest contiguous
    MAR range where both inequalities hold is reported (earliest on ties),
    or `none` when there is no such range.
    """
    mars = a.mars()
    if mars != b.mars():
        raise MismatchedGrids(f"{a.label} covers {mars}, {b.label} covers {b.mars()}")
    ok = []
    for mar in mars:
        pa, pb = a.per_mar[mar]["profit"], b.per_mar[mar]["profit"]
        ca, cb = a.per_mar[mar]["mean_cost_per_poolable"], b.per_mar[mar]["mean_cost_per_poolable"]
        if None in (pa, pb, ca, cb):
            ok.append(False)
        else:
            ok.append(pa >= pb and ca <= cb)
    if all(ok):
        return DominanceResult("dominates", mars[0], mars[-1])
    best_len, best_lo, best_hi = 0, None, None
    i = 0
    while i < len(mars):
        if ok[i]:
            j = i
            while j + 1 < len(mars) and ok[j + 1]:
                j += 1
            if j - i + 1 > best_len:
                best_len, best_lo, best_hi = j - i + 1, mars[i], mars[j]
            i = j + 1
        else:
            i += 1
    if best_len:
        return DominanceResult("partial", best_lo, best_hi)
    return DominanceResult("none")


# ---------------------------------------------------------------------------
# desk-scale trip corpus
# ---------------------------------------------------------------------------

def synthetic_trips(net: RoadNetwork, n: int, horizon_s: int, seed: int,
                    max_wait_s: int = 600) -> list[Request]:
    """Seeded synthetic demand: uniform origin/destination pairs and arrival
    times; poolable flags and values of time are left for the simulation."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    rows = []
    for _ in range(n):
        o, d = rng.choice(net.n_nodes, size=2, replace=False)
        rows.append((int(rng.integers(0, horizon_s + 1)), int(o), int(d)))
    rows.sort()
    return [
        Request.build(i, net.node_ids[o], net.node_ids[d], t, max_wait_s)
        for i, (t, o, d) in enumerate(rows)
    ]


# ---------------------------------------------------------------------------
# tabular views
# ---------------------------------------------------------------------------

SUMMARY_COLUMNS = (
    "mechanism", "change_fee_usd", "discount_factor", "detour_factor",
    "max_wait_s", "fleet_size", "mar", "seed", "split_scheme",
    "requests", "served", "unserved", "poolable", "pooled",
    "fleet_distance_mi", "fares_usd", "profit_usd",
    "sro_distance_mi", "sro_profit_usd",
    "distance_saving_pct", "profit_delta_pct",
    "mean_cost_per_poolable_usd", "cost_reduction_pct",
    "br0", "br5", "br10", "br15", "br20",
)


def _opt(value, render):
    return "n/a" if value is None else render(value)


def summary_row(oc: CellOutcome, split_scheme: str) -> tuple:
    m = oc.metrics()
    p = oc.params
    return (
        oc.mechanism,
        _opt(p.get("fee"), fmt_usd),
        _opt(p.get("discount"), fmt4),
        _opt(p.get("detour"), fmt4),
        p["max_wait"] // USEC,
        p["fleet"],
        fmt4(p.get("mar", Fraction(0))),
        oc.seed,
        split_scheme,
        m["requests"], m["served"], m["unserved"], m["poolable"], m["pooled"],
        fmt_miles(m["fleet_distance"]),
        fmt_usd(m["fares"]),
        fmt_usd(m["profit"]),
        fmt_miles(m["sro_distance"]),
        fmt_usd(m["sro_profit"]),
        _opt(m["distance_saving_pct"], fmt4),
        _opt(m["profit_delta_pct"], fmt4),
        _opt(m["mean_cost_per_poolable"], fmt_usd),
        _opt(m["cost_reduction_pct"], fmt4),
        *(_opt(m["brackets"][t], fmt4) for t in BRACKETS),
    )
