"""Command-line interface.

Subcommands:

* ``simulate`` -- run a scenario grid from a JSON config over a trip file
  or a synthetic corpus, writing summary/decision/split/run-account CSVs.
* ``analyze``  -- aggregate a summary CSV into per-MAR means, savings
  brackets and pairwise dominance relations.
* ``verify``   -- run the built-in theorem fixtures and report verdicts.
* ``split``    -- re-divide run fares from a run-account CSV under either
  cost-sharing scheme.
* ``bench``    -- compare the jitted and numpy shortest-path kernels.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import io as rio
from .costshare import goalprog_split, shapley_split
from .harness import (
    SUMMARY_COLUMNS,
    ScenarioGrid,
    pareto_dominance,
    run_grid,
    summary_row,
    synthetic_trips,
)
from .mechanisms import Mechanism
from .netgraph import load_network_csv, make_grid
from .units import USEC, fmt4, fraction_from, mils_from_usd, usec_from_seconds, fmt_usd
from .verify import run_all_fixtures


def _network_from_config(cfg):
    net_cfg = cfg["network"]
    if "grid" in net_cfg:
        g = net_cfg["grid"]
        return make_grid(g["rows"], g["cols"], g["edge_length_mi"], g["speed_mph"])
    return load_network_csv(net_cfg["file"])


def _as_list(value):
    return value if isinstance(value, list) else [value]


def _grid_from_config(cfg) -> ScenarioGrid:
    tariff = cfg.get("tariff", {})
    thresholds = tuple(
        Fraction(int(p), 100) for p in cfg.get("split_thresholds_pct", (5, 10, 15, 20))
    )
    return ScenarioGrid(
        mechanisms=tuple(Mechanism(m) for m in cfg.get("mechanisms", ["SRO", "PCP", "CCP"])),
        max_waits=tuple(usec_from_seconds(w) for w in _as_list(cfg.get("max_wait_s", 360))),
        mars=tuple(fraction_from(m) for m in _as_list(cfg.get("mar", 0.5))),
        fleet_sizes=tuple(_as_list(cfg.get("fleet_size", 30))),
        change_fees=tuple(mils_from_usd(f) for f in _as_list(tariff.get("change_fee_usd", 2.0))),
        discount_factors=tuple(
            fraction_from(d) for d in _as_list(tariff.get("discount_factor", 0.8))
        ),
        detour_factors=tuple(
            fraction_from(d) for d in _as_list(tariff.get("detour_factor", 0.3))
        ),
        seeds=tuple(_as_list(cfg.get("seeds", [1]))),
        base_fare=mils_from_usd(tariff.get("base_fare_usd", 2.50)),
        per_mile=mils_from_usd(tariff.get("per_mile_usd", 2.50)),
        provider_cost_per_mile=mils_from_usd(tariff.get("provider_cost_per_mile_usd", 2.945)),
        vot_values=tuple(
            mils_from_usd(v) for v in cfg.get(
                "value_of_time_usd_per_min", [0.166, 0.195, 0.225, 0.254, 0.283]
            )
        ),
        split_scheme=cfg.get("split_scheme", "shapley"),
        split_thresholds=thresholds,
        horizon=usec_from_seconds(cfg.get("horizon_s", 1800)),
    )


def _load_trips(spec: str, net, cfg):
    if spec.startswith("synthetic:"):
        opts = {}
        for part in spec[len("synthetic:"):].split(","):
            if part:
                key, _, val = part.partition("=")
                opts[key.strip()] = val.strip()
        n = int(opts.get("n", 500))
        seed = int(opts.get("seed", 1))
        horizon_s = int(opts.get("horizon_s", cfg.get("horizon_s", 1800)))
        return synthetic_trips(net, n, horizon_s, seed)
    return rio.load_trips_csv(spec)


def cmd_simulate(args) -> int:
    cfg = json.loads(Path(args.config).read_text())
    net = _network_from_config(cfg)
    grid = _grid_from_config(cfg)
    trips = _load_trips(args.trips, net, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    outcomes = run_grid(grid, trips, net)
    rio.write_csv(
        out / "summary.csv",
        SUMMARY_COLUMNS,
        (summary_row(oc, grid.split_scheme) for oc in outcomes),
    )

    def cell_prefix(oc):
        return (
            oc.mechanism,
            "n/a" if oc.params.get("fee") is None else fmt_usd(oc.params["fee"]),
            "n/a" if oc.params.get("discount") is None else fmt4(oc.params["discount"]),
            "n/a" if oc.params.get("detour") is None else fmt4(oc.params["detour"]),
            oc.params["max_wait"] // USEC,
            oc.params["fleet"],
            fmt4(oc.params.get("mar", Fraction(0))),
            oc.seed,
        )

    cell_cols = (
        "mechanism", "change_fee_usd", "discount_factor", "detour_factor",
        "max_wait_s", "fleet_size", "mar", "seed",
    )
    rio.write_csv(
        out / "decisions.csv",
        cell_cols + rio.DECISION_COLUMNS,
        (row for oc in outcomes for row in rio.decision_rows(oc.result, cell_prefix(oc))),
    )
    rio.write_csv(
        out / "splits.csv",
        cell_cols + rio.SPLIT_COLUMNS,
        (row for oc in outcomes for row in rio.split_rows(oc.result, cell_prefix(oc))),
    )
    rio.write_csv(
        out / "run_accounts.csv",
        cell_cols + rio.RUN_ACCOUNT_COLUMNS,
        (row for oc in outcomes for row in rio.run_account_rows(oc.result, cell_prefix(oc))),
    )
    print(f"wrote {len(outcomes)} simulations to {out}")
    return 0


def cmd_analyze(args) -> int:
    # aggregation re-runs on the stored exact rows would lose precision;
    # instead analyze re-executes nothing and works off summary.csv text
    import csv as _csv

    path = Path(args.indir) / "summary.csv"
    with open(path, newline="") as fh:
        rows = list(_csv.DictReader(fh))
    if not rows:
        print("summary.csv is empty", file=sys.stderr)
        return 1

    key_fields = ("mechanism", "change_fee_usd", "discount_factor", "detour_factor",
                  "max_wait_s", "fleet_size")
    groups: dict[tuple, dict[str, list[dict]]] = {}
    for row in rows:
        if row["mechanism"] == "SRO":
            continue
        key = tuple(row[k] for k in key_fields)
        groups.setdefault(key, {}).setdefault(row["mar"], []).append(row)

    def mean(vals):
        nums = [Fraction(v) for v in vals if v != "n/a"]
        return None if not nums else sum(nums) / len(nums)

    out = Path(args.out) if args.out else Path(args.indir)
    agg_rows = []
    bracket_rows = []
    per_label = {}
    for key in sorted(groups):
        label = "|".join(key)
        per_mar = {}
        for mar in sorted(groups[key], key=Fraction):
            cell = groups[key][mar]
            unserved = mean(
                Fraction(int(r["unserved"]), int(r["requests"])) * 100 for r in cell
            )
            saving = mean(r["distance_saving_pct"] for r in cell)
            profit = mean(r["profit_usd"] for r in cell)
            cost = mean(r["mean_cost_per_poolable_usd"] for r in cell)
            agg_rows.append(
                (label, mar, fmt4(unserved) if unserved is not None else "n/a",
                 fmt4(saving) if saving is not None else "n/a",
                 fmt4(profit) if profit is not None else "n/a",
                 fmt4(cost) if cost is not None else "n/a")
            )
            per_mar[Fraction(mar)] = {"profit": profit, "mean_cost_per_poolable": cost}
            if args.brackets:
                shares = [mean(r[col] for r in cell) for col in ("br0", "br5", "br10", "br15", "br20")]
                bracket_rows.append(
                    (label, mar, *(fmt4(s) if s is not None else "n/a" for s in shares))
                )
        per_label[label] = per_mar

    rio.write_csv(out / "aggregate.csv",
                  ("setting", "mar", "unserved_pct", "distance_saving_pct",
                   "profit_usd", "mean_cost_per_poolable_usd"), agg_rows)
    if args.brackets:
        rio.write_csv(out / "brackets.csv",
                      ("setting", "mar", "br0", "br5", "br10", "br15", "br20"), bracket_rows)
        print(f"wrote {out / 'brackets.csv'}")

    if args.pareto:
        from .harness import MechanismSummary

        summaries = [
            MechanismSummary(label=lbl, mechanism=lbl.split("|")[0], params={}, per_mar=pm)
            for lbl, pm in per_label.items()
        ]
        pareto_rows = []
        for a in summaries:
            for b in summaries:
                if a.label == b.label or a.mars() != b.mars():
                    continue
                rel = pareto_dominance(a, b)
                if rel.kind != "none":
                    pareto_rows.append(
                        (a.label, b.label, rel.kind,
                         fmt4(rel.mar_lo) if rel.mar_lo is not None else "",
                         fmt4(rel.mar_hi) if rel.mar_hi is not None else "")
                    )
        rio.write_csv(out / "pareto.csv",
                      ("dominant", "dominated", "relation", "mar_lo", "mar_hi"), pareto_rows)
        print(f"wrote {out / 'pareto.csv'}")
    print(f"wrote {out / 'aggregate.csv'}")
    return 0


def cmd_verify(args) -> int:
    verdicts = run_all_fixtures()
    failed = 0
    for v in verdicts:
        line = f"[{'PASS' if v.passed else 'FAIL'}] {v.fixture} :: {v.check} :: {v.detail}"
        print(line)
        failed += not v.passed
    if args.out:
        rio.write_csv(args.out, ("fixture", "check", "pass", "detail"),
                      (v.row() for v in verdicts))
        print(f"wrote {args.out}")
    return 1 if failed else 0


def cmd_split(args) -> int:
    accounts = rio.load_run_accounts_csv(args.runs)
    thresholds = tuple(Fraction(int(p), 100) for p in args.thresholds.split(","))
    rows = []
    for acct in accounts:
        if args.scheme == "shapley":
            if len(acct.members) != 2:
                print(
                    f"run {acct.run_id}: shapley splits rider pairs only "
                    f"({len(acct.members)} riders; chained runs are priced per pooling "
                    f"event inside the simulation) - use goalprog here",
                    file=sys.stderr,
                )
                return 2
            res = shapley_split(acct)
        else:
            res = goalprog_split(acct, thresholds)
        by_cust = {m.customer: m for m in acct.members}
        for e in res.entries:
            m = by_cust[e.customer]
            rows.append(
                (acct.run_id, e.customer, fmt_usd(m.solitary_cost),
                 fmt_usd(m.pooled_time_cost), fmt_usd(e.fare), fmt4(e.saving))
            )
    target = args.out or "-"
    if target == "-":
        print(",".join(rio.SPLIT_COLUMNS))
        for row in rows:
            print(",".join(str(x) for x in row))
    else:
        rio.write_csv(target, rio.SPLIT_COLUMNS, rows)
        print(f"wrote {target}")
    return 0


def cmd_bench(args) -> int:
    from .bench import run_benchmark

    run_benchmark(sizes=tuple(int(s) for s in args.sizes.split(",")), repeats=args.repeats)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ridepool", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario grid")
    p.add_argument("--config", required=True, help="JSON scenario config")
    p.add_argument("--trips", required=True,
                   help="trip CSV path or synthetic:n=...,seed=...")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("analyze", help="aggregate a summary.csv")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--brackets", action="store_true")
    p.add_argument("--pareto", action="store_true")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("verify", help="run theorem fixtures")
    p.add_argument("--fixtures", default="all", choices=["all"])
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("split", help="re-divide run fares")
    p.add_argument("--runs", required=True, help="run-account CSV")
    p.add_argument("--scheme", required=True, choices=["shapley", "goalprog"])
    p.add_argument("--thresholds", default="5,10,15,20",
                   help="percent thresholds for goalprog")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("bench", help="compare shortest-path kernels")
    p.add_argument("--sizes", default="10,20,30")
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(fn=cmd_bench)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
