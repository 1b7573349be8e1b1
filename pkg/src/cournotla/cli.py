"""Command line interface: clear / nash / learn / report."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import harness
from .dispatch import clear_market, kkt_check
from .model import BidProfile, Scenario, load_scenario, profit_of, threebus
from .oracle import iterate_nash


def _load(path: str | None, congested: bool = False) -> Scenario:
    if path is None or path == "threebus":
        return threebus(congested=congested)
    scenario = load_scenario(path)
    if congested:
        scenario = scenario.with_line_cap("1-3", 16.0)
    return scenario


def _apply_line_caps(scenario: Scenario, caps: list[str]) -> Scenario:
    for spec in caps:
        name, _, value = spec.partition("=")
        if not value:
            raise SystemExit(f"--line-cap expects NAME=MW, got {spec!r}")
        scenario = scenario.with_line_cap(name, None if value == "none" else float(value))
    return scenario


def cmd_clear(args) -> int:
    scenario = _load(args.scenario)
    scenario = _apply_line_caps(scenario, args.line_cap)
    quantities = [float(x) for x in args.bids.split(",")]
    if len(quantities) != len(scenario.suppliers):
        raise SystemExit(
            f"expected {len(scenario.suppliers)} bids, got {len(quantities)}"
        )
    bids = BidProfile({s.id: q for s, q in zip(scenario.suppliers, quantities)})
    result = clear_market(scenario.network, bids, scenario.suppliers, scenario.consumers)

    print(f"objective (consumer welfare): {result.objective:.2f} $/h")
    print(f"{'bus':>4} {'demand MW':>12} {'lmp $/MWh':>12}")
    for b in sorted(result.demands):
        print(f"{b + 1:>4} {result.demands[b]:>12.3f} {result.lmps[b]:>12.4f}")
    print(f"{'line':>6} {'flow MW':>12} {'capacity':>10} {'binding':>8}")
    for i, ln in enumerate(scenario.network.lines):
        cap = "-" if ln.capacity is None else f"{ln.capacity:.1f}"
        mark = ""
        for bi, direction in result.binding_lines:
            if bi == i:
                mark = direction
        print(f"{ln.name:>6} {result.flows[i]:>12.3f} {cap:>10} {mark:>8}")
    report = kkt_check(scenario.network, bids, scenario.suppliers, scenario.consumers, result)
    print(f"kkt max violation: {report.max_violation:.3e}")

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bus", "demand_mw", "lmp"])
            for b in sorted(result.demands):
                writer.writerow([b + 1, result.demands[b], result.lmps[b]])
            writer.writerow([])
            writer.writerow(["line", "flow_mw", "capacity"])
            for i, ln in enumerate(scenario.network.lines):
                writer.writerow([ln.name, result.flows[i], ln.capacity])
    return 0


def cmd_nash(args) -> int:
    scenario = _load(args.scenario, congested=args.congested)
    scenario = _apply_line_caps(scenario, args.line_cap)
    result = iterate_nash(scenario, grid_step=args.grid, max_rounds=args.max_rounds)
    status = "converged" if result.converged else "NOT CONVERGED"
    if result.regime_locked:
        locked = ", ".join(
            f"{scenario.network.lines[i].name}{d}" for i, d in result.locked_lines
        )
        status += f" (regime-locked: {locked})"
    print(f"iterated best response: {status} after {result.iterations} sweeps")
    print(f"{'supplier':<10} {'quantity MW':>12} {'profit $/h':>12} {'lmp $/MWh':>10}")
    for s in scenario.suppliers:
        print(
            f"{s.id:<10} {result.quantities[s.id]:>12.1f} "
            f"{result.profits[s.id]:>12.1f} {result.supplier_lmps[s.id]:>10.4f}"
        )
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["supplier", "quantity_mw", "profit_per_h", "lmp"])
            for s in scenario.suppliers:
                writer.writerow(
                    [s.id, result.quantities[s.id], result.profits[s.id], result.supplier_lmps[s.id]]
                )
    return 0 if result.converged else 1


def cmd_learn(args) -> int:
    scenario = _load(args.scenario, congested=args.congested)
    scenario = _apply_line_caps(scenario, args.line_cap)
    fixed = {}
    for spec in args.fix:
        sid, _, value = spec.partition("=")
        if not value:
            raise SystemExit(f"--fix expects SUPPLIER=MW, got {spec!r}")
        fixed[sid] = float(value)
    if args.mode == harness.RATIONALITY and not fixed:
        # the bundled rationality experiment: supplier 1 learns
        nash = iterate_nash(scenario)
        fixed = {
            sid: q for sid, q in nash.quantities.items()
            if sid != scenario.suppliers[0].id
        }
        print(f"fixed opponents at benchmark: {fixed}")
    spec = harness.ScenarioSpec(scenario=scenario, mode=args.mode, fixed_strategies=fixed)

    benchmark = iterate_nash(scenario, grid_step=args.grid)
    if not benchmark.converged:
        print("warning: benchmark best-response iteration did not converge", file=sys.stderr)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [args.seed]

    ok = benchmark.converged
    if len(seeds) == 1:
        trace = harness.run_scenario(
            harness.ScenarioSpec(
                scenario=scenario, mode=args.mode, fixed_strategies=fixed, seed=seeds[0]
            )
        )
        harness.write_trace(trace, out_dir / f"trace_seed{seeds[0]}.csv")
        report = harness.summarize(trace, benchmark)
        print(report.as_text())
        (out_dir / f"report_seed{seeds[0]}.json").write_text(json.dumps(report.as_dict(), indent=2))
    else:
        sweep_report = harness.sweep(spec, seeds, benchmark)
        for rep in sweep_report.reports:
            print(f"--- seed {rep.seed}")
            print(rep.as_text())
        (out_dir / "sweep.json").write_text(json.dumps(sweep_report.as_dict(), indent=2))
        for sid in spec.learning_supplier_ids():
            lo, hi = sweep_report.iqr_action(sid)
            print(
                f"{sid}: median action {sweep_report.median_action(sid):.1f} MW "
                f"(IQR {lo:.1f}-{hi:.1f}), median profit {sweep_report.median_profit(sid):.1f} $/h"
            )
        if sweep_report.failures:
            print(f"failed seeds: {sweep_report.failures}", file=sys.stderr)
            ok = False
    (out_dir / "benchmark.json").write_text(
        json.dumps(
            {
                "quantities": benchmark.quantities,
                "profits": benchmark.profits,
                "supplier_lmps": benchmark.supplier_lmps,
                "converged": benchmark.converged,
                "regime_locked": benchmark.regime_locked,
            },
            indent=2,
        )
    )
    return 0 if ok else 1


def cmd_report(args) -> int:
    trace = harness.read_trace(args.trace)
    raw = json.loads(Path(args.benchmark).read_text())
    from .oracle import NashResult

    benchmark = NashResult(
        quantities=raw["quantities"],
        profits=raw["profits"],
        lmps={},
        supplier_lmps=raw.get("supplier_lmps", {}),
        iterations=0,
        converged=raw.get("converged", True),
        regime_locked=raw.get("regime_locked", False),
    )
    report = harness.summarize(trace, benchmark, tail_window=args.tail_window)
    print(report.as_text())
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="cournotla", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clear", help="clear the market for a fixed bid profile")
    p.add_argument("--scenario", default=None, help="scenario JSON (default: bundled threebus)")
    p.add_argument("--bids", required=True, help="comma-separated MW, supplier order")
    p.add_argument("--line-cap", action="append", default=[], metavar="LINE=MW")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_clear)

    p = sub.add_parser("nash", help="iterated best-response equilibrium benchmark")
    p.add_argument("--scenario", default=None)
    p.add_argument("--grid", type=float, default=1.0)
    p.add_argument("--max-rounds", type=int, default=200)
    p.add_argument("--congested", action="store_true", help="cap line 1-3 at 16 MW")
    p.add_argument("--line-cap", action="append", default=[], metavar="LINE=MW")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_nash)

    p = sub.add_parser("learn", help="run learning experiments")
    p.add_argument("--scenario", default=None)
    p.add_argument("--mode", choices=[harness.RATIONALITY, harness.CONVERGENCE], required=True)
    p.add_argument("--fix", action="append", default=[], metavar="SUPPLIER=MW",
                   help="fix a supplier's strategy (rationality mode)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", default=None, help="comma-separated seed list for a sweep")
    p.add_argument("--out", default="runs")
    p.add_argument("--grid", type=float, default=1.0)
    p.add_argument("--congested", action="store_true")
    p.add_argument("--line-cap", action="append", default=[], metavar="LINE=MW")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("report", help="compare a saved trace against a benchmark")
    p.add_argument("--trace", required=True)
    p.add_argument("--benchmark", required=True)
    p.add_argument("--tail-window", type=int, default=500)
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
