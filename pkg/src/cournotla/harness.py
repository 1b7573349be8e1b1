"""Experiment orchestration: rationality and convergence runs, seed sweeps,
trace CSV files and benchmark-comparison reports.
"""
from __future__ import annotations

import csv
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import learner as la
from .dispatch import InfeasibleDispatchError, clear_market
from .learner import LearnerParams, LearnerState
from .model import BidProfile, ModelError, Scenario, profit_of
from .oracle import NashResult, percentage_error

RATIONALITY = "rationality"
CONVERGENCE = "convergence"

TRACE_HEADER = ["t", "supplier", "kind", "action_mw", "profit_per_h", "lmp"]


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: Scenario
    mode: str
    fixed_strategies: dict[str, float] = field(default_factory=dict)
    seed: int = 0
    line_overrides: dict[str, float | None] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (RATIONALITY, CONVERGENCE):
            raise ModelError("mode must be 'rationality' or 'convergence'")
        learners = self.learning_supplier_ids()
        if self.mode == RATIONALITY and len(learners) != 1:
            raise ModelError("rationality mode needs exactly one learning supplier")
        if self.mode == CONVERGENCE and self.fixed_strategies:
            raise ModelError("convergence mode must not fix any supplier")

    def learning_supplier_ids(self) -> list[str]:
        return [s.id for s in self.scenario.suppliers if s.id not in self.fixed_strategies]

    def effective_scenario(self) -> Scenario:
        scenario = self.scenario
        for line_name, cap in self.line_overrides.items():
            scenario = scenario.with_line_cap(line_name, cap)
        return scenario


@dataclass(frozen=True)
class TraceRecord:
    t: int
    supplier: str
    kind: str
    action: float
    profit: float
    lmp: float


@dataclass(frozen=True)
class RunTrace:
    seed: int
    records: tuple[TraceRecord, ...]
    final_states: dict[str, LearnerState]
    infeasible_rounds: int = 0

    def for_supplier(self, supplier_id: str) -> list[TraceRecord]:
        return [r for r in self.records if r.supplier == supplier_id]


def run_scenario(spec: ScenarioSpec) -> RunTrace:
    """Execute M market rounds: every round collects all bids, clears the
    market once, pays each supplier its nodal price, and advances every
    learner by one comparison step.  Fully determined by the seed."""
    scenario = spec.effective_scenario()
    rng = np.random.default_rng(spec.seed)
    learning = spec.learning_supplier_ids()
    params = {
        sid: LearnerParams.from_config(
            scenario.learner, scenario.supplier(sid).g_min, scenario.supplier(sid).g_max
        )
        for sid in learning
    }
    states = {sid: LearnerState.initial(scenario.learner, params[sid]) for sid in learning}
    records: list[TraceRecord] = []
    infeasible = 0
    M = scenario.learner.iteration_limit

    for _t in range(1, M + 1):
        quantities = dict(spec.fixed_strategies)
        for sid in learning:
            quantities[sid] = la.select_action(states[sid], params[sid], rng)
        bids = BidProfile(quantities)
        try:
            result = clear_market(scenario.network, bids, scenario.suppliers, scenario.consumers)
            lmps = {s.id: result.lmps[s.node] for s in scenario.suppliers}
            profits = {
                s.id: profit_of(s, quantities[s.id], lmps[s.id]) for s in scenario.suppliers
            }
        except InfeasibleDispatchError:
            # worst admissible outcome: run at zero revenue, pay the fixed cost
            infeasible += 1
            lmps = {s.id: float("nan") for s in scenario.suppliers}
            profits = {s.id: -s.o for s in scenario.suppliers}
        for sid in learning:
            state = states[sid]
            kind = la.MEAN_PLAY if la.is_mean_play(state.t) else la.SAMPLED_PLAY
            records.append(
                TraceRecord(
                    t=state.t, supplier=sid, kind=kind, action=quantities[sid],
                    profit=profits[sid], lmp=lmps[sid],
                )
            )
            states[sid] = la.record_and_update(state, quantities[sid], profits[sid], params[sid])

    return RunTrace(
        seed=spec.seed,
        records=tuple(records),
        final_states=states,
        infeasible_rounds=infeasible,
    )


def write_trace(trace: RunTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for r in trace.records:
            writer.writerow([r.t, r.supplier, r.kind, repr(r.action), repr(r.profit), repr(r.lmp)])


def read_trace(path: str | Path, seed: int = 0) -> RunTrace:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                TraceRecord(
                    t=int(row["t"]), supplier=row["supplier"], kind=row["kind"],
                    action=float(row["action_mw"]), profit=float(row["profit_per_h"]),
                    lmp=float(row["lmp"]),
                )
            )
    return RunTrace(seed=seed, records=tuple(records), final_states={})


@dataclass(frozen=True)
class SupplierSummary:
    supplier: str
    action: float
    profit: float
    lmp: float
    benchmark_action: float
    benchmark_profit: float
    benchmark_lmp: float
    action_error_pct: float
    profit_error_pct: float
    lmp_error_pct: float


@dataclass(frozen=True)
class RunReport:
    seed: int
    tail_window: int
    suppliers: tuple[SupplierSummary, ...]

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "tail_window": self.tail_window,
            "suppliers": [vars(s) for s in self.suppliers],
        }

    def as_text(self) -> str:
        lines = [
            f"{'supplier':<10}{'action':>10}{'bench':>10}{'err%':>8}"
            f"{'profit':>12}{'bench':>12}{'err%':>8}{'lmp':>9}{'bench':>9}{'err%':>8}"
        ]
        for s in self.suppliers:
            lines.append(
                f"{s.supplier:<10}{s.action:>10.1f}{s.benchmark_action:>10.1f}"
                f"{s.action_error_pct:>8.2f}{s.profit:>12.1f}{s.benchmark_profit:>12.1f}"
                f"{s.profit_error_pct:>8.2f}{s.lmp:>9.2f}{s.benchmark_lmp:>9.2f}"
                f"{s.lmp_error_pct:>8.2f}"
            )
        return "\n".join(lines)


def tail_means(trace: RunTrace, supplier_id: str, tail_window: int) -> tuple[float, float, float]:
    """Tail-window means of (action, profit, lmp) over mean-play records only.

    The learned policy is the mean of the distribution, so sampled plays are
    excluded from the reported numbers."""
    recs = trace.for_supplier(supplier_id)
    if not recs:
        raise ModelError(f"no records for supplier {supplier_id}")
    t_max = max(r.t for r in recs)
    tail = [r for r in recs if r.t > t_max - tail_window and r.kind == la.MEAN_PLAY]
    actions = [r.action for r in tail]
    profits = [r.profit for r in tail]
    lmps = [r.lmp for r in tail if not np.isnan(r.lmp)]
    return (
        float(np.mean(actions)),
        float(np.mean(profits)),
        float(np.mean(lmps)) if lmps else float("nan"),
    )


def summarize(trace: RunTrace, benchmark: NashResult, tail_window: int = 500) -> RunReport:
    """Tail-mean action/profit/LMP per learning supplier against a benchmark."""
    supplier_ids = sorted({r.supplier for r in trace.records})
    out = []
    for sid in supplier_ids:
        action, profit, lmp = tail_means(trace, sid, tail_window)
        b_action = benchmark.quantities[sid]
        b_profit = benchmark.profits[sid]
        b_lmp = benchmark.supplier_lmps.get(sid)
        out.append(
            SupplierSummary(
                supplier=sid,
                action=action,
                profit=profit,
                lmp=lmp,
                benchmark_action=b_action,
                benchmark_profit=b_profit,
                benchmark_lmp=b_lmp if b_lmp is not None else float("nan"),
                action_error_pct=percentage_error(action, b_action),
                profit_error_pct=percentage_error(profit, b_profit),
                lmp_error_pct=percentage_error(lmp, b_lmp) if b_lmp else float("nan"),
            )
        )
    return RunReport(seed=trace.seed, tail_window=tail_window, suppliers=tuple(out))


@dataclass(frozen=True)
class SweepReport:
    seeds: tuple[int, ...]
    reports: tuple[RunReport, ...]
    failures: dict[int, str]

    def median_action(self, supplier_id: str) -> float:
        return statistics.median(self._values(supplier_id, "action"))

    def median_profit(self, supplier_id: str) -> float:
        return statistics.median(self._values(supplier_id, "profit"))

    def median_error(self, supplier_id: str, which: str) -> float:
        return statistics.median(self._values(supplier_id, f"{which}_error_pct"))

    def iqr_action(self, supplier_id: str) -> tuple[float, float]:
        vals = sorted(self._values(supplier_id, "action"))
        return (
            float(np.percentile(vals, 25)),
            float(np.percentile(vals, 75)),
        )

    def _values(self, supplier_id: str, attr: str) -> list[float]:
        vals = []
        for rep in self.reports:
            for s in rep.suppliers:
                if s.supplier == supplier_id:
                    vals.append(getattr(s, attr))
        if not vals:
            raise ModelError(f"no sweep data for supplier {supplier_id}")
        return vals

    def as_dict(self) -> dict:
        return {
            "seeds": list(self.seeds),
            "failures": dict(self.failures),
            "reports": [r.as_dict() for r in self.reports],
        }


def _run_one(args) -> RunReport:
    spec, benchmark, tail_window = args
    trace = run_scenario(spec)
    return summarize(trace, benchmark, tail_window)


def sweep(
    spec: ScenarioSpec,
    seeds: list[int],
    benchmark: NashResult,
    tail_window: int = 500,
    max_workers: int | None = None,
) -> SweepReport:
    """Run the scenario once per seed (in parallel) and aggregate reports.

    Per-seed failures are isolated and reported, never aborting the sweep.
    COURNOT_LA_THREADS caps the worker count."""
    if not seeds:
        raise ModelError("need at least one seed")
    if max_workers is None:
        env = os.environ.get("COURNOT_LA_THREADS")
        max_workers = int(env) if env else min(len(seeds), os.cpu_count() or 1)
    jobs = [(replace(spec, seed=seed), benchmark, tail_window) for seed in sorted(seeds)]
    reports = {}
    failures = {}
    if max_workers <= 1:
        for job in jobs:
            try:
                reports[job[0].seed] = _run_one(job)
            except Exception as exc:  # noqa: BLE001 - isolate per-seed failures
                failures[job[0].seed] = str(exc)
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            futures = {pool.submit(_run_one, job): job[0].seed for job in jobs}
            for fut, seed in futures.items():
                try:
                    reports[seed] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    failures[seed] = str(exc)
    ordered = tuple(reports[s] for s in sorted(reports))
    return SweepReport(seeds=tuple(sorted(seeds)), reports=ordered, failures=failures)
