"""Brute-force equilibrium benchmarks.

Grid-search best response reproduces the single-supplier benchmark, and
Gauss-Seidel iterated best response reproduces the Nash benchmark the
learning runs are judged against.

Transmission-constrained Cournot games need not admit a pure global Nash
equilibrium: best-response dynamics can cycle between the congested and
uncongested regimes (a supplier at the import-constrained bus can always
unbind the line by expanding).  When that happens, iterate_nash falls back
to a regime-locked pass - every best response is restricted to bid profiles
that keep the persistently binding lines at their limit - which converges to
the stationary point of the congested regime, i.e. the same object an
analytical EPEC diagonalization reports.  Such results carry
regime_locked=True and only claim stationarity within that regime.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispatch import InfeasibleDispatchError, clear_market
from .model import BidProfile, ModelError, Scenario, profit_of


@dataclass(frozen=True)
class BestResponseResult:
    supplier_id: str
    quantity: float
    profit: float
    lmp_at_node: float
    grid_step: float


@dataclass(frozen=True)
class NashResult:
    quantities: dict[str, float]
    profits: dict[str, float]
    lmps: dict[int, float]                 # bus -> $/MWh
    supplier_lmps: dict[str, float]        # supplier id -> $/MWh at its bus
    iterations: int
    converged: bool
    regime_locked: bool = False
    locked_lines: frozenset[tuple[int, str]] = frozenset()


def percentage_error(learned: float, benchmark: float) -> float:
    """|learned - benchmark| / |benchmark| * 100."""
    if benchmark == 0:
        raise ModelError("benchmark must be nonzero")
    return abs(learned - benchmark) / abs(benchmark) * 100.0


def _profile_outcome(scenario: Scenario, bids: BidProfile, required_binding=None):
    """(result, profits by id) for a bid profile, or None if inadmissible."""
    try:
        result = clear_market(scenario.network, bids, scenario.suppliers, scenario.consumers)
    except InfeasibleDispatchError:
        return None
    if required_binding is not None and not required_binding <= result.binding_lines:
        return None
    profits = {
        s.id: profit_of(s, bids.quantities[s.id], result.lmps[s.node])
        for s in scenario.suppliers
    }
    return result, profits


def best_response(
    supplier_id: str,
    others: BidProfile,
    scenario: Scenario,
    grid_step: float = 1.0,
    required_binding: frozenset | None = None,
) -> BestResponseResult:
    """Profit-maximizing quantity over a uniform grid, opponents fixed.

    Ties break toward the smaller quantity.  Grid points with infeasible
    dispatch (or, when required_binding is given, without the required
    binding set) count as minus infinity.
    """
    if grid_step <= 0:
        raise ModelError("grid_step must be > 0")
    supplier = scenario.supplier(supplier_id)
    grid = np.arange(supplier.g_min, supplier.g_max + grid_step / 2, grid_step)
    best_g, best_p, best_lmp = None, -math.inf, math.nan
    for g in grid:
        outcome = _profile_outcome(
            scenario, others.replace_bid(supplier_id, float(g)), required_binding
        )
        if outcome is None:
            continue
        result, profits = outcome
        if profits[supplier_id] > best_p:
            best_p = profits[supplier_id]
            best_g = float(g)
            best_lmp = result.lmps[supplier.node]
    if best_g is None:
        raise InfeasibleDispatchError(f"no feasible grid point for supplier {supplier_id}")
    return BestResponseResult(
        supplier_id=supplier_id,
        quantity=best_g,
        profit=best_p,
        lmp_at_node=best_lmp,
        grid_step=grid_step,
    )


def _sweep(scenario, bids, grid_step, required_binding=None):
    """One Gauss-Seidel pass; returns (bids, max_move)."""
    max_move = 0.0
    for s in scenario.suppliers:
        br = best_response(s.id, bids, scenario, grid_step, required_binding)
        max_move = max(max_move, abs(br.quantity - bids.quantities[s.id]))
        bids = bids.replace_bid(s.id, br.quantity)
    return bids, max_move


def _nash_result(scenario, bids, iterations, converged, regime_locked=False, locked=frozenset()):
    result, profits = _profile_outcome(scenario, bids)
    return NashResult(
        quantities=dict(bids.quantities),
        profits=profits,
        lmps=result.lmps,
        supplier_lmps={s.id: result.lmps[s.node] for s in scenario.suppliers},
        iterations=iterations,
        converged=converged,
        regime_locked=regime_locked,
        locked_lines=locked,
    )


def iterate_nash(
    scenario: Scenario,
    grid_step: float = 1.0,
    max_rounds: int = 200,
    initial: BidProfile | None = None,
) -> NashResult:
    """Gauss-Seidel iterated grid best response (supplier order by position).

    Converges when a full sweep moves nobody by more than one grid step.  If
    the dynamics instead revisit a profile (a best-response cycle), the
    regime-locked fallback described in the module docstring runs; if that
    also fails, converged=False.
    """
    if max_rounds < 1:
        raise ModelError("max_rounds must be >= 1")
    if initial is None:
        initial = BidProfile({s.id: 0.5 * (s.g_min + s.g_max) for s in scenario.suppliers})
    bids = initial

    seen: dict[tuple, int] = {}
    cycle_profiles: list[BidProfile] = []
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        bids, max_move = _sweep(scenario, bids, grid_step)
        if max_move <= grid_step:
            return _nash_result(scenario, bids, rounds, converged=True)
        key = tuple(sorted(bids.quantities.items()))
        if key in seen:
            # best-response cycle: replay it once to collect binding sets
            cycle_profiles.append(bids)
            for _ in range(rounds - seen[key]):
                bids, _m = _sweep(scenario, bids, grid_step)
                cycle_profiles.append(bids)
            break
        seen[key] = rounds
    else:
        return _nash_result(scenario, bids, max_rounds, converged=False)

    # Persistent binding candidates across the cycle, most frequent first.
    counts: dict[tuple[int, str], int] = {}
    for profile in cycle_profiles:
        outcome = _profile_outcome(scenario, profile)
        if outcome is None:
            continue
        for key in outcome[0].binding_lines:
            counts[key] = counts.get(key, 0) + 1
    for key, _n in sorted(counts.items(), key=lambda kv: -kv[1]):
        locked = frozenset({key})
        try:
            locked_bids = initial
            for locked_rounds in range(1, max_rounds + 1):
                locked_bids, max_move = _sweep(scenario, locked_bids, grid_step, locked)
                if max_move <= grid_step:
                    outcome = _profile_outcome(scenario, locked_bids, locked)
                    if outcome is not None:
                        return _nash_result(
                            scenario, locked_bids, rounds + locked_rounds,
                            converged=True, regime_locked=True, locked=locked,
                        )
                    break
        except InfeasibleDispatchError:
            continue
    return _nash_result(scenario, bids, rounds, converged=False)


def cournot_first_order_point(scenario: Scenario) -> dict[str, float]:
    """Analytic uncongested Cournot equilibrium from the simultaneous
    first-order conditions with the closed-form uniform price.

    Independent of clear_market; used to audit iterate_nash.
    """
    cons = scenario.consumers
    V = sum(1.0 / c.v for c in cons)
    W = sum(c.w / c.v for c in cons)
    sup = scenario.suppliers
    k = len(sup)
    A = np.full((k, k), 1.0 / V)
    for i, s in enumerate(sup):
        A[i, i] += 1.0 / V + s.m
    rhs = np.array([W / V - s.n for s in sup])
    g = np.linalg.solve(A, rhs)
    return {s.id: float(gi) for s, gi in zip(sup, g)}
