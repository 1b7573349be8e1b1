"""Market clearing for a fixed quantity-bid profile.

Bid quantities are fixed injections; the operator chooses demands to
maximize total consumer utility subject to power balance and DC line-flow
limits.  Nodal prices come from the duals of the optimum: at every bus with
positive cleared demand the price equals the marginal utility there, and
congestion splits prices across buses via the PTDF sensitivities.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernel
from .model import BidProfile, ConsumerParams, ModelError, Network, SupplierParams, utility_of
from .ptdf import _ptdf_cached

FORWARD = "+"   # flow at +capacity, from_bus -> to_bus
REVERSE = "-"   # flow at -capacity


class InfeasibleDispatchError(ModelError):
    """No nonnegative demand allocation satisfies balance and line limits."""


@dataclass(frozen=True)
class DispatchResult:
    demands: dict[int, float]            # bus -> cleared demand MW
    consumer_demands: dict[str, float]   # consumer id -> MW
    lmps: dict[int, float]               # bus -> $/MWh
    flows: dict[int, float]              # line index -> signed MW
    binding_lines: frozenset[tuple[int, str]]
    objective: float                     # total consumer utility $/h
    energy_price: float                  # balance dual lam
    congestion_mu: dict[int, float]      # line index -> signed multiplier

    @property
    def uniform_price(self) -> float | None:
        """The single market price when no line binds, else None."""
        if self.binding_lines:
            return None
        return self.energy_price


def clear_market(
    network: Network,
    bids: BidProfile,
    suppliers: Sequence[SupplierParams],
    consumers: Sequence[ConsumerParams],
) -> DispatchResult:
    """Welfare-maximizing demand dispatch for fixed bid injections."""
    ptdf = _ptdf_cached(network)
    nb = network.bus_count
    inj = np.zeros(nb)
    for s in suppliers:
        g = bids.quantities.get(s.id)
        if g is None:
            raise ModelError(f"missing bid for supplier {s.id}")
        if g < 0:
            raise ModelError(f"negative bid for supplier {s.id}")
        inj[s.node] += g
    total = float(inj.sum())

    w = np.array([c.w for c in consumers])
    v = np.array([c.v for c in consumers])
    nodes = np.array([c.node for c in consumers])

    bounded = [i for i, ln in enumerate(network.lines) if ln.capacity is not None]
    a = ptdf[bounded][:, nodes] if bounded else np.zeros((0, len(consumers)))
    f0 = ptdf[bounded] @ inj if bounded else np.zeros(0)
    cap = np.array([network.lines[i].capacity for i in bounded], float)

    status, D, lam, mu = _kernel.solve_clearing(w, v, a, f0, cap, total)
    if status != _kernel.STATUS_OK:
        raise InfeasibleDispatchError(
            f"no feasible dispatch for total bid {total:.3f} MW under line limits "
            f"{[network.lines[i].name for i in bounded]}"
        )

    withdraw = np.zeros(nb)
    np.add.at(withdraw, nodes, D)
    flows = ptdf @ (inj - withdraw)

    mu_full = np.zeros(len(network.lines))
    mu_full[bounded] = mu
    lmps = lam - mu_full @ ptdf

    binding = []
    for k, i in enumerate(bounded):
        if abs(abs(flows[i]) - cap[k]) <= 1e-6 and abs(mu[k]) > 1e-9:
            binding.append((i, FORWARD if flows[i] > 0 else REVERSE))

    objective = float(sum(utility_of(c, d) for c, d in zip(consumers, D)))
    return DispatchResult(
        demands={b: float(withdraw[b]) for b in range(nb)},
        consumer_demands={c.id: float(d) for c, d in zip(consumers, D)},
        lmps={b: float(lmps[b]) for b in range(nb)},
        flows={i: float(flows[i]) for i in range(len(network.lines))},
        binding_lines=frozenset(binding),
        objective=objective,
        energy_price=float(lam),
        congestion_mu={i: float(m) for i, m in zip(bounded, mu)},
    )


class ClosedFormInvalidError(ModelError):
    """Closed-form positivity condition violated; use clear_market instead."""


def closed_form_uncongested(
    bids: BidProfile, consumers: Sequence[ConsumerParams]
) -> tuple[float, dict[str, float]]:
    """Uniform price and demands when no line limit binds.

    lam = (sum w_i/v_i - S) / (sum 1/v_i), D_i = (w_i - lam)/v_i.  Only valid
    while every consumer clears strictly positive demand; raises otherwise.
    """
    S = bids.total()
    winv = sum(c.w / c.v for c in consumers)
    vinv = sum(1.0 / c.v for c in consumers)
    lam = (winv - S) / vinv
    demands = {c.id: (c.w - lam) / c.v for c in consumers}
    if any(d < 0 for d in demands.values()):
        raise ClosedFormInvalidError("some closed-form demand is negative")
    return lam, demands


@dataclass(frozen=True)
class KktReport:
    max_violation: float
    balance_residual: float
    stationarity_residual: float
    flow_violation: float
    complementarity_residual: float
    dual_sign_violation: float

    def ok(self, tol: float = 1e-6) -> bool:
        return self.max_violation <= tol


def kkt_check(
    network: Network,
    bids: BidProfile,
    suppliers: Sequence[SupplierParams],
    consumers: Sequence[ConsumerParams],
    result: DispatchResult,
) -> KktReport:
    """Verify the KKT conditions of a clearing; returns violation magnitudes."""
    ptdf = _ptdf_cached(network)
    inj = np.zeros(network.bus_count)
    for s in suppliers:
        inj[s.node] += bids.quantities[s.id]
    total = float(inj.sum())
    D = np.array([result.consumer_demands[c.id] for c in consumers])

    balance = abs(D.sum() - total) / max(1.0, abs(total))

    stationarity = 0.0
    for c, d in zip(consumers, D):
        grad = c.w - c.v * d - result.lmps[c.node]
        if d > 1e-9:
            stationarity = max(stationarity, abs(grad))
        else:
            stationarity = max(stationarity, max(0.0, grad))

    flow_violation = 0.0
    complementarity = 0.0
    dual_sign = 0.0
    for i, ln in enumerate(network.lines):
        if ln.capacity is None:
            continue
        f = result.flows[i]
        flow_violation = max(flow_violation, abs(f) - ln.capacity)
        mu = result.congestion_mu.get(i, 0.0)
        if abs(mu) > 1e-9:
            # a nonzero multiplier requires the matching bound to be tight
            bound = ln.capacity if mu > 0 else -ln.capacity
            complementarity = max(complementarity, abs(f - bound))
        # directional multipliers mu+ = max(mu, 0), mu- = max(-mu, 0) are
        # nonnegative by construction; a sign error shows up as a tightness
        # error on the opposite bound, covered above.

    max_violation = max(balance, stationarity, max(0.0, flow_violation), complementarity, dual_sign)
    return KktReport(
        max_violation=max_violation,
        balance_residual=balance,
        stationarity_residual=stationarity,
        flow_violation=max(0.0, flow_violation),
        complementarity_residual=complementarity,
        dual_sign_violation=dual_sign,
    )
