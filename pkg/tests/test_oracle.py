"""Unit tests for the best-response and equilibrium oracles."""
import numpy as np
import pytest

from cournotla.dispatch import clear_market
from cournotla.model import BidProfile, ModelError, profit_of
from cournotla.oracle import (
    best_response,
    cournot_first_order_point,
    iterate_nash,
    percentage_error,
)

OTHERS_UNCON = BidProfile({"s1": 0.0, "s2": 1046.0, "s3": 995.0})
OTHERS_CON = BidProfile({"s1": 0.0, "s2": 1268.0, "s3": 645.0})


def _profit_at(scenario, bids, supplier_id):
    result = clear_market(scenario.network, bids, scenario.suppliers, scenario.consumers)
    s = scenario.supplier(supplier_id)
    return profit_of(s, bids.quantities[supplier_id], result.lmps[s.node])


def test_percentage_error():
    assert percentage_error(815.0, 781.0) == pytest.approx(4.3534, abs=1e-4)
    assert percentage_error(781.0, 781.0) == 0.0
    assert percentage_error(-50.0, 100.0) == pytest.approx(150.0)
    with pytest.raises(ModelError):
        percentage_error(1.0, 0.0)


def test_best_response_reference_point(uncongested):
    br = best_response("s1", OTHERS_UNCON, uncongested, grid_step=1.0)
    assert br.quantity == pytest.approx(1105.56, abs=1.0)
    assert br.profit == pytest.approx(25233.1, abs=1.0)
    assert br.lmp_at_node == pytest.approx(41.448, abs=1e-3)


def test_best_response_grid_refinement(uncongested):
    br = best_response("s1", OTHERS_UNCON, uncongested, grid_step=0.5)
    assert br.quantity == pytest.approx(1105.56, abs=0.5)
    coarse = best_response("s1", OTHERS_UNCON, uncongested, grid_step=1.0)
    assert br.profit >= coarse.profit - 1e-9


def test_best_response_never_beaten_by_random_deviations(uncongested):
    br = best_response("s2", BidProfile({"s1": 1105.0, "s2": 0.0, "s3": 995.0}), uncongested)
    # a continuous deviation can beat the grid optimum by at most the profit
    # variation across one grid step
    slack = max(
        abs(br.profit - _profit_at(
            uncongested,
            BidProfile({"s1": 1105.0, "s2": br.quantity + d, "s3": 995.0}),
            "s2",
        ))
        for d in (-1.0, 1.0)
    )
    rng = np.random.default_rng(17)
    for q in rng.uniform(0.0, 2000.0, size=200):
        p = _profit_at(
            uncongested, BidProfile({"s1": 1105.0, "s2": float(q), "s3": 995.0}), "s2"
        )
        assert p <= br.profit + slack + 1e-9


def test_best_response_restricted_to_a_binding_regime(congested):
    idx = congested.network.find_line("1-3")
    br = best_response(
        "s1", OTHERS_CON, congested, grid_step=1.0, required_binding=frozenset({(idx, "-")})
    )
    assert br.quantity == pytest.approx(781.0, abs=2.0)
    # the unrestricted optimum escapes the congested regime and earns more
    free = best_response("s1", OTHERS_CON, congested, grid_step=1.0)
    assert free.quantity == pytest.approx(866.0, abs=2.0)
    assert free.profit > br.profit


def test_best_response_rejects_bad_grid(uncongested):
    with pytest.raises(ModelError):
        best_response("s1", OTHERS_UNCON, uncongested, grid_step=0.0)


def test_iterate_nash_uncongested(uncongested, nash_uncongested):
    result, _elapsed = nash_uncongested
    assert result.converged and not result.regime_locked
    assert result.quantities["s1"] == pytest.approx(1106.0, abs=1.0)
    assert result.quantities["s2"] == pytest.approx(1046.0, abs=1.0)
    assert result.quantities["s3"] == pytest.approx(995.0, abs=1.0)
    assert result.profits["s1"] == pytest.approx(25233.1, abs=2.0)
    assert result.profits["s2"] == pytest.approx(22883.4, abs=2.0)
    assert result.profits["s3"] == pytest.approx(19941.4, abs=2.0)
    # uniform prices at an uncongested equilibrium
    lmps = set(round(p, 6) for p in result.supplier_lmps.values())
    assert len(lmps) == 1


def test_uncongested_fixed_point_matches_first_order_conditions(uncongested, nash_uncongested):
    result, _ = nash_uncongested
    foc = cournot_first_order_point(uncongested)
    assert foc["s1"] == pytest.approx(1105.37, abs=0.01)
    assert foc["s2"] == pytest.approx(1046.31, abs=0.01)
    assert foc["s3"] == pytest.approx(995.19, abs=0.01)
    for sid, q in foc.items():
        assert abs(result.quantities[sid] - q) <= 1.0  # within one grid step


def test_iterate_nash_congested_is_regime_locked(congested, nash_congested):
    result, _elapsed = nash_congested
    idx = congested.network.find_line("1-3")
    assert result.converged and result.regime_locked
    assert result.locked_lines == frozenset({(idx, "-")})
    assert result.quantities["s1"] == pytest.approx(781.0, abs=2.0)
    assert result.quantities["s2"] == pytest.approx(1268.0, abs=2.0)
    assert result.quantities["s3"] == pytest.approx(645.0, abs=2.0)
    assert result.profits["s1"] == pytest.approx(24311.7, rel=1e-3)
    assert result.profits["s2"] == pytest.approx(38941.6, rel=1e-3)
    assert result.profits["s3"] == pytest.approx(17979.1, rel=1e-3)
    assert result.supplier_lmps["s1"] == pytest.approx(50.778, abs=1e-3)


def test_iterate_nash_initial_point_invariance(uncongested, nash_uncongested):
    result, _ = nash_uncongested
    other = iterate_nash(
        uncongested,
        initial=BidProfile({"s1": 100.0, "s2": 1900.0, "s3": 400.0}),
    )
    assert other.converged
    for sid in result.quantities:
        assert abs(other.quantities[sid] - result.quantities[sid]) <= 1.0


def test_iterate_nash_validates_arguments(uncongested):
    with pytest.raises(ModelError):
        iterate_nash(uncongested, max_rounds=0)
