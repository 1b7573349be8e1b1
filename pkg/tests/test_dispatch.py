"""Unit tests for market clearing, duals, and the two kernels."""
import numpy as np
import pytest

from cournotla._kernel import STATUS_INFEASIBLE, STATUS_OK, python_kernel
from cournotla.dispatch import (
    ClosedFormInvalidError,
    InfeasibleDispatchError,
    clear_market,
    closed_form_uncongested,
    kkt_check,
)
from cournotla.model import (
    BidProfile,
    ConsumerParams,
    Line,
    ModelError,
    Network,
    SupplierParams,
    threebus,
)

try:
    from cournotla._kernel._active_set_cy import solve_clearing as cython_kernel
except ImportError:  # pragma: no cover - exercised only without the extension
    cython_kernel = None

UNCON_BIDS = BidProfile({"s1": 1105.0, "s2": 1046.0, "s3": 995.0})
CON_BIDS = BidProfile({"s1": 781.0, "s2": 1268.0, "s3": 645.0})


def test_uncongested_clearing_reference_point():
    sc = threebus()
    r = clear_market(sc.network, UNCON_BIDS, sc.suppliers, sc.consumers)
    assert r.energy_price == pytest.approx(41.4684, abs=1e-4)
    assert r.uniform_price == pytest.approx(r.energy_price)
    assert r.binding_lines == frozenset()
    assert r.demands[0] == pytest.approx(1206.148, abs=1e-3)
    assert r.demands[1] == pytest.approx(932.011, abs=1e-3)
    assert r.demands[2] == pytest.approx(1007.841, abs=1e-3)
    # all three nodal prices collapse to the uniform price
    for b in range(3):
        assert r.lmps[b] == pytest.approx(r.energy_price, abs=1e-9)


def test_uncongested_matches_closed_form():
    sc = threebus()
    r = clear_market(sc.network, UNCON_BIDS, sc.suppliers, sc.consumers)
    lam, demands = closed_form_uncongested(UNCON_BIDS, sc.consumers)
    assert r.energy_price == pytest.approx(lam, rel=1e-12)
    for c in sc.consumers:
        assert r.consumer_demands[c.id] == pytest.approx(demands[c.id], rel=1e-10)


def test_congested_clearing_reference_point():
    sc = threebus(congested=True)
    r = clear_market(sc.network, CON_BIDS, sc.suppliers, sc.consumers)
    idx = sc.network.find_line("1-3")
    assert r.flows[idx] == pytest.approx(-16.0, abs=1e-6)
    assert r.binding_lines == frozenset({(idx, "-")})
    assert r.uniform_price is None
    assert r.lmps[0] == pytest.approx(50.7784, abs=1e-3)
    assert r.lmps[1] == pytest.approx(50.7560, abs=1e-3)
    assert r.lmps[2] == pytest.approx(50.7335, abs=1e-3)
    assert r.congestion_mu[idx] == pytest.approx(-0.05620, abs=1e-4)
    report = kkt_check(sc.network, CON_BIDS, sc.suppliers, sc.consumers, r)
    assert report.ok(1e-6), report


def test_lmp_decomposition():
    # lmp_b = lam - sum_l mu_l * ptdf[l, b]
    from cournotla.ptdf import compute_ptdf

    sc = threebus(congested=True)
    r = clear_market(sc.network, CON_BIDS, sc.suppliers, sc.consumers)
    ptdf = compute_ptdf(sc.network)
    for b in range(3):
        expected = r.energy_price - sum(
            mu * ptdf[i, b] for i, mu in r.congestion_mu.items()
        )
        assert r.lmps[b] == pytest.approx(expected, abs=1e-9)


def test_price_falls_as_supply_grows():
    sc = threebus()
    prices = []
    for total in (1000.0, 2000.0, 3000.0, 4000.0):
        bids = BidProfile({"s1": total / 3, "s2": total / 3, "s3": total / 3})
        r = clear_market(sc.network, bids, sc.suppliers, sc.consumers)
        prices.append(r.energy_price)
    assert prices == sorted(prices, reverse=True)


def test_removing_a_cap_never_reduces_welfare():
    free = threebus()
    capped = threebus(congested=True)
    r_free = clear_market(free.network, CON_BIDS, free.suppliers, free.consumers)
    r_capped = clear_market(capped.network, CON_BIDS, capped.suppliers, capped.consumers)
    assert r_free.objective >= r_capped.objective - 1e-9


def test_zero_bids_edge_case():
    sc = threebus()
    bids = BidProfile({"s1": 0.0, "s2": 0.0, "s3": 0.0})
    r = clear_market(sc.network, bids, sc.suppliers, sc.consumers)
    assert all(d == 0.0 for d in r.demands.values())
    assert r.energy_price == pytest.approx(max(c.w for c in sc.consumers))


def test_missing_and_negative_bids_rejected():
    sc = threebus()
    with pytest.raises(ModelError):
        clear_market(sc.network, BidProfile({"s1": 1.0}), sc.suppliers, sc.consumers)
    with pytest.raises(ModelError):
        clear_market(
            sc.network,
            BidProfile({"s1": -1.0, "s2": 0.0, "s3": 0.0}),
            sc.suppliers,
            sc.consumers,
        )


def test_infeasible_when_injection_cannot_reach_demand():
    net = Network(bus_count=2, lines=(Line(0, 1, 1.0, capacity=10.0),), reference_bus=1)
    suppliers = (SupplierParams(id="s1", node=0, m=0.02, n=1.0, o=10.0),)
    consumers = (ConsumerParams(id="c1", node=1, w=60.0, v=0.05),)
    with pytest.raises(InfeasibleDispatchError):
        clear_market(net, BidProfile({"s1": 100.0}), suppliers, consumers)
    # within the cap it clears fine
    r = clear_market(net, BidProfile({"s1": 10.0}), suppliers, consumers)
    assert r.consumer_demands["c1"] == pytest.approx(10.0)


def test_closed_form_raises_on_negative_demand():
    sc = threebus()
    with pytest.raises(ClosedFormInvalidError):
        closed_form_uncongested(BidProfile({"s1": 0.0, "s2": 0.0, "s3": 0.0}), sc.consumers)


def test_clearing_is_deterministic():
    sc = threebus(congested=True)
    a = clear_market(sc.network, CON_BIDS, sc.suppliers, sc.consumers)
    b = clear_market(sc.network, CON_BIDS, sc.suppliers, sc.consumers)
    assert a == b


def _random_instance(rng, nc, nbl):
    w = rng.uniform(50.0, 150.0, size=nc)
    v = rng.uniform(0.01, 0.2, size=nc)
    a = rng.uniform(-0.8, 0.8, size=(nbl, nc))
    total = rng.uniform(0.0, 3000.0)
    f0 = rng.uniform(-0.5, 0.5, size=nbl) * total
    cap = rng.uniform(20.0, 400.0, size=nbl)
    return w, v, a, f0, cap, total


@pytest.mark.skipif(cython_kernel is None, reason="compiled kernel unavailable")
def test_kernel_parity_on_random_instances():
    py = python_kernel()
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(150):
        nc = int(rng.integers(1, 5))
        nbl = int(rng.integers(0, 4))
        w, v, a, f0, cap, total = _random_instance(rng, nc, nbl)
        s_py, d_py, lam_py, mu_py = py(w, v, a, f0, cap, total)
        s_cy, d_cy, lam_cy, mu_cy = cython_kernel(w, v, a, f0, cap, total)
        assert s_py == s_cy
        if s_py == STATUS_OK:
            np.testing.assert_allclose(d_cy, d_py, atol=1e-8)
            assert lam_cy == pytest.approx(lam_py, abs=1e-8)
            np.testing.assert_allclose(mu_cy, mu_py, atol=1e-8)
            checked += 1
    assert checked > 50  # the sampler must produce plenty of feasible cases


def test_kernel_reports_infeasible():
    py = python_kernel()
    # one consumer behind a line that cannot carry the injection
    w = np.array([60.0])
    v = np.array([0.05])
    a = np.array([[-1.0]])
    f0 = np.array([100.0])
    cap = np.array([10.0])
    status, *_ = py(w, v, a, f0, cap, 100.0)
    assert status == STATUS_INFEASIBLE


def test_kkt_on_randomized_networks():
    rng = np.random.default_rng(5)
    base = Network(
        bus_count=4,
        lines=(Line(0, 1, 1.0), Line(1, 2, 2.0), Line(2, 3, 1.0), Line(3, 0, 1.5)),
        reference_bus=0,
    )
    suppliers = (
        SupplierParams(id="s1", node=0, m=0.02, n=1.0, o=10.0),
        SupplierParams(id="s2", node=2, m=0.03, n=2.0, o=10.0),
    )
    for trial in range(60):
        consumers = tuple(
            ConsumerParams(
                id=f"c{b}", node=b, w=float(rng.uniform(50, 150)), v=float(rng.uniform(0.02, 0.2))
            )
            for b in range(4)
        )
        net = base
        for i in rng.choice(4, size=int(rng.integers(0, 4)), replace=False):
            net = net.with_capacity(int(i), float(rng.uniform(30, 300)))
        bids = BidProfile(
            {"s1": float(rng.uniform(0, 1500)), "s2": float(rng.uniform(0, 1500))}
        )
        result = clear_market(net, bids, suppliers, consumers)
        report = kkt_check(net, bids, suppliers, consumers, result)
        assert report.ok(1e-6), (trial, report)
