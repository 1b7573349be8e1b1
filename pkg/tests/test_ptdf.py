"""Unit tests for PTDF construction."""
import numpy as np
import pytest

from cournotla.model import Line, Network, threebus
from cournotla.ptdf import compute_ptdf


def triangle(x12, x23, x13, ref=2):
    return Network(
        bus_count=3,
        lines=(Line(0, 1, x12), Line(1, 2, x23), Line(0, 2, x13)),
        reference_bus=ref,
    )


def test_threebus_ptdf_matrix():
    ptdf = compute_ptdf(threebus().network)
    expected = np.array(
        [
            [0.2, -0.4, 0.0],
            [0.2, 0.6, 0.0],
            [0.8, 0.4, 0.0],
        ]
    )
    np.testing.assert_allclose(ptdf, expected, atol=1e-12)


def test_equal_reactance_triangle():
    # 1 MW at bus 1, out at bus 3: 2/3 direct, 1/3 around
    ptdf = compute_ptdf(triangle(1.0, 1.0, 1.0))
    np.testing.assert_allclose(ptdf[:, 0], [1 / 3, 1 / 3, 2 / 3], atol=1e-12)
    np.testing.assert_allclose(ptdf[:, 1], [-1 / 3, 2 / 3, 1 / 3], atol=1e-12)


def test_reference_column_is_zero():
    for ref in (0, 1, 2):
        ptdf = compute_ptdf(triangle(2.0, 2.0, 1.0, ref=ref))
        np.testing.assert_allclose(ptdf[:, ref], 0.0, atol=1e-14)


def test_two_bus_line_carries_everything():
    net = Network(bus_count=2, lines=(Line(0, 1, 0.5),), reference_bus=1)
    np.testing.assert_allclose(compute_ptdf(net), [[1.0, 0.0]], atol=1e-14)


def test_flows_satisfy_nodal_balance():
    # ring with a chord; balanced injections must obey KCL at every bus
    net = Network(
        bus_count=4,
        lines=(Line(0, 1, 1.0), Line(1, 2, 2.0), Line(2, 3, 1.5), Line(3, 0, 1.0), Line(0, 2, 2.5)),
        reference_bus=0,
    )
    ptdf = compute_ptdf(net)
    rng = np.random.default_rng(3)
    A = np.zeros((len(net.lines), net.bus_count))
    for i, ln in enumerate(net.lines):
        A[i, ln.from_bus] = 1.0
        A[i, ln.to_bus] = -1.0
    for _ in range(20):
        inj = rng.normal(size=net.bus_count)
        inj -= inj.mean()  # balanced
        flows = ptdf @ inj
        np.testing.assert_allclose(A.T @ flows, inj, atol=1e-10)


def test_compute_ptdf_returns_private_copy():
    net = threebus().network
    a = compute_ptdf(net)
    a[0, 0] = 99.0
    b = compute_ptdf(net)
    assert b[0, 0] == pytest.approx(0.2)


def test_shape():
    net = threebus().network
    assert compute_ptdf(net).shape == (len(net.lines), net.bus_count)
