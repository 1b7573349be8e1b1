"""Shared fixtures.

The iterated best-response benchmarks are expensive (the congested one runs
a regime-locked second pass), so they are computed once per session and
shared between the oracle tests and the acceptance suite, together with
their wall-clock times.
"""
import time

import pytest

from cournotla import iterate_nash, threebus


@pytest.fixture(scope="session")
def uncongested():
    return threebus()


@pytest.fixture(scope="session")
def congested():
    return threebus(congested=True)


@pytest.fixture(scope="session")
def nash_uncongested(uncongested):
    t0 = time.perf_counter()
    result = iterate_nash(uncongested, grid_step=1.0)
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def nash_congested(congested):
    t0 = time.perf_counter()
    result = iterate_nash(congested, grid_step=1.0)
    return result, time.perf_counter() - t0
