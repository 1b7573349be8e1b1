"""DC power transfer distribution factors.

PTDF[l, b] is the MW flow induced on line l by injecting 1 MW at bus b and
withdrawing it at the reference bus.  Built from the reduced nodal
susceptance matrix with the reference bus removed; the reference-bus column
is identically zero.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .model import ModelError, Network


class SingularNetworkError(ModelError):
    """Reduced susceptance matrix is singular (disconnected or degenerate)."""


def compute_ptdf(network: Network) -> np.ndarray:
    """PTDF matrix of shape (n_lines, n_buses)."""
    return _ptdf_cached(network).copy()


@lru_cache(maxsize=64)
def _ptdf_cached(network: Network) -> np.ndarray:
    nb, nl = network.bus_count, len(network.lines)
    ref = network.reference_bus
    # branch incidence and susceptances
    A = np.zeros((nl, nb))
    b = np.zeros(nl)
    for i, ln in enumerate(network.lines):
        A[i, ln.from_bus] = 1.0
        A[i, ln.to_bus] = -1.0
        b[i] = 1.0 / ln.reactance
    Bbus = A.T @ (b[:, None] * A)
    keep = [i for i in range(nb) if i != ref]
    Bred = Bbus[np.ix_(keep, keep)]
    try:
        Binv = np.linalg.inv(Bred)
    except np.linalg.LinAlgError as exc:
        raise SingularNetworkError("reduced susceptance matrix is singular") from exc
    ptdf = np.zeros((nl, nb))
    ptdf[:, keep] = (b[:, None] * A[:, keep]) @ Binv
    ptdf.setflags(write=False)
    return ptdf
