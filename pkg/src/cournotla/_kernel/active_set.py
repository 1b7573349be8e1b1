"""Reference welfare-clearing kernel (numpy).

Solves, for fixed total generation S:

    max_D  sum_j  w_j D_j - v_j/2 D_j^2
    s.t.   sum_j D_j = S                          (dual: lam)
           -cap_l <= f0_l - a_l . D <= cap_l      (dual: mu_l, signed)
           D_j >= 0

by exhaustive active-set enumeration: every combination of
{D_j = 0 or free} x {line slack, at +cap, at -cap} yields an
equality-constrained KKT linear system; the unique candidate passing primal
and dual feasibility is the optimum (the objective is strictly concave).

mu_l is the signed congestion multiplier: mu_l >= 0 when the line is at
+cap, <= 0 at -cap, and the nodal price at bus b is
lam - sum_l mu_l * PTDF[l, b].
"""
from __future__ import annotations

import itertools

import numpy as np

STATUS_OK = 0
STATUS_INFEASIBLE = 1

_FEAS_TOL = 1e-9


def solve_clearing(w, v, a, f0, cap, total):
    """Returns (status, D, lam, mu).

    w, v: (nc,) consumer utility coefficients
    a:    (nbl, nc) flow coefficient of each demand on each bounded line,
          a[l, j] = PTDF[l, node_of_consumer_j]
    f0:   (nbl,) flow from the fixed injections alone
    cap:  (nbl,) line limits
    total: total generation S to be absorbed
    """
    w = np.asarray(w, float)
    v = np.asarray(v, float)
    a = np.asarray(a, float).reshape(len(f0), len(w))
    f0 = np.asarray(f0, float)
    cap = np.asarray(cap, float)
    nc, nbl = len(w), len(f0)
    if nc > 16 or nbl > 8:
        raise ValueError("active-set enumeration limited to 16 consumers / 8 bounded lines")

    if total <= _FEAS_TOL:
        # nothing to allocate; price at the highest marginal utility
        if np.all(np.abs(f0) <= cap + _FEAS_TOL):
            return STATUS_OK, np.zeros(nc), float(w.max()), np.zeros(nbl)
        return STATUS_INFEASIBLE, np.zeros(nc), 0.0, np.zeros(nbl)

    for zmask in itertools.product((False, True), repeat=nc):
        free = [j for j in range(nc) if not zmask[j]]
        nf = len(free)
        if nf == 0:
            continue
        for states in itertools.product((0, 1, -1), repeat=nbl):
            active = [l for l in range(nbl) if states[l] != 0]
            na = len(active)
            dim = nf + 1 + na
            # unknown order: D_free, lam, mu_active
            M = np.zeros((dim, dim))
            rhs = np.zeros(dim)
            for i, j in enumerate(free):
                M[i, i] = v[j]
                M[i, nf] = 1.0
                for k, l in enumerate(active):
                    M[i, nf + 1 + k] = -a[l, j]
                rhs[i] = w[j]
            M[nf, :nf] = 1.0
            rhs[nf] = total
            for k, l in enumerate(active):
                M[nf + 1 + k, :nf] = a[l, free]
                rhs[nf + 1 + k] = f0[l] - states[l] * cap[l]
            try:
                sol = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError:
                continue
            D = np.zeros(nc)
            D[free] = sol[:nf]
            lam = sol[nf]
            mu = np.zeros(nbl)
            mu[active] = sol[nf + 1:]
            if np.any(D < -_FEAS_TOL):
                continue
            flows = f0 - a @ D
            if np.any(np.abs(flows) > cap + 1e-7):
                continue
            # certify the solve: an ill-conditioned candidate system can
            # return garbage that still passes the sign checks below
            scale = max(1.0, abs(total), float(w.max()) + float(v.max()) * abs(total))
            if abs(D.sum() - total) > 1e-6 * scale:
                continue
            if any(abs(flows[l] - states[l] * cap[l]) > 1e-6 * scale for l in active):
                continue
            grad_free = w - v * D - lam + a.T @ mu
            if any(abs(grad_free[j]) > 1e-6 * scale for j in free):
                continue
            # dual feasibility: multiplier sign matches the binding side
            if any(states[l] * mu[l] < -_FEAS_TOL for l in active):
                continue
            # zeroed demands must not want to consume at their nodal price
            grad0 = w - lam + a.T @ mu  # stationarity residual at D = 0
            if any(zmask[j] and grad0[j] > 1e-7 for j in range(nc)):
                continue
            return STATUS_OK, np.maximum(D, 0.0), float(lam), mu
    return STATUS_INFEASIBLE, np.zeros(nc), 0.0, np.zeros(nbl)
