# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled welfare-clearing kernel.

Mirrors active_set.solve_clearing exactly, including the enumeration order,
so both kernels return bit-identical results on non-degenerate inputs.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

STATUS_OK = 0
STATUS_INFEASIBLE = 1

DEF FEAS_TOL = 1e-9
DEF FLOW_TOL = 1e-7


cdef int _gauss_solve(double[:, ::1] M, double[::1] rhs, double[::1] out, int dim) nogil:
    """Gaussian elimination with partial pivoting; returns 0 on success."""
    cdef int i, j, k, piv
    cdef double best, factor, tmp
    for k in range(dim):
        piv = k
        best = M[k, k] if M[k, k] >= 0 else -M[k, k]
        for i in range(k + 1, dim):
            tmp = M[i, k] if M[i, k] >= 0 else -M[i, k]
            if tmp > best:
                best = tmp
                piv = i
        if best < 1e-12:
            return 1
        if piv != k:
            for j in range(k, dim):
                tmp = M[k, j]; M[k, j] = M[piv, j]; M[piv, j] = tmp
            tmp = rhs[k]; rhs[k] = rhs[piv]; rhs[piv] = tmp
        for i in range(k + 1, dim):
            factor = M[i, k] / M[k, k]
            if factor != 0.0:
                for j in range(k, dim):
                    M[i, j] -= factor * M[k, j]
                rhs[i] -= factor * rhs[k]
    for i in range(dim - 1, -1, -1):
        tmp = rhs[i]
        for j in range(i + 1, dim):
            tmp -= M[i, j] * out[j]
        out[i] = tmp / M[i, i]
    return 0


def solve_clearing(w, v, a, f0, cap, double total):
    """Same contract as cournotla._kernel.active_set.solve_clearing."""
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[::1] f0v = np.ascontiguousarray(f0, dtype=np.float64)
    cdef double[::1] capv = np.ascontiguousarray(cap, dtype=np.float64)
    cdef int nc = wv.shape[0]
    cdef int nbl = f0v.shape[0]
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64).reshape(nbl, nc)
    if nc > 16 or nbl > 8:
        raise ValueError("active-set enumeration limited to 16 consumers / 8 bounded lines")

    D_arr = np.zeros(nc)
    mu_arr = np.zeros(nbl)
    cdef double[::1] D = D_arr
    cdef double[::1] mu = mu_arr
    cdef int l, j

    if total <= FEAS_TOL:
        for l in range(nbl):
            if f0v[l] > capv[l] + FEAS_TOL or f0v[l] < -capv[l] - FEAS_TOL:
                return STATUS_INFEASIBLE, D_arr, 0.0, mu_arr
        best = 0.0
        for j in range(nc):
            if wv[j] > best:
                best = wv[j]
        return STATUS_OK, D_arr, best, mu_arr

    cdef int maxdim = nc + 1 + nbl
    M_arr = np.zeros((maxdim, maxdim))
    rhs_arr = np.zeros(maxdim)
    sol_arr = np.zeros(maxdim)
    free_arr = np.zeros(nc, dtype=np.intc)
    active_arr = np.zeros(max(nbl, 1), dtype=np.intc)
    state_arr = np.zeros(max(nbl, 1), dtype=np.intc)
    cdef double[:, ::1] Mv = M_arr
    cdef double[::1] rhsv = rhs_arr
    cdef double[::1] solv = sol_arr
    cdef int[::1] freev = free_arr
    cdef int[::1] activev = active_arr
    cdef int[::1] statev = state_arr

    cdef long zcode, scode, ncomb_z = 1, ncomb_s = 1
    cdef int i, k, nf, na, dim, ok, digit, st
    cdef double lam, flow, grad, resid, scale, restol

    scale = total if total >= 1.0 else 1.0
    grad = 0.0
    for j in range(nc):
        if wv[j] > grad:
            grad = wv[j]
    resid = 0.0
    for j in range(nc):
        if vv[j] > resid:
            resid = vv[j]
    if grad + resid * total > scale:
        scale = grad + resid * total
    restol = 1e-6 * scale

    for j in range(nc):
        ncomb_z *= 2
    for l in range(nbl):
        ncomb_s *= 3

    for zcode in range(ncomb_z):
        nf = 0
        for j in range(nc):
            # bit order matches itertools.product((False, True), repeat=nc)
            if not ((zcode >> (nc - 1 - j)) & 1):
                freev[nf] = j
                nf += 1
        if nf == 0:
            continue
        for scode in range(ncomb_s):
            na = 0
            st = 1
            for l in range(nbl - 1, -1, -1):
                digit = <int>((scode // st) % 3)
                st *= 3
                statev[l] = 0 if digit == 0 else (1 if digit == 1 else -1)
            for l in range(nbl):
                if statev[l] != 0:
                    activev[na] = l
                    na += 1
            dim = nf + 1 + na
            for i in range(dim):
                for k in range(dim):
                    Mv[i, k] = 0.0
            for i in range(nf):
                j = freev[i]
                Mv[i, i] = vv[j]
                Mv[i, nf] = 1.0
                for k in range(na):
                    Mv[i, nf + 1 + k] = -av[activev[k], j]
                rhsv[i] = wv[j]
            for i in range(nf):
                Mv[nf, i] = 1.0
            rhsv[nf] = total
            for k in range(na):
                l = activev[k]
                for i in range(nf):
                    Mv[nf + 1 + k, i] = av[l, freev[i]]
                rhsv[nf + 1 + k] = f0v[l] - statev[l] * capv[l]
            if _gauss_solve(Mv, rhsv, solv, dim) != 0:
                continue
            ok = 1
            for i in range(nf):
                if solv[i] < -FEAS_TOL:
                    ok = 0
                    break
            if not ok:
                continue
            for j in range(nc):
                D[j] = 0.0
            for i in range(nf):
                D[freev[i]] = solv[i]
            lam = solv[nf]
            for l in range(nbl):
                mu[l] = 0.0
            for k in range(na):
                mu[activev[k]] = solv[nf + 1 + k]
            for l in range(nbl):
                flow = f0v[l]
                for j in range(nc):
                    flow -= av[l, j] * D[j]
                if flow > capv[l] + FLOW_TOL or flow < -capv[l] - FLOW_TOL:
                    ok = 0
                    break
                if statev[l] != 0:
                    # certify that the active bound really holds; an
                    # ill-conditioned solve can return garbage otherwise
                    resid = flow - statev[l] * capv[l]
                    if resid > restol or resid < -restol:
                        ok = 0
                        break
            if not ok:
                continue
            resid = -total
            for j in range(nc):
                resid += D[j]
            if resid > restol or resid < -restol:
                continue
            for i in range(nf):
                j = freev[i]
                resid = wv[j] - vv[j] * D[j] - lam
                for l in range(nbl):
                    resid += av[l, j] * mu[l]
                if resid > restol or resid < -restol:
                    ok = 0
                    break
            if not ok:
                continue
            for k in range(na):
                l = activev[k]
                if statev[l] * mu[l] < -FEAS_TOL:
                    ok = 0
                    break
            if not ok:
                continue
            for j in range(nc):
                if (zcode >> (nc - 1 - j)) & 1:
                    grad = wv[j] - lam
                    for l in range(nbl):
                        grad += av[l, j] * mu[l]
                    if grad > FLOW_TOL:
                        ok = 0
                        break
            if not ok:
                continue
            for j in range(nc):
                if D[j] < 0.0:
                    D[j] = 0.0
            return STATUS_OK, D_arr, lam, mu_arr
    return STATUS_INFEASIBLE, np.zeros(nc), 0.0, np.zeros(nbl)
