# cython: language_level=3
"""Compiled water-filling core (twin of ``_wfcore_py``)."""

import numpy as np

from libc.math cimport log1p, sqrt, INFINITY
from libc.stdlib cimport malloc, free

BACKEND = "cython"


cdef double _power(const double[:] lam, const double* c, double nu, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0, d, x
    cdef Py_ssize_t i
    for i in range(n):
        d = nu + c[i]
        if d <= 0.0:
            return INFINITY
        x = 1.0 / d - 1.0 / lam[i]
        if x > 0.0:
            s += x
    return s


cdef void _levels(const double[:] lam, const double* c, double nu, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double x
    for i in range(n):
        x = 1.0 / (nu + c[i]) - 1.0 / lam[i]
        out[i] = x if x > 0.0 else 0.0


cdef double _min_nu(const double[:] lam, const double* c, double P, Py_ssize_t n) noexcept nogil:
    cdef double lo = 0.0, hi = 0.0, mid
    cdef Py_ssize_t i, k
    if _power(lam, c, 0.0, n) <= P:
        return 0.0
    for i in range(n):
        if lam[i] > hi:
            hi = lam[i]
    for k in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _power(lam, c, mid, n) > P:
            lo = mid
        else:
            hi = mid
    return hi


def water_level(lam, double P):
    cdef double[:] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef Py_ssize_t n = lv.shape[0], m
    cdef double[:] inv = np.sort(1.0 / np.asarray(lv))
    cdef double w = inv[0], acc = 0.0
    for m in range(n):
        acc += inv[m]
        w = (P + acc) / (m + 1)
        if m + 1 == n or w <= inv[m + 1]:
            break
    sigma = np.empty(n)
    cdef double[:] sv = sigma
    cdef double x
    for m in range(n):
        x = w - 1.0 / lv[m]
        sv[m] = x if x > 0.0 else 0.0
    return sigma, w


def min_nu(lam, c, double P):
    cdef double[:] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[:] cv = np.ascontiguousarray(c, dtype=np.float64)
    return _min_nu(lv, &cv[0], P, lv.shape[0])


def multilevel(lam, c, double nu):
    cdef double[:] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[:] cv = np.ascontiguousarray(c, dtype=np.float64)
    out = np.empty(lv.shape[0])
    cdef double[:] ov = out
    _levels(lv, &cv[0], nu, &ov[0], lv.shape[0])
    return out


def a1_bisect(lam, alpha, double P, double gamma, double tol, Py_ssize_t max_iter):
    cdef double[:] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[:] av = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef Py_ssize_t n = lv.shape[0], i, it = 0
    cdef double mu_hat = 0.0, lo, hi, mid, nu, interf
    c_arr = np.empty(n)
    sigma = np.empty(n)
    cdef double[:] c = c_arr
    cdef double[:] sig = sigma
    for i in range(n):
        if av[i] > 0.0 and lv[i] / av[i] > mu_hat:
            mu_hat = lv[i] / av[i]
    lo = 0.0
    hi = mu_hat
    with nogil:
        while it < max_iter and hi - lo > tol * (hi if hi > 1.0 else 1.0):
            mid = 0.5 * (lo + hi)
            for i in range(n):
                c[i] = av[i] * mid
            nu = _min_nu(lv, &c[0], P, n)
            _levels(lv, &c[0], nu, &sig[0], n)
            interf = 0.0
            for i in range(n):
                interf += av[i] * sig[i]
            if interf >= gamma:
                lo = mid
            else:
                hi = mid
            it += 1
        for i in range(n):
            c[i] = av[i] * hi
        nu = _min_nu(lv, &c[0], P, n)
        _levels(lv, &c[0], nu, &sig[0], n)
    return sigma, nu, hi, it


cdef double _price(const double[:] lv, const double[:] av, double nu, double gamma,
                   double tol, Py_ssize_t max_iter, double* c, double* sig,
                   Py_ssize_t n, Py_ssize_t* iters) noexcept nogil:
    cdef Py_ssize_t i, it = 0
    cdef double interf = 0.0, mu_hat = 0.0, lo, hi, mid
    for i in range(n):
        c[i] = 0.0
    _levels(lv, c, nu, sig, n)
    for i in range(n):
        interf += av[i] * sig[i]
    if interf <= gamma:
        iters[0] = 0
        return 0.0
    for i in range(n):
        if av[i] > 0.0 and lv[i] / av[i] > mu_hat:
            mu_hat = lv[i] / av[i]
    lo = 0.0
    hi = mu_hat
    while it < max_iter and hi - lo > tol * (hi if hi > 1.0 else 1.0):
        mid = 0.5 * (lo + hi)
        for i in range(n):
            c[i] = av[i] * mid
        _levels(lv, c, nu, sig, n)
        interf = 0.0
        for i in range(n):
            interf += av[i] * sig[i]
        if interf >= gamma:
            lo = mid
        else:
            hi = mid
        it += 1
    for i in range(n):
        c[i] = av[i] * hi
    _levels(lv, c, nu, sig, n)
    iters[0] = it
    return hi


def price_bisect(lam, alpha, double nu, double gamma, double tol, Py_ssize_t max_iter):
    cdef double[:] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[:] av = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef Py_ssize_t n = lv.shape[0], it = 0
    c_arr = np.empty(n)
    sigma = np.empty(n)
    cdef double[:] c = c_arr
    cdef double[:] sig = sigma
    cdef double mu
    with nogil:
        mu = _price(lv, av, nu, gamma, tol, max_iter, &c[0], &sig[0], n, &it)
    return sigma, mu, it


def price_bisect_batch(lam, alpha, double nu, double gamma, double tol, Py_ssize_t max_iter):
    lam = np.asarray(lam, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    cdef Py_ssize_t N = lam.shape[0], M = lam.shape[1], j, i, m, it
    sigma = np.zeros((N, M))
    mu = np.zeros(N)
    cdef double[:, :] L = lam
    cdef double[:, :] Al = alpha
    cdef double[:, :] S = sigma
    cdef double[:] mv = mu
    row_l = np.empty(M)
    row_a = np.empty(M)
    c_arr = np.empty(M)
    sig_arr = np.empty(M)
    cdef double[:] rl = row_l
    cdef double[:] ra = row_a
    cdef double[:] c = c_arr
    cdef double[:] sig = sig_arr
    with nogil:
        for j in range(N):
            m = 0
            for i in range(M):
                if L[j, i] > 0.0:
                    rl[m] = L[j, i]
                    ra[m] = Al[j, i]
                    m += 1
            if m == 0:
                continue
            mv[j] = _price(rl[:m], ra[:m], nu, gamma, tol, max_iter, &c[0], &sig[0], m, &it)
            m = 0
            for i in range(M):
                if L[j, i] > 0.0:
                    S[j, i] = sig[m]
                    m += 1
    return sigma, mu


def ellipsoid_mu(lam, A, double P, Gamma, mu_hi, double gap_tol, double size_tol, Py_ssize_t max_iter):
    cdef double[:] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[:, :] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:] Gv = np.ascontiguousarray(Gamma, dtype=np.float64)
    cdef double[:] hv = np.ascontiguousarray(mu_hi, dtype=np.float64)
    cdef Py_ssize_t K = Av.shape[0], M = Av.shape[1]
    cdef Py_ssize_t i, k, l, j, it = 0
    cdef bint converged = False, objective
    cdef double best_dual = INFINITY, best_primal = -INFINITY
    cdef double nu = 0.0, util, dual, t, primal, root, cs, best_nu = 0.0
    cdef double kappa = 1.0 - sqrt(1.0 - 2.0 / (K + 1))
    cdef double fac = sqrt(K * K / (K * K - 1.0)) if K > 1 else 0.5

    x_arr = 0.5 * np.asarray(hv)
    # shape kept as a factor L with E = L L^T so it stays positive definite
    L_arr = np.zeros((K, K))
    cdef double[:] x = x_arr
    cdef double[:, :] L = L_arr
    for k in range(K):
        L[k, k] = (sqrt(<double>K) * x[k]) if K > 1 else x[k]
    c_arr = np.empty(M)
    sig_arr = np.empty(M)
    interf_arr = np.empty(K)
    g_arr = np.empty(K)
    b_arr = np.empty(K)
    p_arr = np.empty(K)
    best_sig_arr = np.zeros(M)
    best_mu_arr = np.asarray(x).copy()
    cdef double[:] c = c_arr
    cdef double[:] sig = sig_arr
    cdef double[:] interf = interf_arr
    cdef double[:] g = g_arr
    cdef double[:] b = b_arr
    cdef double[:] pv = p_arr
    cdef double[:] best_sig = best_sig_arr
    cdef double[:] best_mu = best_mu_arr

    with nogil:
        while it < max_iter:
            it += 1
            j = 0
            for k in range(1, K):
                if x[k] < x[j]:
                    j = k
            if x[j] < 0.0:
                for k in range(K):
                    g[k] = 0.0
                g[j] = -1.0
                objective = False
            else:
                for i in range(M):
                    cs = 0.0
                    for k in range(K):
                        cs += Av[k, i] * x[k]
                    c[i] = cs
                nu = _min_nu(lv, &c[0], P, M)
                _levels(lv, &c[0], nu, &sig[0], M)
                for k in range(K):
                    cs = 0.0
                    for i in range(M):
                        cs += Av[k, i] * sig[i]
                    interf[k] = cs
                util = 0.0
                for i in range(M):
                    util += log1p(lv[i] * sig[i])
                dual = util
                for i in range(M):
                    dual -= c[i] * sig[i]
                for k in range(K):
                    dual += x[k] * Gv[k]
                if dual < best_dual:
                    best_dual = dual
                t = 1.0
                for k in range(K):
                    if interf[k] > Gv[k] and Gv[k] / interf[k] < t:
                        t = Gv[k] / interf[k]
                primal = 0.0
                for i in range(M):
                    primal += log1p(t * lv[i] * sig[i])
                if primal > best_primal:
                    best_primal = primal
                    best_nu = nu
                    for i in range(M):
                        best_sig[i] = t * sig[i]
                    for k in range(K):
                        best_mu[k] = x[k]
                if best_dual - best_primal <= gap_tol * (best_primal if best_primal > 1.0 else (1.0 if best_primal > -1.0 else -best_primal)):
                    converged = True
                    break
                for k in range(K):
                    g[k] = Gv[k] - interf[k]
                objective = True
            root = 0.0
            for k in range(K):
                cs = 0.0
                for l in range(K):
                    cs += L[l, k] * g[l]
                pv[k] = cs
                root += cs * cs
            root = sqrt(root)
            if root == 0.0:
                converged = objective
                break
            if objective and root <= size_tol:
                converged = True
                break
            for k in range(K):
                pv[k] /= root
            for k in range(K):
                cs = 0.0
                for l in range(K):
                    cs += L[k, l] * pv[l]
                b[k] = cs
            if K == 1:
                x[0] -= 0.5 * b[0]
                L[0, 0] *= 0.5
            else:
                for k in range(K):
                    x[k] -= b[k] / (K + 1)
                for k in range(K):
                    for l in range(K):
                        L[k, l] = fac * (L[k, l] - kappa * b[k] * pv[l])
    return best_sig_arr, best_nu, best_mu_arr, it, bool(converged), best_dual, best_primal
