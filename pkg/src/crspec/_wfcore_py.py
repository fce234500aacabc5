"""Pure-Python water-filling core.

Reference twin of the compiled ``_wfcore`` extension: same functions, same
arithmetic order, so both backends agree to rounding. All multipliers here
price power in nats (the allocations maximize ``sum(log(1 + lam*sigma))``).

Callers in :mod:`crspec.waterfill` screen out the degenerate inputs (zero
caps, slack constraints, empty budgets) before reaching these loops.
"""

import math

import numpy as np

BACKEND = "python"


def water_level(lam, P):
    """Standard water-filling ``sigma_i = (w - 1/lam_i)^+`` with ``sum(sigma) = P``."""
    lam = [float(x) for x in lam]
    n = len(lam)
    inv = sorted(1.0 / x for x in lam)
    w = inv[0]
    acc = 0.0
    for m in range(n):
        acc += inv[m]
        w = (P + acc) / (m + 1)
        if m + 1 == n or w <= inv[m + 1]:
            break
    sigma = np.array([max(w - 1.0 / x, 0.0) for x in lam])
    return sigma, w


def _power(lam, c, nu):
    s = 0.0
    for i in range(len(lam)):
        d = nu + c[i]
        if d <= 0.0:
            return math.inf
        x = 1.0 / d - 1.0 / lam[i]
        if x > 0.0:
            s += x
    return s


def _levels(lam, c, nu):
    out = []
    for i in range(len(lam)):
        x = 1.0 / (nu + c[i]) - 1.0 / lam[i]
        out.append(x if x > 0.0 else 0.0)
    return out


def min_nu(lam, c, P):
    """Smallest ``nu >= 0`` with ``sum((1/(nu+c_i) - 1/lam_i)^+) <= P``."""
    lam = [float(x) for x in lam]
    c = [float(x) for x in c]
    return _min_nu(lam, c, P)


def _min_nu(lam, c, P):
    if _power(lam, c, 0.0) <= P:
        return 0.0
    lo, hi = 0.0, max(lam)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _power(lam, c, mid) > P:
            lo = mid
        else:
            hi = mid
    return hi


def multilevel(lam, c, nu):
    """Pointwise multi-level levels ``(1/(nu + c_i) - 1/lam_i)^+``."""
    return np.array(_levels([float(x) for x in lam], [float(x) for x in c], float(nu)))


def a1_bisect(lam, alpha, P, gamma, tol, max_iter):
    """Bisection on the interference multiplier with the inner minimum-``nu`` search.

    Assumes the cap is violated at ``mu = 0``, ``gamma > 0`` and some
    ``alpha_i > 0``. Returns ``(sigma, nu, mu, iterations)`` evaluated at the
    feasible end of the final bracket.
    """
    lam = [float(x) for x in lam]
    alpha = [float(x) for x in alpha]
    n = len(lam)
    mu_hat = 0.0
    for i in range(n):
        if alpha[i] > 0.0 and lam[i] / alpha[i] > mu_hat:
            mu_hat = lam[i] / alpha[i]
    lo, hi = 0.0, mu_hat
    it = 0
    while it < max_iter and hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        c = [a * mid for a in alpha]
        nu = _min_nu(lam, c, P)
        sig = _levels(lam, c, nu)
        interf = 0.0
        for i in range(n):
            interf += alpha[i] * sig[i]
        if interf >= gamma:
            lo = mid
        else:
            hi = mid
        it += 1
    c = [a * hi for a in alpha]
    nu = _min_nu(lam, c, P)
    return np.array(_levels(lam, c, nu)), nu, hi, it


def price_bisect(lam, alpha, nu, gamma, tol, max_iter):
    """Bisection on the interference multiplier at a fixed power price ``nu > 0``.

    Maximizes ``sum(log(1 + lam*sigma)) - nu*sum(sigma)`` subject to
    ``sum(alpha*sigma) <= gamma``. Returns ``(sigma, mu, iterations)``.
    """
    lam = [float(x) for x in lam]
    alpha = [float(x) for x in alpha]
    sig, mu, it = _price(lam, alpha, float(nu), float(gamma), tol, max_iter)
    return np.array(sig), mu, it


def _price(lam, alpha, nu, gamma, tol, max_iter):
    n = len(lam)
    zero = [0.0] * n
    sig = _levels(lam, zero, nu)
    interf = 0.0
    for i in range(n):
        interf += alpha[i] * sig[i]
    if interf <= gamma:
        return sig, 0.0, 0
    mu_hat = 0.0
    for i in range(n):
        if alpha[i] > 0.0 and lam[i] / alpha[i] > mu_hat:
            mu_hat = lam[i] / alpha[i]
    lo, hi = 0.0, mu_hat
    it = 0
    while it < max_iter and hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        sig = _levels(lam, [a * mid for a in alpha], nu)
        interf = 0.0
        for i in range(n):
            interf += alpha[i] * sig[i]
        if interf >= gamma:
            lo = mid
        else:
            hi = mid
        it += 1
    return _levels(lam, [a * hi for a in alpha], nu), hi, it


def price_bisect_batch(lam, alpha, nu, gamma, tol, max_iter):
    """Row-wise :func:`price_bisect` over ``(N, M)`` arrays; zero gains are padding."""
    lam = np.asarray(lam, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    sigma = np.zeros_like(lam)
    mu = np.zeros(lam.shape[0])
    for j in range(lam.shape[0]):
        keep = lam[j] > 0.0
        if not np.any(keep):
            continue
        sig, mu[j], _ = _price(
            lam[j, keep].tolist(), alpha[j, keep].tolist(), float(nu), float(gamma), tol, max_iter
        )
        sigma[j, keep] = sig
    return sigma, mu


def ellipsoid_mu(lam, A, P, Gamma, mu_hi, gap_tol, size_tol, max_iter):
    """Ellipsoid method on the interference multipliers of the power-loading dual.

    Parameters
    ----------
    lam : (M,) positive sub-channel gains.
    A : (K, M) interference couplings, ``A[k, i]`` per unit power on sub-channel i.
    P : power budget (> 0).
    Gamma : (K,) positive caps.
    mu_hi : (K,) box that contains an optimal multiplier vector.

    Returns
    -------
    sigma, nu, mu, iterations, converged, best_dual, best_primal
        ``sigma`` is the best primal iterate scaled into the feasible set;
        ``nu``/``mu`` are the multipliers it came from.
    """
    lam_l = [float(x) for x in lam]
    A = np.asarray(A, dtype=float)
    Gamma = np.asarray(Gamma, dtype=float)
    K, M = A.shape
    x = 0.5 * np.asarray(mu_hi, dtype=float)
    # shape kept as a factor L with E = L L^T so it stays positive definite
    L = np.diag(math.sqrt(K) * x) if K > 1 else np.array([[x[0]]])
    kappa = 1.0 - math.sqrt(1.0 - 2.0 / (K + 1))
    fac = math.sqrt(K * K / (K * K - 1.0)) if K > 1 else 0.5
    best_dual, best_primal = math.inf, -math.inf
    best = (np.zeros(M), 0.0, x.copy())
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        j = int(np.argmin(x))
        if x[j] < 0.0:
            g = np.zeros(K)
            g[j] = -1.0
            objective = False
        else:
            c = (A.T @ x).tolist()
            nu = _min_nu(lam_l, c, P)
            sig = _levels(lam_l, c, nu)
            s_arr = np.array(sig)
            interf = A @ s_arr
            util = 0.0
            for i in range(M):
                util += math.log1p(lam_l[i] * sig[i])
            dual = util - float(np.dot(c, s_arr)) + float(np.dot(x, Gamma))
            best_dual = min(best_dual, dual)
            t = 1.0
            for k in range(K):
                if interf[k] > Gamma[k]:
                    t = min(t, Gamma[k] / interf[k])
            primal = 0.0
            for i in range(M):
                primal += math.log1p(t * lam_l[i] * sig[i])
            if primal > best_primal:
                best_primal = primal
                best = (t * s_arr, nu, x.copy())
            if best_dual - best_primal <= gap_tol * max(1.0, abs(best_primal)):
                converged = True
                break
            g = Gamma - interf
            objective = True
        p = L.T @ g
        root = float(np.sqrt(p @ p))
        if root == 0.0:
            converged = objective
            break
        if objective and root <= size_tol:
            converged = True
            break
        p = p / root
        b = L @ p
        if K == 1:
            x = x - 0.5 * b
            L = 0.5 * L
        else:
            x = x - b / (K + 1)
            L = fac * (L - kappa * np.outer(b, p))
    sigma, nu, mu = best
    return sigma, nu, mu, it, converged, best_dual, best_primal
