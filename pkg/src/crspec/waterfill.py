"""Water-filling power allocators and the dual searches that set their multipliers.

Multipliers price power in nats: every allocation here maximizes
``sum(log(1 + lam_i * sigma_i))``, for which the levels take the form
``sigma_i = (1/(nu + alpha_i*mu) - 1/lam_i)^+``. Rates reported elsewhere are
in bits; divide a nat multiplier by ``log(2)`` to price bits instead.

The iterative loops live in the compiled core (see :mod:`crspec._kernels`);
this module validates inputs, handles the degenerate cases in closed form and
packages results.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import get_core

__all__ = [
    "WfAllocation",
    "standard_wf",
    "multilevel_wf",
    "solve_a1",
    "solve_multi_mu",
    "price_wf",
    "price_wf_batch",
]


@dataclass(frozen=True)
class WfAllocation:
    """Per-sub-channel powers with the multipliers that produced them."""

    sigma: np.ndarray
    nu: float
    mu: np.ndarray
    converged: bool = True
    iterations: int = 0

    @property
    def power(self):
        return float(self.sigma.sum())


#: couplings below this fraction of the largest in their row are set to zero;
#: they only stretch the multiplier search range without moving the optimum
COUPLING_RTOL = 1e-12


def _clip_couplings(a):
    a = np.array(a, dtype=float)
    top = a.max(axis=-1, keepdims=True) if a.size else a
    a[a <= COUPLING_RTOL * top] = 0.0
    return a


def _gains(lam):
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size == 0:
        raise ValueError("need at least one sub-channel gain")
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise ValueError("sub-channel gains must be positive and finite")
    return lam


def standard_wf(lam, P, backend=None):
    """Standard water-filling ``sigma_i = (w - 1/lam_i)^+`` with ``sum(sigma) = P``.

    The returned ``nu`` is the inverse water level ``1/w``.

    Examples
    --------
    >>> standard_wf([1.0, 1.0], 2.0).sigma
    array([1., 1.])
    """
    lam = _gains(lam)
    if P < 0:
        raise ValueError("power budget must be nonnegative")
    sigma, w = get_core(backend).water_level(lam, float(P))
    return WfAllocation(sigma=sigma, nu=1.0 / w, mu=np.zeros(0))


def multilevel_wf(lam, alpha, nu, mu):
    """Pointwise multi-level water-filling levels.

    ``alpha`` is either a vector (one constraint, scalar ``mu``) or a
    ``(K, M)`` matrix paired with ``K`` multipliers, in which case sub-channel
    ``i`` sees the level ``1/(nu + sum_k alpha[k, i] * mu[k])``.
    """
    lam = _gains(lam)
    alpha = np.asarray(alpha, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if alpha.ndim == 1:
        c = alpha * float(mu)
    else:
        c = mu @ alpha
    denom = nu + c
    if np.any(denom <= 0):
        raise ValueError("nu + alpha*mu must be positive for every sub-channel")
    return np.maximum(1.0 / denom - 1.0 / lam, 0.0)


def solve_a1(lam, alpha, P_t, gamma, delta_mu=1e-13, max_iter=400, backend=None):
    """Optimal power loading under one power budget and one interference cap.

    Maximizes ``sum(log(1 + lam_i*sigma_i))`` subject to ``sum(sigma) <= P_t``
    and ``sum(alpha_i*sigma_i) <= gamma`` by bisection on the interference
    multiplier ``mu``, with the smallest feasible ``nu`` found for each trial
    ``mu``. ``delta_mu`` is relative to ``max(1, mu)``.
    """
    lam = _gains(lam)
    alpha = np.asarray(alpha, dtype=float).ravel()
    if alpha.shape != lam.shape or np.any(alpha < 0):
        raise ValueError("alpha must be nonnegative with one entry per sub-channel")
    if P_t < 0 or gamma < 0:
        raise ValueError("power budget and cap must be nonnegative")
    alpha = _clip_couplings(alpha)
    core = get_core(backend)
    if P_t == 0:
        return WfAllocation(np.zeros_like(lam), float(lam.max()), np.zeros(1))
    sigma, w = core.water_level(lam, float(P_t))
    if alpha @ sigma <= gamma:
        return WfAllocation(sigma, 1.0 / w, np.zeros(1))
    coupled = alpha > 0
    mu_hat = float(np.max(lam[coupled] / alpha[coupled]))
    if gamma == 0:
        sigma = np.zeros_like(lam)
        nu = float(lam.max())
        if not np.all(coupled):
            free, w = core.water_level(lam[~coupled], float(P_t))
            sigma[~coupled] = free
            nu = 1.0 / w
        return WfAllocation(sigma, nu, np.array([mu_hat]))
    sigma, nu, mu, it = core.a1_bisect(lam, alpha, float(P_t), float(gamma), delta_mu, max_iter)
    return WfAllocation(sigma, nu, np.array([mu]), iterations=it)


def solve_multi_mu(
    lam, alpha_matrix, P_t, Gamma, gap_tol=1e-11, size_tol=1e-13, max_iter=None, backend=None
):
    """Power loading under a power budget and ``K`` interference caps.

    The interference multipliers are found by the ellipsoid method on the
    partial Lagrange dual (the power budget stays explicit and is handled by
    the inner minimum-``nu`` search). Iteration stops once the best primal
    point and best dual value agree to ``gap_tol`` (relative), the ellipsoid
    collapses below ``size_tol`` along the cut, or after ``max_iter``
    (default ``500*K**2``) steps, in which case a warning is issued and
    ``converged`` is False. The returned powers are always feasible.
    """
    lam = _gains(lam)
    A = np.atleast_2d(np.asarray(alpha_matrix, dtype=float))
    Gamma = np.atleast_1d(np.asarray(Gamma, dtype=float))
    K, M = A.shape
    if M != lam.size or Gamma.size != K or K == 0:
        raise ValueError("alpha_matrix must be (K, M) with K >= 1 caps")
    if np.any(A < 0) or np.any(Gamma < 0) or P_t < 0:
        raise ValueError("couplings, caps and budget must be nonnegative")
    A = _clip_couplings(A)
    core = get_core(backend)
    mu = np.zeros(K)
    if P_t == 0:
        return WfAllocation(np.zeros(M), float(lam.max()), mu)
    sigma, w = core.water_level(lam, float(P_t))
    if np.all(A @ sigma <= Gamma):
        return WfAllocation(sigma, 1.0 / w, mu)

    # a zero cap switches off every sub-channel it can see
    zero = Gamma == 0
    off = np.any(A[zero] > 0, axis=0) if np.any(zero) else np.zeros(M, bool)
    for k in np.flatnonzero(zero):
        seen = A[k] > 0
        if np.any(seen):
            mu[k] = float(np.max(lam[seen] / A[k, seen]))
    live = ~off
    sigma = np.zeros(M)
    if not np.any(live):
        return WfAllocation(sigma, float(lam.max()), mu)
    lam_l, A_l = lam[live], A[:, live]
    sig_l, w = core.water_level(lam_l, float(P_t))
    active = (~zero) & np.any(A_l > 0, axis=1)
    if np.all(A_l[active] @ sig_l <= Gamma[active]):
        sigma[live] = sig_l
        return WfAllocation(sigma, 1.0 / w, mu)

    A_a, G_a = A_l[active], Gamma[active]
    utility = float(np.sum(np.log1p(lam_l * sig_l)))
    with np.errstate(divide="ignore"):
        ratio = np.where(A_a > 0, lam_l / np.where(A_a > 0, A_a, 1.0), 0.0)
    mu_hi = np.minimum(ratio.max(axis=1), utility / G_a) * 1.01
    n = int(active.sum())
    if max_iter is None:
        max_iter = max(500 * n * n, 500)
    sig_l, nu, mu_a, it, ok, dual, primal = core.ellipsoid_mu(
        lam_l, A_a, float(P_t), G_a, mu_hi, gap_tol, size_tol, max_iter
    )
    polished = _polish_mu(core, lam_l, A_a, float(P_t), G_a, np.maximum(mu_a, 0.0))
    if polished is not None:
        p_sig, p_nu, p_mu, p_primal, p_dual = polished
        dual = min(dual, p_dual)
        if p_primal > primal:
            sig_l, nu, mu_a, primal = p_sig, p_nu, p_mu, p_primal
    ok = dual - primal <= gap_tol * max(1.0, abs(primal))
    if not ok:
        warnings.warn(
            f"ellipsoid search stopped after {it} iterations without meeting tolerance",
            RuntimeWarning,
            stacklevel=2,
        )
    sigma[live] = sig_l
    mu[active] = np.maximum(mu_a, 0.0)
    return WfAllocation(sigma, nu, mu, converged=ok, iterations=it)


def _dual_eval(core, lam, A, P, Gamma, mu):
    c = mu @ A
    nu = core.min_nu(lam, c, P)
    sig = core.multilevel(lam, c, nu)
    interf = A @ sig
    util = float(np.sum(np.log1p(lam * sig)))
    dual = util - float(c @ sig) + float(mu @ Gamma)
    over = interf > Gamma
    t = float(np.min(Gamma[over] / interf[over])) if np.any(over) else 1.0
    primal = float(np.sum(np.log1p(t * lam * sig)))
    return sig, nu, interf, t * sig, primal, dual


def _newton_mu(core, lam, A, P, Gamma, mu, act, track, max_iter=30):
    for _ in range(max_iter):
        sig, nu, interf, *_ = track(mu)
        res = interf[act] - Gamma[act]
        on = sig > 0
        norm0 = np.linalg.norm(res)
        if not np.any(on) or norm0 <= 1e-15 * max(1.0, Gamma[act].max()):
            break
        c = mu @ A
        w = 1.0 / (nu + c[on]) ** 2
        Aon = A[:, on]
        dnu = -(Aon @ w) / w.sum() if nu > 0 else np.zeros(A.shape[0])
        J = -(Aon * w) @ (Aon + dnu[:, None]).T
        step = np.linalg.lstsq(J[np.ix_(act, act)], -res, rcond=None)[0]
        for _ in range(30):
            trial = mu.copy()
            trial[act] = np.maximum(mu[act] + step, 0.0)
            c_t = trial @ A
            t_int = A @ core.multilevel(lam, c_t, core.min_nu(lam, c_t, P))
            if np.linalg.norm(t_int[act] - Gamma[act]) < norm0:
                break
            step = 0.5 * step
        else:
            break
        mu = trial
    return mu


def _polish_mu(core, lam, A, P, Gamma, mu):
    """Newton refinement of the cap multipliers on the binding caps.

    Solves ``A_k sigma(mu) = Gamma_k`` on an active set of caps, where
    ``sigma(mu)`` is the multi-level water-filling with the power price
    re-solved for every ``mu``. Caps whose multiplier hits zero leave the
    set and violated caps join it. Returns the best feasible loading seen
    and the lowest dual value seen, or ``None`` if no cap is binding.
    """
    if not np.any(mu > 0):
        return None
    best = [None, np.inf]

    def track(m):
        out = _dual_eval(core, lam, A, P, Gamma, m)
        sig, nu, interf, feas, primal, dual = out
        if best[0] is None or primal > best[0][3]:
            best[0] = (feas, nu, m.copy(), primal)
        best[1] = min(best[1], dual)
        return out

    act = mu > 1e-9 * mu.max()
    for _ in range(A.shape[0] + 1):
        mu = _newton_mu(core, lam, A, P, Gamma, mu, act, track)
        _, _, interf, *_ = track(mu)
        new = (act & (mu > 0)) | (~act & (interf > Gamma))
        if np.array_equal(new, act) or not np.any(new):
            break
        act = new
    return best[0] + (best[1],)


def price_wf(lam, alpha, nu, gamma, delta_mu=1e-13, max_iter=400, backend=None):
    """Power loading at a fixed power price ``nu`` under one interference cap.

    Maximizes ``sum(log(1 + lam*sigma)) - nu*sum(sigma)`` subject to
    ``sum(alpha*sigma) <= gamma`` (no power budget).
    """
    lam = _gains(lam)
    alpha = np.asarray(alpha, dtype=float).ravel()
    if nu <= 0:
        raise ValueError("power price must be positive")
    if gamma < 0 or np.any(alpha < 0):
        raise ValueError("cap and couplings must be nonnegative")
    alpha = _clip_couplings(alpha)
    if gamma == 0:
        sigma = np.where(alpha > 0, 0.0, np.maximum(1.0 / nu - 1.0 / lam, 0.0))
        coupled = alpha > 0
        mu = float(np.max(lam[coupled] / alpha[coupled])) if np.any(coupled) else 0.0
        return WfAllocation(sigma, float(nu), np.array([mu]))
    sigma, mu, it = get_core(backend).price_bisect(lam, alpha, float(nu), float(gamma), delta_mu, max_iter)
    return WfAllocation(sigma, float(nu), np.array([mu]), iterations=it)


def price_wf_batch(lam, alpha, nu, gamma, delta_mu=1e-13, max_iter=400, backend=None):
    """Row-wise :func:`price_wf` for ``(N, M)`` gain/coupling arrays.

    Entries with ``lam == 0`` are padding and get zero power. Returns the
    ``(N, M)`` powers and the ``N`` multipliers.
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    alpha = _clip_couplings(np.atleast_2d(np.asarray(alpha, dtype=float)))
    if nu <= 0:
        raise ValueError("power price must be positive")
    if gamma == 0:
        with np.errstate(divide="ignore"):
            free = np.where(lam > 0, np.maximum(1.0 / nu - 1.0 / np.where(lam > 0, lam, 1.0), 0.0), 0.0)
        sigma = np.where(alpha > 0, 0.0, free)
        return sigma, np.zeros(lam.shape[0])
    return get_core(backend).price_bisect_batch(lam, alpha, float(nu), float(gamma), delta_mu, max_iter)
