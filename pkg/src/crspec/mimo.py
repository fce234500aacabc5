"""Transmit covariance design for a MIMO secondary link.

:func:`solve_p1` finds the capacity-achieving covariance under the power
budget and every interference cap. The other precoders fix the eigenvectors
from an SVD and only optimize per-stream powers:

* :func:`dsvd` transmits on the right singular vectors of ``H``;
* :func:`psvd` first projects ``H`` onto the null space of all cross
  channels, so no interference reaches any primary receiver;
* :func:`hybrid` projects only against the ``b`` strongest directions of the
  cap-normalized cross channels and loads power under the residual caps.
"""

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from . import matkernel
from ._ellipsoid import Ellipsoid
from .model import ChannelSet, Covariance, DualPoint, make_result, negligible_caps
from .waterfill import solve_a1, solve_multi_mu, standard_wf

__all__ = [
    "HybridConfig",
    "NotImplementableError",
    "solve_p1",
    "unconstrained_capacity",
    "dsvd",
    "psvd",
    "hybrid",
    "best_hybrid",
    "white_spectrum",
]

LN2 = np.log(2.0)
# couplings this small relative to the largest are rounding residue of a
# projection and are treated as exact zeros
ALPHA_RTOL = 1e-12


class NotImplementableError(ValueError):
    """The precoder has no transmit dimension left (e.g. nulling needs ``M_ts > M_rp``)."""


@dataclass(frozen=True)
class HybridConfig:
    """Number ``b`` of dominant cap-normalized cross-channel directions to null."""

    b: int

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 0:
            raise ValueError("b must be a nonnegative integer")
        object.__setattr__(self, "b", int(self.b))


def _wf_result(cs, U, lam, method, **kw):
    """Standard water-filling on the columns of `U` with gains `lam`."""
    if cs.P_t == 0 or lam.size == 0:
        return make_result(Covariance.zeros(cs.M_ts), cs, method, **kw)
    alloc = standard_wf(lam, cs.P_t)
    return make_result(Covariance.from_factors(U, alloc.sigma), cs, method, **kw)


def unconstrained_capacity(cs):
    """Water-filling over the SVD of ``H`` ignoring every interference cap.

    The interference it causes is still evaluated against ``cs``.
    """
    f = matkernel.svd(cs.H)
    return _wf_result(cs, f.U, f.lam, "optimal", info={"unconstrained": True})


# ---------------------------------------------------------------- exact solver


def _null_basis(Z, n):
    if Z.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, Vh = np.linalg.svd(Z)
    r = int(np.count_nonzero(s > matkernel.RANK_RTOL * s[0])) if s[0] > 0 else 0
    return Vh[r:].conj().T


class _WhitenedWF:
    """Inner maximizer of ``log det(I + H S H^H) - Tr(A S)`` for ``A = sum y_i B_i``."""

    def __init__(self, H, G):
        n = H.shape[1]
        self.H = H
        self.B = [np.eye(n, dtype=complex)] + [Gk.conj().T @ Gk for Gk in G]
        self.G = G
        self.ridge = matkernel.RANK_RTOL * max(np.linalg.norm(H, 2) ** 2, 1e-300)

    def __call__(self, y):
        A = sum(yi * Bi for yi, Bi in zip(y, self.B)) + self.ridge * np.eye(self.H.shape[1])
        d, W = np.linalg.eigh(0.5 * (A + A.conj().T))
        Bh = (W / np.sqrt(d)) @ W.conj().T
        Hw = self.H @ Bh
        lam, U = np.linalg.eigh(Hw.conj().T @ Hw)
        keep = lam > 1.0
        lam, U = lam[keep], U[:, keep]
        x = 1.0 - 1.0 / lam
        F = Bh @ (U * np.sqrt(x))
        power = float(np.sum(np.abs(F) ** 2))
        interf = np.array([np.sum(np.abs(Gk @ F) ** 2) for Gk in self.G])
        util = float(np.sum(np.log(lam * x + 1.0)))
        return F, lam, x, util - float(x.sum()), power, interf


def _dual_p1(H, G, P_t, Gamma, gap_tol, max_iter):
    """Ellipsoid method on the Lagrange dual of the covariance problem.

    Returns (S, y, best_dual, best_primal, iterations, converged); values in nats.
    """
    inner = _WhitenedWF(H, G)
    c = np.concatenate(([P_t], Gamma))
    f = matkernel.svd(H)
    cap = float(np.sum(np.log1p(f.lam * standard_wf(f.lam, P_t).sigma)))
    upper = 1.01 * np.concatenate(([min(cap / P_t, f.lam[0])], cap / Gamma))
    ell = Ellipsoid(upper)
    best_dual, best_primal = np.inf, -np.inf
    best_S, best_y = np.zeros((H.shape[1],) * 2, complex), ell.center.copy()
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        j = ell.negative_coordinate()
        if j is not None:
            g = np.zeros(c.size)
            g[j] = -1.0
            objective = False
        else:
            y = ell.center
            F, lam, x, lagr, power, interf = inner(y)
            best_dual = min(best_dual, lagr + float(c @ y))
            used = np.concatenate(([power], interf))
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(used > c, c / used, 1.0)
            t = float(ratio.min())
            primal = float(np.sum(np.log1p(t * lam * x)))
            if primal > best_primal:
                best_primal, best_y = primal, y.copy()
                best_S = t * (F @ F.conj().T)
            if best_dual - best_primal <= gap_tol * max(best_primal, 1e-300):
                converged = True
                break
            g = c - used
            objective = True
        if not ell.cut(g):
            converged = objective
            break
    return best_S, best_y, best_dual, best_primal, it, converged


def solve_p1(cs, gap_tol=1e-9, max_iter=None):
    """Capacity-achieving transmit covariance under all caps.

    Minimizes the Lagrange dual over the power price ``nu`` and interference
    prices ``mu_k`` with the ellipsoid method. For fixed prices the inner
    maximizer is water-filling on the whitened channel ``H A^{-1/2}`` with
    ``A = nu*I + sum(mu_k G_k^H G_k)``. The best inner solution scaled into
    the feasible set is returned, and the relative gap between its rate and
    the best dual value certifies optimality.

    Receivers with a zero cap are handled exactly by restricting the search
    to the common null space of their channels.

    Parameters
    ----------
    cs : ChannelSet
    gap_tol : float
        Target relative duality gap.
    max_iter : int, optional
        Ellipsoid iteration cap, default ``2000 * (K+1)**2``.

    Returns
    -------
    PrecoderResult
        Method ``"optimal"``. ``dual`` holds the prices in nats per unit
        power; ``gap`` the certified relative duality gap.
    """
    n = cs.M_ts
    if cs.P_t == 0:
        return make_result(Covariance.zeros(n), cs, "optimal", gap=0.0, dual=DualPoint(0.0, np.zeros(cs.K)))
    free = unconstrained_capacity(cs)
    if np.all(free.interference <= np.asarray(cs.Gamma)):
        nu = 1.0 / (free.cov.sigma[-1] + 1.0 / matkernel.svd(cs.H).lam[free.cov.rank - 1])
        return make_result(free.cov, cs, "optimal", gap=0.0, dual=DualPoint(nu, np.zeros(cs.K)))

    Gamma = np.asarray(cs.Gamma)
    zero = negligible_caps(cs.G, cs.P_t, Gamma)
    Z = np.vstack([cs.G[k] for k in np.flatnonzero(zero)]) if np.any(zero) else np.zeros((0, n))
    Bz = _null_basis(Z, n)
    mu = np.zeros(cs.K)
    H_r = cs.H @ Bz
    if Bz.shape[1] == 0 or not np.any(np.abs(H_r) > matkernel.RANK_RTOL * np.abs(cs.H).max()):
        return make_result(Covariance.zeros(n), cs, "optimal", gap=0.0, dual=DualPoint(0.0, mu))
    live = [k for k in np.flatnonzero(~zero) if np.linalg.norm(cs.G[k] @ Bz) > matkernel.RANK_RTOL * np.linalg.norm(cs.G[k])]
    reduced = ChannelSet(H_r, [cs.G[k] @ Bz for k in live], cs.P_t, Gamma[live], check_rank=False)
    free = unconstrained_capacity(reduced)
    if np.all(free.interference <= Gamma[live]):
        S = Bz @ free.S @ Bz.conj().T
        return make_result(Covariance.from_matrix(S), cs, "optimal", gap=0.0, info={"reduced": True})

    m = len(live) + 1
    if max_iter is None:
        max_iter = 2000 * m * m
    S_r, y, dual, primal, it, ok = _dual_p1(H_r, list(reduced.G), cs.P_t, Gamma[live], gap_tol, max_iter)
    if not ok:
        warnings.warn(f"covariance search stopped after {it} iterations", RuntimeWarning, stacklevel=2)
    S = Bz @ S_r @ Bz.conj().T
    mu[live] = y[1:]
    gap = max(dual - primal, 0.0) / max(primal, 1e-300)
    return make_result(
        Covariance.from_matrix(S),
        cs,
        "optimal",
        dual=DualPoint(y[0], mu),
        gap=gap,
        converged=ok,
        info={"iterations": it, "dual_bits": dual / LN2},
    )


# ------------------------------------------------------- structured precoders


def _couplings(cs, U):
    """``A[k, i] = ||G_k u_i||^2`` with projection residue clipped to zero."""
    A = np.array([np.sum(np.abs(Gk @ U) ** 2, axis=0) for Gk in cs.G])
    if A.size:
        A[A <= ALPHA_RTOL * A.max()] = 0.0
    return A


def _load(cs, U, lam, method, **kw):
    """Power loading on fixed precoder columns `U` under budget and caps."""
    if lam.size == 0 or cs.P_t == 0:
        return make_result(Covariance.zeros(cs.M_ts), cs, method, **kw)
    if cs.K == 0:
        return _wf_result(cs, U, lam, method, **kw)
    A = _couplings(cs, U)
    if cs.K == 1 and cs.M_k[0] == 1:
        alloc = solve_a1(lam, A[0], cs.P_t, cs.Gamma[0])
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            alloc = solve_multi_mu(lam, A, cs.P_t, cs.Gamma)
    kw.setdefault("converged", alloc.converged)
    cov = Covariance.from_factors(U, alloc.sigma)
    return make_result(cov, cs, method, dual=DualPoint(alloc.nu, alloc.mu), **kw)


def dsvd(cs):
    """Power loading on the right singular vectors of ``H`` (direct SVD).

    The powers come from bisection on the interference price for a single
    single-antenna receiver and from the ellipsoid method otherwise.
    """
    f = matkernel.svd(cs.H)
    return _load(cs, f.U, f.lam, "d-svd")


def _projected_svd(H, U_sel):
    P = matkernel.null_projector(U_sel) if U_sel.shape[1] else np.eye(H.shape[1])
    H_perp = H @ P
    if not np.any(np.abs(H_perp) > matkernel.RANK_RTOL * np.abs(H).max()):
        return np.zeros((H.shape[1], 0), complex), np.zeros(0)
    f = matkernel.svd(H_perp)
    # re-project so the columns are exactly orthogonal to the nulled directions
    U = P @ f.U
    U, _ = np.linalg.qr(U)
    return U * matkernel._phase_fix(U), f.lam


def psvd(cs):
    """Water-filling on ``H`` projected onto the null space of every cross channel.

    Raises
    ------
    NotImplementableError
        If ``M_ts <= M_rp``: the cross channels leave no null space.
    """
    if cs.M_ts <= cs.M_rp:
        raise NotImplementableError(f"nulling {cs.M_rp} receive antennas needs more than {cs.M_ts} transmit antennas")
    if cs.K == 0:
        return dataclasses.replace(unconstrained_capacity(cs), method="p-svd", info={})
    U_G = matkernel.svd(cs.G_stacked).U
    U, lam = _projected_svd(cs.H, U_G)
    return _wf_result(cs, U, lam, "p-svd")


def _hybrid_directions(cs, b):
    """The ``b`` strongest directions of the cap-normalized cross channels.

    A zero cap stands for an infinitely heavy receiver, so its directions
    are taken first.
    """
    n = cs.M_ts
    if b == 0:
        return np.zeros((n, 0), complex)
    Gamma = np.asarray(cs.Gamma)
    hard = [cs.G[k] for k in np.flatnonzero(Gamma == 0)]
    soft = [cs.G[k] / np.sqrt(Gamma[k]) for k in np.flatnonzero(Gamma > 0)]
    cols = np.zeros((n, 0), complex)
    if hard:
        U_h = matkernel.svd(np.vstack(hard)).U
        if b <= U_h.shape[1]:
            return U_h[:, :b]
        cols = U_h
    if soft:
        G_hat = np.vstack(soft)
        if cols.shape[1]:
            G_hat = G_hat @ matkernel.null_projector(cols)
        if np.any(G_hat):
            f = matkernel.svd(G_hat)
            cols = np.hstack([cols, f.U[:, : b - cols.shape[1]]])
    return cols


def hybrid(cs, cfg):
    """Null the ``cfg.b`` dominant cap-normalized cross-channel directions, then load power.

    ``b = 0`` is :func:`dsvd`; nulling every cross-channel direction is
    :func:`psvd`. Interference that leaks through the remaining directions
    is kept under the caps by the constrained power loading.
    """
    if isinstance(cfg, int):
        cfg = HybridConfig(cfg)
    b = cfg.b
    if b > min(cs.M_ts, cs.M_rp) or b >= cs.M_ts:
        raise ValueError(f"b={b} outside [0, {min(cs.M_ts - 1, cs.M_rp)}]")
    U_b = _hybrid_directions(cs, b)
    U, lam = _projected_svd(cs.H, U_b)
    return _load(cs, U, lam, "hybrid", info={"b": b})


def best_hybrid(cs):
    """Try every admissible ``b`` and keep the highest rate (smallest ``b`` on ties)."""
    best = None
    for b in range(min(cs.M_ts - 1, cs.M_rp) + 1):
        res = hybrid(cs, HybridConfig(b))
        if best is None or res.rate > best[1].rate * (1 + 1e-12) + 1e-15:
            best = (HybridConfig(b), res)
    return best


def white_spectrum(cs):
    """Equal power on every transmit antenna, backed off until all caps hold."""
    n = cs.M_ts
    P = cs.P_t
    for Gk, cap in zip(cs.G, cs.Gamma):
        P = min(P, n * cap / float(np.sum(np.abs(Gk) ** 2)))
    if P <= 0:
        return make_result(Covariance.zeros(n), cs, "white")
    cov = Covariance.from_factors(np.eye(n, dtype=complex), np.full(n, P / n))
    return make_result(cov, cs, "white")
