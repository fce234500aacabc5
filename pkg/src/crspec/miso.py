"""Exact beamformers for a single-antenna secondary receiver (MISO link).

For a row channel ``h`` the optimal covariance is rank one, ``S = v v^H``,
so the problem reduces to maximizing the receive SNR ``|h v|^2``. With one
single-antenna primary receiver the optimum has a closed form
(:func:`closed_form_beamformer`); with several it comes from the SNR dual,
``min nu*P_t + sum(mu_k*Gamma_k)`` subject to
``nu*I + sum(mu_k G_k^H G_k) - h^H h >= 0`` (:func:`solve_p5`). The optimal
SNR equals that dual value, so ``log2(1 + dual)`` bounds the rate.
"""

import numpy as np

from ._ellipsoid import Ellipsoid
from .model import ChannelSet, Covariance, DualPoint, make_result, negligible_caps

__all__ = [
    "MisoDecomposition",
    "DualPoint",
    "DualRecoveryError",
    "decompose",
    "closed_form_beamformer",
    "theorem2_beamformer",
    "solve_p5",
]

_PAR_TOL = 1e-12


class DualRecoveryError(RuntimeError):
    """The dual point is too inaccurate to read a beamformer off its null space."""


class MisoDecomposition:
    """Split of ``h^H`` along the cross channel and its orthogonal complement.

    ``h^H = alpha_h * g_hat + beta_h * h_perp_hat`` with ``g_hat = g^H/||g||``
    and ``h_perp_hat`` a unit vector orthogonal to ``g_hat``. When ``h`` is
    parallel to ``g``, ``beta_h = 0`` and ``h_perp_hat`` is an arbitrary unit
    vector orthogonal to ``g_hat`` (zero if there is no room, ``M_ts = 1``).
    """

    __slots__ = ("alpha_h", "beta_h", "g_hat", "h_perp_hat")

    def __init__(self, alpha_h, beta_h, g_hat, h_perp_hat):
        self.alpha_h = complex(alpha_h)
        self.beta_h = complex(beta_h)
        self.g_hat = g_hat
        self.h_perp_hat = h_perp_hat

    def __repr__(self):
        return f"MisoDecomposition(alpha_h={self.alpha_h:.6g}, beta_h={self.beta_h:.6g})"


def _row(x, name):
    x = np.asarray(x, dtype=complex)
    if x.ndim == 2 and x.shape[0] == 1:
        x = x[0]
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"{name} must be a row vector")
    return x


def _orthogonal_unit(u):
    """Some unit vector orthogonal to unit `u` (zeros if `u` spans the space)."""
    n = u.size
    if n == 1:
        return np.zeros(1, dtype=complex)
    e = np.zeros(n, dtype=complex)
    e[int(np.argmin(np.abs(u)))] = 1.0
    w = e - np.vdot(u, e) * u
    return w / np.linalg.norm(w)


def decompose(h, g):
    """Decompose ``h^H`` against the direction of ``g^H``.

    Examples
    --------
    >>> d = decompose([1, 1], [1, 0])
    >>> d.alpha_h, d.beta_h
    ((1+0j), (1+0j))
    """
    h, g = _row(h, "h"), _row(g, "g")
    if h.shape != g.shape:
        raise ValueError("h and g must have the same length")
    ng, nh = np.linalg.norm(g), np.linalg.norm(h)
    if ng == 0 or nh == 0:
        raise ValueError("h and g must be nonzero")
    h_col = h.conj()
    g_hat = g.conj() / ng
    alpha = np.vdot(g_hat, h_col)
    h_perp = h_col - alpha * g_hat
    beta = np.linalg.norm(h_perp)
    if beta <= _PAR_TOL * nh:
        return MisoDecomposition(alpha, 0.0, g_hat, _orthogonal_unit(g_hat))
    return MisoDecomposition(alpha, beta, g_hat, h_perp / beta)


def _beam_result(v, cs, method, **kw):
    power = float(np.vdot(v, v).real)
    if power == 0:
        cov = Covariance.zeros(v.size)
    else:
        cov = Covariance.from_factors(v / np.sqrt(power), [power])
    return make_result(cov, cs, method, **kw)


def closed_form_beamformer(h, g, P_t, gamma):
    """Capacity-achieving beamformer with one single-antenna primary receiver.

    If the cap is loose enough the maximal-ratio beamformer
    ``sqrt(P_t) h^H/||h||`` is optimal. Otherwise the component along the
    cross channel is cut back until the interference equals ``gamma`` and the
    remaining power goes to the orthogonal part of ``h``, so both constraints
    hold with equality.

    Returns
    -------
    PrecoderResult
        Method tag ``"miso-closed-form"``; ``info["case"]`` is ``"mrc"``,
        ``"split"``, ``"orthogonal"`` (``h`` orthogonal to ``g``) or
        ``"parallel"`` (``h`` parallel to ``g``).
    """
    h, g = _row(h, "h"), _row(g, "g")
    if P_t <= 0 or gamma < 0:
        raise ValueError("need P_t > 0 and gamma >= 0")
    cs = ChannelSet(h, [g], P_t, [gamma], check_rank=False)
    d = decompose(h, g)
    ng2 = float(np.vdot(g, g).real)
    mrc = h.conj() / np.linalg.norm(h)
    a2, b2 = abs(d.alpha_h) ** 2, abs(d.beta_h) ** 2
    if a2 <= (_PAR_TOL * np.linalg.norm(h)) ** 2:
        v, case = np.sqrt(P_t) * mrc, "orthogonal"
    elif d.beta_h == 0:
        v, case = np.sqrt(min(P_t, gamma / ng2)) * mrc, "parallel"
    elif gamma >= ng2 * a2 / (a2 + b2) * P_t:
        v, case = np.sqrt(P_t) * mrc, "mrc"
    else:
        alpha_v = np.sqrt(gamma / ng2) * d.alpha_h / abs(d.alpha_h)
        beta_v = np.sqrt(P_t - gamma / ng2) * d.beta_h / abs(d.beta_h)
        v, case = alpha_v * d.g_hat + beta_v * d.h_perp_hat, "split"
    return _beam_result(v, cs, "miso-closed-form", info={"case": case, "v": v})


theorem2_beamformer = closed_form_beamformer


def _mrc_if_feasible(h, G, P_t, Gamma):
    v = np.sqrt(P_t) * h.conj() / np.linalg.norm(h)
    if all(np.linalg.norm(Gk @ v) ** 2 <= c for Gk, c in zip(G, Gamma)):
        return v
    return None


def _null_basis(Z, n):
    """Orthonormal basis (columns) of the null space of the rows of `Z`."""
    if Z.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, Vh = np.linalg.svd(Z)
    r = int(np.count_nonzero(s > 1e-12 * s[0])) if s.size and s[0] > 0 else 0
    return Vh[r:].conj().T


def _snr_dual(h, G, P_t, Gamma, rtol, max_iter):
    """Ellipsoid method on the SNR dual. Returns (best y, best value, iterations)."""
    K = len(G)
    n = K + 1
    hh = np.outer(h.conj(), h)
    GG = [Gk.conj().T @ Gk for Gk in G]
    c = np.concatenate(([P_t], Gamma))
    snr = float(np.vdot(h, h).real)
    ell = Ellipsoid(np.concatenate(([snr], snr * P_t / np.asarray(Gamma))) * 1.01)
    best_y, best_val = None, np.inf
    it = 0
    while it < max_iter:
        it += 1
        j = ell.negative_coordinate()
        if j is not None:
            g = np.zeros(n)
            g[j] = -1.0
        else:
            y = ell.center
            M = y[0] * np.eye(h.size) - hh
            for k in range(K):
                M = M + y[k + 1] * GG[k]
            d, W = np.linalg.eigh(M)
            if d[0] < 0:
                w = W[:, 0]
                g = -np.concatenate(([1.0], [np.linalg.norm(Gk @ w) ** 2 for Gk in G]))
            else:
                val = float(c @ y)
                if val < best_val:
                    best_y, best_val = y.copy(), val
                g = c
                if ell.width(c) <= rtol * best_val:
                    break
        if not ell.cut(g):
            break
    return best_y, best_val, it


def _recover_beam(h, G, P_t, Gamma, y, null_rtol):
    """Beamformer in the null space of the stationarity matrix at dual point `y`."""
    M = y[0] * np.eye(h.size) - np.outer(h.conj(), h)
    for k, Gk in enumerate(G):
        M = M + y[k + 1] * (Gk.conj().T @ Gk)
    d, W = np.linalg.eigh(0.5 * (M + M.conj().T))
    scale = max(float(np.vdot(h, h).real), abs(y[0]))
    if d[0] > null_rtol * scale:
        return None
    N = W[:, d <= d[0] + null_rtol * scale]
    v = N @ (N.conj().T @ h.conj())
    if np.linalg.norm(v) <= 1e-12 * np.linalg.norm(h):
        v = N[:, 0]
    v = v / np.linalg.norm(v)
    power = P_t
    for Gk, cap in zip(G, Gamma):
        leak = np.linalg.norm(Gk @ v) ** 2
        if leak > 0:
            power = min(power, cap / leak)
    v = np.sqrt(power) * v
    hv = h @ v
    if abs(hv) > 0:
        v = v * (abs(hv) / hv)
    return v


def _kkt_polish(h, B, c, y, active, max_iter=30):
    """Newton refinement of the SNR dual on its active set.

    With ``A = sum(y_i B_i)`` positive definite, the dual constraint reads
    ``h A^{-1} h^H <= 1`` and the optimal beam is ``sqrt(lam) A^{-1} h^H``
    with ``lam * w^H B_i w = c_i`` on active coordinates. Returns
    ``(y, beam)`` or None if the iteration leaves the region where this holds.
    """
    idx = np.flatnonzero(active)
    y = y.copy()
    hc = h.conj()
    lam = None
    for _ in range(max_iter):
        A = sum(y[i] * B[i] for i in idx)
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            return None
        solve = lambda X: np.linalg.solve(L.conj().T, np.linalg.solve(L, X))
        w = solve(hc)
        Bw = np.stack([B[i] @ w for i in idx], axis=1)
        q = np.real(np.einsum("i,ij->j", w.conj(), Bw))
        if lam is None:
            lam = float(c[idx] @ q / (q @ q))
        ABw = solve(Bw)
        Jq = -2.0 * np.real(Bw.conj().T @ ABw)
        F = np.concatenate((lam * q - c[idx], [float(np.real(h @ w)) - 1.0]))
        if np.abs(F).max() <= 1e-14 * max(1.0, np.abs(c).max()):
            break
        m = idx.size
        J = np.zeros((m + 1, m + 1))
        J[:m, :m] = lam * Jq
        J[:m, m] = q
        J[m, :m] = -q
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        y[idx] += step[:m]
        lam += step[m]
        if np.any(y[idx] <= 0) or lam <= 0:
            return None
    else:
        return None
    return y, np.sqrt(lam) * w


def _scale_feasible(v, G, P_t, Gamma):
    power = float(np.vdot(v, v).real)
    t = 1.0 if power <= P_t else P_t / power
    for Gk, cap in zip(G, Gamma):
        leak = np.linalg.norm(Gk @ v) ** 2
        if leak > cap:
            t = min(t, cap / leak)
    return np.sqrt(t) * v


def solve_p5(h, G, P_t, Gamma, rtol=1e-12, null_rtol=1e-6, max_iter=None):
    """Optimal beamformer for a MISO link under several interference caps.

    Solves the SNR dual over ``(nu, mu_1..mu_K)`` with the ellipsoid method
    (objective cuts along ``(P_t, Gamma)``, feasibility cuts from the
    eigenvector of the most negative eigenvalue of the stationarity matrix)
    and reads the beamformer off that matrix's null space, choosing the
    null-space vector closest to ``h^H`` and scaling it until the tightest
    constraint is active.

    Parameters
    ----------
    h : array_like, shape (M_ts,)
    G : sequence of array_like
        Cross channels, each ``(M_k, M_ts)``.
    P_t : float
    Gamma : sequence of float
    rtol : float
        Relative accuracy of the dual objective.
    null_rtol : float
        Eigenvalues within ``null_rtol * ||h||^2`` of the smallest span the
        null space.

    Returns
    -------
    dual : DualPoint
        SNR multipliers (``nu`` prices power, ``mu_k`` interference).
    result : PrecoderResult
        Method ``"optimal"``; ``gap`` is the relative distance between the
        achieved rate and ``log2(1 + dual value)``.

    Raises
    ------
    DualRecoveryError
        If no null space shows up even after three refinements of the dual.
    """
    h = _row(h, "h")
    if not np.any(h):
        raise ValueError("h must be nonzero")
    G = [np.atleast_2d(np.asarray(Gk, dtype=complex)) for Gk in G]
    Gamma = np.asarray(Gamma, dtype=float).ravel()
    if not G or len(G) != Gamma.size:
        raise ValueError("need K >= 1 cross channels with one cap each")
    if P_t < 0 or np.any(Gamma < 0):
        raise ValueError("budget and caps must be nonnegative")
    cs = ChannelSet(h, G, P_t, Gamma, check_rank=False)
    K, n = len(G), h.size
    snr_max = float(np.vdot(h, h).real)

    v = _mrc_if_feasible(h, G, P_t, Gamma)
    if v is not None:
        res = _beam_result(v, cs, "optimal", gap=0.0)
        return DualPoint(snr_max, np.zeros(K)), res
    if P_t == 0:
        return DualPoint(0.0, np.zeros(K)), _beam_result(np.zeros(n, complex), cs, "optimal", gap=0.0)

    # zero caps confine the beam to the common null space of those receivers
    zero = negligible_caps(G, P_t, Gamma)
    Z = np.vstack([G[k] for k in np.flatnonzero(zero)]) if np.any(zero) else np.zeros((0, n))
    B = _null_basis(Z, n)
    h_r = h @ B
    live = [k for k in np.flatnonzero(~zero) if np.linalg.norm(G[k] @ B) > 1e-12 * np.linalg.norm(G[k])]
    mu = np.zeros(K)
    if B.shape[1] == 0 or np.linalg.norm(h_r) <= 1e-12 * np.linalg.norm(h):
        return DualPoint(0.0, mu), _beam_result(np.zeros(n, complex), cs, "optimal", gap=0.0)
    G_r = [G[k] @ B for k in live]
    G_live = Gamma[live]
    v = _mrc_if_feasible(h_r, G_r, P_t, G_live)
    if v is not None:
        return DualPoint(float(np.vdot(h_r, h_r).real), mu), _beam_result(B @ v, cs, "optimal", gap=0.0)

    nd = len(live) + 1
    if max_iter is None:
        max_iter = max(1000 * nd * nd, 2000)
    tol, iters = rtol, 0
    for _ in range(4):
        y, val, it = _snr_dual(h_r, G_r, P_t, G_live, tol, max_iter)
        iters += it
        if y is not None:
            v = _recover_beam(h_r, G_r, P_t, G_live, y, null_rtol)
            if v is not None:
                break
        tol *= 1e-2
    else:
        raise DualRecoveryError("stationarity matrix has no null space at the dual point")

    # the ellipsoid pins the dual value far better than the dual point, so
    # sharpen the point on its active set before trusting the beam
    Bmats = [np.eye(h_r.size, dtype=complex)] + [Gk.conj().T @ Gk for Gk in G_r]
    c = np.concatenate(([P_t], G_live))
    upper = np.concatenate(([snr_max], snr_max * P_t / G_live))
    polished = _kkt_polish(h_r, Bmats, c, y, y > 1e-9 * upper)
    if polished is not None:
        y_p, v_p = polished
        v_p = _scale_feasible(v_p, G_r, P_t, G_live)
        if abs(h_r @ v_p) >= abs(h_r @ v):
            y, v = y_p, v_p * (abs(h_r @ v_p) / (h_r @ v_p))
            val = min(val, float(c @ y))
    mu[live] = y[1:]
    res = _beam_result(B @ v, cs, "optimal", info={"iterations": iters, "dual_snr": val})
    bound = np.log2(1.0 + val)
    gap = max(bound - res.rate, 0.0) / max(res.rate, np.finfo(float).tiny)
    res = make_result(res.cov, cs, "optimal", gap=gap, info=res.info)
    return DualPoint(y[0], mu), res
