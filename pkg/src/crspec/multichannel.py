"""Multi-tone (OFDM or block-fading) covariance design by dual decomposition.

The total power budget couples the tones; pricing power at ``nu`` splits the
problem into independent per-tone problems

    maximize  log2 det(I + H_j S_j H_j^H) - nu * Tr(S_j)
    subject to  g_j S_j g_j^H <= gamma,  S_j >= 0,

and ``nu`` is set by bisection so the tones together spend the budget.
Prices passed to and returned from this module are in bits per unit power
(the per-tone objective above); internally the solvers work in nats.

All tones are solved together with batched ``numpy.linalg`` calls; the
per-tone work is independent, so the batch order never affects results.
"""

from dataclasses import dataclass, field

import numpy as np

from .model import Covariance, achievable_rate
from .waterfill import price_wf_batch

__all__ = [
    "ToneSet",
    "MultiAllocation",
    "solve_p7",
    "solve_p6",
    "per_tone_svd_select",
    "ofdm_tones",
    "gen_ofdm_channels",
]

LN2 = np.log(2.0)


@dataclass(frozen=True)
class ToneSet:
    """Per-tone secondary channels ``H[j]`` and cross rows ``g[j]`` with shared budget and cap.

    Parameters
    ----------
    H : array_like, shape (N, M_rs, M_ts)
    g : array_like, shape (N, M_ts)
    P_t : float
        Budget for the sum of transmit powers over all tones.
    gamma : float
        Interference cap, identical on every tone.
    """

    H: np.ndarray
    g: np.ndarray
    P_t: float
    gamma: float

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        g = np.asarray(self.g, dtype=complex)
        if H.ndim == 2:
            H = H[:, None, :]
        if H.ndim != 3 or H.shape[0] == 0:
            raise ValueError("H must be (N, M_rs, M_ts) with N >= 1")
        if g.shape != (H.shape[0], H.shape[2]):
            raise ValueError(f"g must be ({H.shape[0]}, {H.shape[2]}), got {g.shape}")
        if self.P_t < 0 or self.gamma < 0:
            raise ValueError("budget and cap must be nonnegative")
        H.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "P_t", float(self.P_t))
        object.__setattr__(self, "gamma", float(self.gamma))

    @classmethod
    def from_tones(cls, tones, P_t, gamma):
        """Build from a sequence of ``(H_j, g_j)`` pairs."""
        H = np.stack([np.atleast_2d(np.asarray(h, dtype=complex)) for h, _ in tones])
        g = np.stack([np.asarray(gj, dtype=complex).ravel() for _, gj in tones])
        return cls(H, g, P_t, gamma)

    @property
    def N(self):
        return self.H.shape[0]

    @property
    def M_ts(self):
        return self.H.shape[2]

    @property
    def tones(self):
        return list(zip(self.H, self.g))


@dataclass(frozen=True)
class MultiAllocation:
    """Per-tone covariances with the power price that produced them.

    ``gap`` is the relative distance between the total rate and the dual
    value at ``nu``; ``nu`` is in bits per unit power.
    """

    S: tuple
    nu: float
    total_power: float
    rates: np.ndarray
    gap: float = None
    method: str = "optimal"
    info: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def rate(self):
        return float(np.sum(self.rates))

    def interference(self, ts):
        return np.array([max(float(np.real(gj @ c.S @ gj.conj())), 0.0) for c, gj in zip(self.S, ts.g)])


# --------------------------------------------------------------- per-tone core


def _unit_cross(g):
    n2 = np.sum(np.abs(g) ** 2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        g_hat = np.where(n2[:, None] > 0, g.conj() / np.sqrt(n2)[:, None], 0.0)
    return g_hat, n2


class _Tones:
    """Batched per-tone inner maximizer at power price ``nu`` and interference price ``mu``."""

    def __init__(self, H, g):
        self.H, self.g = H, g
        self.g_hat, self.n2 = _unit_cross(g)
        self.eye = np.eye(H.shape[2])
        self.lam_max = np.linalg.norm(H, ord=2, axis=(1, 2)) ** 2

    def solve(self, idx, nu, s):
        """Inner solution on tones `idx`; ``s = sqrt(nu/(nu + mu*||g||^2))`` (``s=0``: nulling)."""
        gh = self.g_hat[idx]
        Bh = (self.eye + (s - 1.0)[:, None, None] * (gh[:, :, None] * gh[:, None, :].conj())) / np.sqrt(nu)
        Hw = self.H[idx] @ Bh
        lam, U = np.linalg.eigh(np.conj(np.swapaxes(Hw, 1, 2)) @ Hw)
        x = np.where(lam > 1.0, 1.0 - 1.0 / np.where(lam > 1.0, lam, 1.0), 0.0)
        F = Bh @ (U * np.sqrt(x)[:, None, :])
        power = np.sum(np.abs(F) ** 2, axis=(1, 2))
        interf = np.sum(np.abs(np.einsum("jm,jmr->jr", self.g[idx], F)) ** 2, axis=1)
        rate = np.sum(np.log1p(np.maximum(lam, 0.0) * x), axis=1)
        return F, power, interf, rate

    def s_of(self, idx, nu, mu):
        return np.sqrt(nu / (nu + mu * self.n2[idx]))


def _p7_batch(tn, nu, gamma, rtol=1e-13, max_iter=200):
    """Solve every tone at power price `nu` (nats). Returns F, power, interf, rate, mu."""
    N = tn.H.shape[0]
    allidx = np.arange(N)
    F, power, interf, rate = tn.solve(allidx, nu, np.ones(N))
    mu = np.zeros(N)
    bad = np.flatnonzero((interf > gamma) & (tn.n2 > 0))
    if bad.size == 0:
        return F, power, interf, rate, mu
    if gamma == 0:
        out = tn.solve(bad, nu, np.zeros(bad.size))
        mu[bad] = np.inf
    else:
        lo = np.zeros(bad.size)
        hi = nu / tn.n2[bad]
        for _ in range(200):
            out = tn.solve(bad, nu, tn.s_of(bad, nu, hi))
            grow = out[2] > gamma
            if not np.any(grow):
                break
            lo = np.where(grow, hi, lo)
            hi = np.where(grow, 8.0 * hi, hi)
        for _ in range(max_iter):
            open_ = hi - lo > rtol * hi
            if not np.any(open_):
                break
            mid = 0.5 * (lo + hi)
            sub = np.flatnonzero(open_)
            res = tn.solve(bad[sub], nu, tn.s_of(bad[sub], nu, mid[sub]))
            over = res[2] > gamma
            lo[sub[over]] = mid[sub[over]]
            hi[sub[~over]] = mid[sub[~over]]
        out = tn.solve(bad, nu, tn.s_of(bad, nu, hi))
        mu[bad] = hi
    F = F.copy()
    F[bad], power[bad], interf[bad], rate[bad] = out
    return F, power, interf, rate, mu


def _covariances(F):
    return tuple(Covariance.from_matrix(f @ f.conj().T) for f in F)


def solve_p7(H_j, g_j, nu, gamma):
    """Covariance maximizing ``log2 det(I + H S H^H) - nu*Tr(S)`` under ``g S g^H <= gamma``.

    The interference price is found by bisection; for a fixed pair of prices
    the maximizer is water-filling on the whitened channel
    ``H (nu*I + mu*g^H g)^{-1/2}``. A zero cap restricts transmission to
    the null space of ``g``.

    Parameters
    ----------
    H_j : array_like, shape (M_rs, M_ts)
    g_j : array_like, shape (M_ts,)
    nu : float
        Power price in bits per unit power, > 0.
    gamma : float
    """
    if nu <= 0:
        raise ValueError("power price must be positive")
    if gamma < 0:
        raise ValueError("cap must be nonnegative")
    H = np.atleast_2d(np.asarray(H_j, dtype=complex))[None]
    g = np.asarray(g_j, dtype=complex).ravel()[None]
    F = _p7_batch(_Tones(H, g), nu * LN2, float(gamma))[0]
    return _covariances(F)[0]


# ---------------------------------------------------------------- outer search


def _bisect_price(evaluate, nu_hi, P_t, rtol):
    """Bisection on the power price (nats). Returns (lo_state, hi_state, nu_lo, nu_hi, iters)."""
    nu_floor = 1e-12 * nu_hi
    lo_state = evaluate(nu_floor)
    if lo_state[1].sum() <= P_t:
        return lo_state, lo_state, nu_floor, nu_floor, 0
    hi_state = evaluate(nu_hi)
    lo, hi, it = nu_floor, nu_hi, 0
    while hi - lo > rtol * hi:
        it += 1
        mid = 0.5 * (lo + hi)
        st = evaluate(mid)
        if st[1].sum() > P_t:
            lo, lo_state = mid, st
        else:
            hi, hi_state = mid, st
    return lo_state, hi_state, lo, hi, it


def _rates_bits(ts, covs):
    return np.array([achievable_rate(c, h, check=False) for c, h in zip(covs, ts.H)])


def solve_p6(ts, delta_nu=1e-10, max_outer=None):
    """Capacity-achieving per-tone covariances under the shared budget.

    Bisection on the power price ``nu`` with all tones re-solved at each
    trial price. The last bracket's two allocations straddle the budget;
    their tone-wise convex combination spends it exactly and keeps every
    tone under its cap.

    Parameters
    ----------
    ts : ToneSet
    delta_nu : float
        Relative width of the final price bracket.

    Returns
    -------
    MultiAllocation
        ``gap`` compares the total rate with the dual function evaluated at
        the upper end of the bracket.
    """
    tn = _Tones(ts.H, ts.g)
    if ts.P_t == 0:
        covs = tuple(Covariance.zeros(ts.M_ts) for _ in range(ts.N))
        return MultiAllocation(covs, float(tn.lam_max.max() / LN2), 0.0, np.zeros(ts.N), gap=0.0)
    nu_hi = float(tn.lam_max.max())
    evaluate = lambda nu: _p7_batch(tn, nu, ts.gamma)  # noqa: E731
    lo_st, hi_st, nu_lo, nu, it = _bisect_price(evaluate, nu_hi, ts.P_t, delta_nu)

    F_lo, F_hi = lo_st[0], hi_st[0]
    p_lo, p_hi = lo_st[1].sum(), hi_st[1].sum()
    theta = 0.0 if p_lo <= p_hi else min(max((ts.P_t - p_hi) / (p_lo - p_hi), 0.0), 1.0)
    if nu_lo == nu:
        theta = 0.0
    S = [theta * (a @ a.conj().T) + (1 - theta) * (b @ b.conj().T) for a, b in zip(F_lo, F_hi)]
    covs = tuple(Covariance.from_matrix(s) for s in S)
    rates = _rates_bits(ts, covs)
    total = float(sum(c.trace for c in covs))

    # dual bound at the upper price: per-tone Lagrangian maxima plus nu*P_t
    _, power, interf, rate_n, mu = hi_st
    priced = np.isfinite(mu) & (mu > 0)
    slack = np.where(priced, interf - ts.gamma, 0.0) if np.isfinite(ts.gamma) else 0.0
    lagr = rate_n - nu * power - np.where(priced, mu, 0.0) * slack
    dual = (float(lagr.sum()) + nu * ts.P_t) / LN2
    primal = float(rates.sum())
    gap = max(dual - primal, 0.0) / max(primal, 1e-300)
    return MultiAllocation(covs, nu / LN2, total, rates, gap=gap, info={"iterations": it, "dual_bits": dual})


# ------------------------------------------------------ per-tone SVD selection


def _select_batch(ts, nu, g_hat):
    """Better of constrained direct-SVD and null-space-projected loading, tone by tone."""
    H, g = ts.H, ts.g
    N, M = ts.N, ts.M_ts
    _, s, Vh = np.linalg.svd(H, full_matrices=False)
    lam = s**2
    U = np.conj(np.swapaxes(Vh, 1, 2))
    alpha = np.abs(np.einsum("jm,jmr->jr", g, U)) ** 2
    lam_d = np.where(lam > 1e-12 * lam[:, :1], lam, 0.0)
    sig_d, _ = price_wf_batch(lam_d, alpha, nu, ts.gamma)
    obj_d = np.sum(np.log1p(lam_d * sig_d) - nu * sig_d, axis=1)

    proj = np.eye(M) - g_hat[:, :, None] * g_hat[:, None, :].conj()
    _, s_p, Vh_p = np.linalg.svd(H @ proj, full_matrices=False)
    lam_p = s_p**2
    lam_p = np.where(lam_p > 1e-12 * lam[:, :1], lam_p, 0.0)
    U_p = proj @ np.conj(np.swapaxes(Vh_p, 1, 2))
    with np.errstate(divide="ignore"):
        sig_p = np.where(lam_p > 0, np.maximum(1.0 / nu - 1.0 / np.where(lam_p > 0, lam_p, 1.0), 0.0), 0.0)
    obj_p = np.sum(np.log1p(lam_p * sig_p) - nu * sig_p, axis=1)

    use_p = obj_p > obj_d
    Uc = np.where(use_p[:, None, None], U_p, U)
    sig = np.where(use_p[:, None], sig_p, sig_d)
    F = Uc * np.sqrt(sig)[:, None, :]
    return F, sig.sum(axis=1), use_p


def per_tone_svd_select(ts, delta_nu=1e-10):
    """Dual decomposition where each tone uses the better SVD-structured solution.

    At every trial price each tone compares direct-SVD loading under its cap
    with zero-interference loading on the channel projected away from
    ``g_j``, and keeps whichever scores higher on the priced objective.

    Returns
    -------
    MultiAllocation
        ``method`` is ``"svd-select"``; ``info["projected"]`` flags the tones
        that chose the projection.
    """
    if ts.M_ts < 2:
        raise ValueError("per-tone selection needs at least two transmit antennas")
    g_hat, _ = _unit_cross(ts.g)
    nu_hi = float((np.linalg.norm(ts.H, ord=2, axis=(1, 2)) ** 2).max())
    if ts.P_t == 0:
        covs = tuple(Covariance.zeros(ts.M_ts) for _ in range(ts.N))
        return MultiAllocation(covs, nu_hi / LN2, 0.0, np.zeros(ts.N), method="svd-select")
    evaluate = lambda nu: _select_batch(ts, nu, g_hat)  # noqa: E731
    _, (F, power, use_p), _, nu, it = _bisect_price(evaluate, nu_hi, ts.P_t, delta_nu)
    covs = _covariances(F)
    rates = _rates_bits(ts, covs)
    return MultiAllocation(
        covs,
        nu / LN2,
        float(power.sum()),
        rates,
        method="svd-select",
        info={"iterations": it, "projected": use_p},
    )


# ------------------------------------------------------------- channel models


def ofdm_tones(taps_H, taps_g, N):
    """Frequency response ``X_j = sum_l T_l exp(-2i*pi*j*l/N)`` of tap sequences.

    Parameters
    ----------
    taps_H : array_like, shape (L, M_rs, M_ts)
    taps_g : array_like, shape (L, M_ts)
    N : int
        Number of tones, ``N >= L``.

    Returns
    -------
    H : ndarray, shape (N, M_rs, M_ts)
    g : ndarray, shape (N, M_ts)
    """
    taps_H = np.asarray(taps_H, dtype=complex)
    taps_g = np.asarray(taps_g, dtype=complex)
    L = taps_H.shape[0]
    if L > N or taps_g.shape[0] != L:
        raise ValueError(f"need the same number of taps L <= N, got {L}, {taps_g.shape[0]} for N={N}")
    return np.fft.fft(taps_H, n=N, axis=0), np.fft.fft(taps_g, n=N, axis=0)


def gen_ofdm_channels(N, L, M_rs, M_ts, P_t=1.0, gamma=0.1, var_H=1.0, var_G=0.1, rng=None):
    """Random frequency-selective channels with ``L`` equal-energy taps.

    Each tap entry is circularly-symmetric complex Gaussian with variance
    ``var/L``, so every tone has per-entry variance ``var``.

    Parameters
    ----------
    rng : numpy.random.Generator or int, optional
    """
    if L > N:
        raise ValueError(f"L={L} taps exceed N={N} tones")
    rng = np.random.default_rng(rng)

    def cscg(shape, var):
        return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    taps_H = cscg((L, M_rs, M_ts), var_H / L)
    taps_g = cscg((L, M_ts), var_G / L)
    H, g = ofdm_tones(taps_H, taps_g, N)
    return ToneSet(H, g, P_t, gamma)
