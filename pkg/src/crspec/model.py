"""Domain types and the basic physical quantities every solver consumes.

Conventions: ``H`` maps transmit antennas (columns) to secondary receive
antennas (rows); each cross channel ``G[k]`` has one row per receive antenna
of primary receiver ``k``. Rates are in bits per complex dimension.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelSet",
    "Covariance",
    "DualPoint",
    "PrecoderResult",
    "achievable_rate",
    "interference_power",
    "expand_per_antenna",
    "make_result",
    "negligible_caps",
    "CAP_FLOOR",
    "METHODS",
]

#: valid method tags of a :class:`PrecoderResult` (``hybrid(b)`` carries b)
METHODS = ("optimal", "miso-closed-form", "d-svd", "p-svd", "hybrid", "white")

PSD_RTOL = 1e-9

#: a cap below ``CAP_FLOOR * P_t * ||G_k||_2^2`` is solved as a zero cap; the
#: rate given up is at most the cap times its price, far below any tolerance
CAP_FLOOR = 1e-13


def _as_matrix(M, name):
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        M = M[None, :]
    if M.ndim != 2 or 0 in M.shape:
        raise ValueError(f"{name} must be a nonempty 2-D matrix")
    return M


def _full_rank(M):
    s = np.linalg.svd(M, compute_uv=False)
    return s[0] > 0 and np.count_nonzero(s > 1e-12 * s[0]) == min(M.shape)


@dataclass(frozen=True)
class ChannelSet:
    """Secondary channel, cross channels, power budget and interference caps.

    Parameters
    ----------
    H : array_like, shape (M_rs, M_ts)
        Secondary channel; a 1-D input is read as a single row (MISO).
    G : sequence of array_like
        Cross channels, ``G[k]`` of shape (M_k, M_ts).
    P_t : float
        Transmit-power budget.
    Gamma : sequence of float
        Interference caps, one per cross channel.
    """

    H: np.ndarray
    G: tuple = ()
    P_t: float = 1.0
    Gamma: tuple = ()
    check_rank: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        H = _as_matrix(self.H, "H")
        G = tuple(_as_matrix(g, f"G[{k}]") for k, g in enumerate(self.G))
        Gamma = tuple(float(x) for x in np.atleast_1d(np.asarray(self.Gamma, dtype=float)))
        if len(G) != len(Gamma):
            raise ValueError(f"{len(G)} cross channels but {len(Gamma)} caps")
        for k, g in enumerate(G):
            if g.shape[1] != H.shape[1]:
                raise ValueError(f"G[{k}] has {g.shape[1]} columns, H has {H.shape[1]}")
        if self.P_t < 0 or any(x < 0 for x in Gamma):
            raise ValueError("power budget and caps must be nonnegative")
        if self.check_rank:
            if not _full_rank(H):
                raise ValueError("H must be full rank")
            for k, g in enumerate(G):
                if not _full_rank(g):
                    raise ValueError(f"G[{k}] must be full rank")
        H.setflags(write=False)
        for g in G:
            g.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "Gamma", Gamma)
        object.__setattr__(self, "P_t", float(self.P_t))

    @property
    def M_ts(self):
        return self.H.shape[1]

    @property
    def M_rs(self):
        return self.H.shape[0]

    @property
    def K(self):
        return len(self.G)

    @property
    def M_k(self):
        return tuple(g.shape[0] for g in self.G)

    @property
    def M_rp(self):
        return sum(self.M_k)

    @property
    def G_stacked(self):
        """All cross-channel rows stacked receiver by receiver, shape (M_rp, M_ts)."""
        if not self.G:
            return np.zeros((0, self.M_ts), dtype=complex)
        return np.vstack(self.G)

    def replace(self, **changes):
        kw = dict(H=self.H, G=self.G, P_t=self.P_t, Gamma=self.Gamma, check_rank=self.check_rank)
        kw.update(changes)
        return ChannelSet(**kw)


@dataclass(frozen=True)
class Covariance:
    """Hermitian PSD transmit covariance with its eigen-factorization.

    ``S = V diag(sigma) V^H`` where ``V`` has orthonormal columns and
    ``sigma`` holds the positive eigenvalues (per-stream powers).
    """

    S: np.ndarray
    V: np.ndarray
    sigma: np.ndarray

    @classmethod
    def from_matrix(cls, S, rtol=1e-12):
        S = np.atleast_2d(np.asarray(S, dtype=complex))
        S = 0.5 * (S + S.conj().T)
        d, V = np.linalg.eigh(S)
        d, V = d[::-1], V[:, ::-1]
        tr = max(float(np.real(np.trace(S))), 0.0)
        if d.size and d[-1] < -PSD_RTOL * max(tr, 1e-300):
            raise ValueError("covariance is not positive semidefinite")
        keep = d > rtol * max(d[0] if d.size else 0.0, 0.0)
        if not np.any(d > 0):
            keep[:] = False
        return cls._build(S, V[:, keep], d[keep])

    @classmethod
    def from_factors(cls, V, sigma):
        V = np.asarray(V, dtype=complex)
        if V.ndim == 1:
            V = V[:, None]
        sigma = np.asarray(sigma, dtype=float).ravel()
        if np.any(sigma < 0):
            raise ValueError("stream powers must be nonnegative")
        keep = sigma > 0
        V, sigma = V[:, keep], sigma[keep]
        if V.shape[1] and np.abs(V.conj().T @ V - np.eye(V.shape[1])).max() > 1e-8:
            raise ValueError("precoder columns are not orthonormal")
        S = (V * sigma) @ V.conj().T
        return cls._build(0.5 * (S + S.conj().T), V, sigma)

    @classmethod
    def zeros(cls, n):
        return cls._build(np.zeros((n, n), dtype=complex), np.zeros((n, 0), dtype=complex), np.zeros(0))

    @classmethod
    def _build(cls, S, V, sigma):
        for a in (S, V, sigma):
            a.setflags(write=False)
        return cls(S=S, V=V, sigma=sigma)

    @property
    def rank(self):
        return self.sigma.size

    @property
    def trace(self):
        return float(np.real(np.trace(self.S)))

    def scaled(self, t):
        if t < 0:
            raise ValueError("scale must be nonnegative")
        if t == 0:
            return Covariance.zeros(self.S.shape[0])
        return Covariance._build(self.S * t, self.V, self.sigma * t)


@dataclass(frozen=True)
class DualPoint:
    """Nonnegative multipliers for the power constraint and each interference cap."""

    nu: float
    mu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float).ravel())


@dataclass(frozen=True)
class PrecoderResult:
    """Transmit covariance chosen by a solver together with what it achieves.

    ``gap`` is the relative duality gap certified by the solver when it has
    one, ``dual`` the multipliers it ended at.
    """

    cov: Covariance
    rate: float
    tx_power: float
    interference: np.ndarray
    method: str
    dual: DualPoint = None
    gap: float = None
    converged: bool = True
    info: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def S(self):
        return self.cov.S


def _cov_matrix(S):
    return S.S if isinstance(S, Covariance) else np.atleast_2d(np.asarray(S, dtype=complex))


def _check_psd(S):
    d = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    tr = float(np.real(np.trace(S)))
    if d.size and d[0] < -PSD_RTOL * max(abs(tr), 1.0):
        raise ValueError("covariance is not positive semidefinite")


def achievable_rate(S, H, check=True):
    """``log2 det(I + H S H^H)`` in bits per complex dimension."""
    S = _cov_matrix(S)
    H = _as_matrix(H, "H")
    if S.shape != (H.shape[1], H.shape[1]):
        raise ValueError(f"S is {S.shape}, H needs {H.shape[1]}x{H.shape[1]}")
    if check:
        _check_psd(S)
    M = np.eye(H.shape[0]) + H @ S @ H.conj().T
    sign, logdet = np.linalg.slogdet(0.5 * (M + M.conj().T))
    if sign.real <= 0:
        raise ValueError("I + H S H^H is not positive definite")
    return max(float(logdet) / np.log(2.0), 0.0)


def interference_power(S, G_k):
    """``Tr(G_k S G_k^H)``: total interference power at one primary receiver."""
    S = _cov_matrix(S)
    G_k = _as_matrix(G_k, "G_k")
    if S.shape != (G_k.shape[1], G_k.shape[1]):
        raise ValueError(f"S is {S.shape}, G_k needs {G_k.shape[1]}x{G_k.shape[1]}")
    return max(float(np.real(np.trace(G_k @ S @ G_k.conj().T))), 0.0)


def expand_per_antenna(cs, gamma_per_antenna):
    """Turn per-antenna caps into one single-antenna receiver per cross-channel row.

    Receiver ``k`` with ``M_k`` antennas and per-antenna cap ``gamma[k]``
    becomes ``M_k`` single-row receivers each capped at ``gamma[k]``, in the
    original stacking order.
    """
    gam = np.atleast_1d(np.asarray(gamma_per_antenna, dtype=float))
    if gam.size != cs.K:
        raise ValueError(f"need {cs.K} per-antenna caps, got {gam.size}")
    if cs.K == 0:
        return cs
    rows, caps = [], []
    for g, c in zip(cs.G, gam):
        for row in g:
            rows.append(row[None, :])
            caps.append(float(c))
    return cs.replace(G=tuple(rows), Gamma=tuple(caps))


def negligible_caps(G, P_t, Gamma):
    """Mask of caps too small to tell apart from zero at budget `P_t`."""
    Gamma = np.asarray(Gamma, dtype=float)
    scale = np.array([np.linalg.norm(g, 2) ** 2 for g in G]) * P_t
    return Gamma <= CAP_FLOOR * scale


def make_result(cov, cs, method, **kw):
    """Assemble a :class:`PrecoderResult`, evaluating rate, power and interference on `cs`."""
    rate = achievable_rate(cov, cs.H, check=False)
    interference = np.array([interference_power(cov, g) for g in cs.G])
    return PrecoderResult(
        cov=cov, rate=rate, tx_power=cov.trace, interference=interference, method=method, **kw
    )
