"""Analytical reference quantities: primary capacity loss and high-power slopes."""

from dataclasses import dataclass

import numpy as np

from .matkernel import inv_sqrt_psd
from .model import _as_matrix, _cov_matrix

__all__ = ["PrimaryLink", "capacity_loss_bound", "capacity_loss_actual", "multiplexing_slope"]


@dataclass(frozen=True)
class PrimaryLink:
    """A primary link hit by secondary interference.

    Parameters
    ----------
    H_k : array_like, shape (M_k, N_k)
        Primary channel.
    S_k : array_like, shape (N_k, N_k)
        Primary transmit covariance.
    phi_k : float
        Noise power at the primary receiver.
    G_k : array_like, shape (M_k, M_ts)
        Cross channel from the secondary transmitter.
    S : array_like or Covariance, shape (M_ts, M_ts)
        Secondary transmit covariance.
    """

    H_k: np.ndarray
    S_k: np.ndarray
    phi_k: float
    G_k: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        H_k = _as_matrix(self.H_k, "H_k")
        G_k = _as_matrix(self.G_k, "G_k")
        S_k = _cov_matrix(self.S_k)
        S = _cov_matrix(self.S)
        if S_k.shape != (H_k.shape[1],) * 2:
            raise ValueError("S_k must be N_k x N_k")
        if G_k.shape[0] != H_k.shape[0] or S.shape != (G_k.shape[1],) * 2:
            raise ValueError("G_k must have M_k rows and S must match its columns")
        if not self.phi_k > 0:
            raise ValueError("noise power must be positive")
        for name, val in (("H_k", H_k), ("G_k", G_k), ("S_k", S_k), ("S", S)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "phi_k", float(self.phi_k))

    @property
    def interference_cov(self):
        """``Q_k = G_k S G_k^H``."""
        Q = self.G_k @ self.S @ self.G_k.conj().T
        return 0.5 * (Q + Q.conj().T)


def capacity_loss_bound(M_k, N_k, Gamma_k, phi_k):
    """Worst-case primary rate loss ``min(M_k, N_k) * log2(1 + Gamma_k/phi_k)`` in bits.

    Examples
    --------
    >>> capacity_loss_bound(2, 3, 3.0, 1.0)
    4.0
    """
    if M_k < 1 or N_k < 1 or Gamma_k < 0 or phi_k <= 0:
        raise ValueError("need M_k, N_k >= 1, Gamma_k >= 0 and phi_k > 0")
    return float(min(M_k, N_k) * np.log2(1.0 + Gamma_k / phi_k))


def _logdet2(M):
    sign, val = np.linalg.slogdet(0.5 * (M + M.conj().T))
    return float(val) / np.log(2.0)


def capacity_loss_actual(p):
    """Primary rate without secondary interference minus the rate with it, in bits."""
    M = p.H_k.shape[0]
    signal = p.H_k @ p.S_k @ p.H_k.conj().T
    clean = _logdet2(np.eye(M) + signal / p.phi_k)
    W = inv_sqrt_psd(p.phi_k * np.eye(M) + p.interference_cov)
    hit = _logdet2(np.eye(M) + W @ signal @ W)
    return max(clean - hit, 0.0)


def multiplexing_slope(rate_fn, P_grid):
    """Least-squares slope of rate versus ``log2(P)`` over the top decade of `P_grid`.

    Parameters
    ----------
    rate_fn : callable or array_like
        Rate as a function of power, or the rates already evaluated on the grid.
    P_grid : array_like
        Increasing positive powers spanning at least two decades.

    Returns
    -------
    float
        Bits per doubling of power, i.e. the number of spatial streams the
        rate grows with asymptotically.
    """
    P = np.asarray(P_grid, dtype=float)
    if P.ndim != 1 or P.size < 2 or np.any(P <= 0) or np.any(np.diff(P) <= 0):
        raise ValueError("P_grid must hold at least two increasing positive powers")
    if P[-1] / P[0] < 100 * (1 - 1e-12):
        raise ValueError("P_grid must span at least two decades")
    rates = np.array([rate_fn(x) for x in P] if callable(rate_fn) else rate_fn, dtype=float)
    if rates.shape != P.shape:
        raise ValueError("one rate per grid point is needed")
    top = P >= P[-1] / 10 * (1 - 1e-12)
    if top.sum() < 2:
        raise ValueError("the top decade of P_grid needs at least two points")
    x = np.log2(P[top])
    return float(np.polyfit(x, rates[top], 1)[0])
