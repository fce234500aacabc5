"""Central-cut ellipsoid method state, shared by the matrix-valued dual solvers."""

import numpy as np


class Ellipsoid:
    """Ellipsoid ``{c + L u : |u| <= 1}`` shrunk by half-space cuts.

    The shape is stored as the factor ``L`` of ``E = L L^T``; updating the
    factor keeps ``E`` positive definite after many cuts, where updating
    ``E`` directly drifts indefinite in floating point.

    Parameters
    ----------
    upper : array_like
        Upper corner of the box ``[0, upper]`` the optimum is known to lie
        in. The starting ellipsoid is the smallest axis-aligned one that
        covers the box.
    """

    def __init__(self, upper):
        upper = np.asarray(upper, dtype=float)
        self.n = n = upper.size
        self.center = 0.5 * upper
        self.L = np.diag(np.sqrt(max(n, 1)) * self.center) if n > 1 else np.diag(self.center)
        self._kappa = 1.0 - np.sqrt(1.0 - 2.0 / (n + 1))
        self._fac = np.sqrt(n * n / (n * n - 1.0)) if n > 1 else 0.5

    @property
    def E(self):
        return self.L @ self.L.T

    def width(self, g):
        """``sqrt(g^T E g)``: half the spread of ``g . x`` over the ellipsoid."""
        return float(np.linalg.norm(self.L.T @ g))

    def cut(self, g):
        """Keep the half ``{x : g . (x - center) <= 0}``. Returns False if degenerate."""
        p = self.L.T @ g
        root = float(np.linalg.norm(p))
        if not root > 0.0 or not np.isfinite(root):
            return False
        p = p / root
        b = self.L @ p
        if self.n == 1:
            self.center = self.center - 0.5 * b
            self.L = 0.5 * self.L
        else:
            self.center = self.center - b / (self.n + 1)
            self.L = self._fac * (self.L - self._kappa * np.outer(b, p))
        return True

    def negative_coordinate(self):
        """Index of the most negative center coordinate, or None if the center is >= 0."""
        j = int(np.argmin(self.center))
        return j if self.center[j] < 0 else None
