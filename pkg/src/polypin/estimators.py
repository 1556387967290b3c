"""scikit-learn style wrappers around the functional core.

The estimators are thin: ``fit`` runs the corresponding computation and stores
the result in trailing-underscore attributes, ``transform``/``predict``
evaluate it.  ``get_params``/``set_params`` come from ``BaseEstimator``.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .chain import bridge_density_table
from .potentials import PotentialSpec, require_certified
from .renewal import solve_mu
from .spectral import Grid, nystrom_v, spectral_data


def _as_spectral(obj):
    if isinstance(obj, TransferOperator):
        check_is_fitted(obj, "spectral_data_")
        return obj.spectral_data_
    return obj


class TransferOperator(BaseEstimator):
    """Perron eigen-data of the discretized transfer operator.

    Parameters
    ----------
    L : float
        Half width of the truncated domain.
    n_points : int
        Number of grid nodes (odd, so that 0 is a node).
    tol, max_iter
        Power-iteration controls.
    """

    def __init__(self, L=8.0, n_points=257, tol=1e-10, max_iter=10000):
        self.L = L
        self.n_points = n_points
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        """``X`` is a :class:`PotentialSpec`."""
        if not isinstance(X, PotentialSpec):
            raise TypeError("TransferOperator.fit expects a PotentialSpec")
        spec = require_certified(X)
        sd = spectral_data(spec, Grid.symmetric(self.L, self.n_points),
                           tol=self.tol, max_iter=self.max_iter)
        self.spec_ = spec
        self.spectral_data_ = sd
        self.lambda_ = sd.lam
        self.nodes_ = sd.grid.nodes
        self.v_ = sd.v
        self.w_ = sd.w
        self.pi_ = sd.pi_weights
        return self

    def transform(self, X):
        """Right eigenfunction at arbitrary points (Nystrom extension)."""
        check_is_fitted(self, "spectral_data_")
        x = np.asarray(X, dtype=float).ravel()
        return nystrom_v(self.spectral_data_, x)


class BridgeDensity(BaseEstimator):
    """Bridge densities ``phi[n]`` of the integrated chain at the origin."""

    def __init__(self, n_max=401, n_direct=128):
        self.n_max = n_max
        self.n_direct = n_direct

    def fit(self, X, y=None):
        """``X`` is a fitted :class:`TransferOperator` or spectral data."""
        sd = _as_spectral(X)
        self.table_ = bridge_density_table(sd, self.n_max, n_direct=self.n_direct)
        self.phi_ = self.table_.phi
        return self

    def predict(self, X):
        check_is_fitted(self, "table_")
        ns = np.asarray(X, dtype=int).ravel()
        return np.array([self.table_.at(int(n)) for n in ns])


class RenewalLowerBound(BaseEstimator):
    """Certified ``mu_eps`` brackets, the lower bound on the free energy."""

    def __init__(self, n_trunc=200):
        self.n_trunc = n_trunc

    def fit(self, X, y=None):
        """``X`` is a fitted :class:`BridgeDensity` or a density table."""
        if isinstance(X, BridgeDensity):
            check_is_fitted(X, "table_")
            X = X.table_
        self.table_ = X
        return self

    def predict(self, X):
        """Midpoint of the ``mu`` bracket for each ``eps`` in ``X``."""
        return self.brackets(X)[:, 1:].mean(axis=1)

    def brackets(self, X):
        """Rows ``(eps, mu_lo, mu_hi)``."""
        check_is_fitted(self, "table_")
        out = []
        for eps in np.asarray(X, dtype=float).ravel():
            b = solve_mu(self.table_, float(eps), n_trunc=self.n_trunc)
            out.append((b.eps, b.mu_lo, b.mu_hi))
        return np.array(out)
