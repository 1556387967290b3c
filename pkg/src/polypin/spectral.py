"""Nystrom discretization of the transfer operator and its Perron eigenpair.

The operator acts as ``(K f)(x) = int k(x, y) f(y) dy`` with the positive kernel
``k(x, y) = exp(-V1(y) - V2(y - x))``.  On a uniform grid with trapezoid weights
it becomes the matrix ``K[i, j] = k(x_i, x_j) * weight_j``.  From the principal
eigenvalue ``lam`` and the positive right/left eigenvectors ``v``, ``w`` we build
the Markov transition density

    p(x, y) = k(x, y) v(y) / (lam v(x))

and its invariant law ``pi(dx) ∝ v(x) w(x) dx``.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from ._validation import check_int, check_positive
from .exceptions import ConvergenceError, DomainError, NumericalError
from .potentials import require_certified


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[x_min, x_max]`` with trapezoid weights."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        n = check_int(self.n_points, "n_points", lower=2)
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)
                and self.x_max > self.x_min):
            raise DomainError("grid needs finite x_min < x_max")
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))

    @classmethod
    def symmetric(cls, L, n_points):
        L = check_positive(L, "L")
        return cls(-L, L, n_points)

    @classmethod
    def lattice(cls, h, half_count):
        """Symmetric grid ``{-half_count*h, ..., half_count*h}`` containing 0."""
        half_count = check_int(half_count, "half_count", lower=1)
        return cls(-half_count * h, half_count * h, 2 * half_count + 1)

    @property
    def h(self):
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def nodes(self):
        i = np.arange(self.n_points)
        x = self.x_min + i * self.h
        x[-1] = self.x_max
        return x

    @property
    def weights(self):
        w = np.full(self.n_points, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    @property
    def is_symmetric(self):
        return abs(self.x_min + self.x_max) <= 1e-12 * max(1.0, self.x_max)

    def index_of(self, x, atol=1e-9):
        """Index of the node equal to ``x``; :class:`DomainError` if none."""
        pos = (x - self.x_min) / self.h
        i = int(round(pos))
        if not 0 <= i < self.n_points or abs(pos - i) > atol:
            raise DomainError(f"{x!r} is not a node of the grid")
        return i

    def has_node(self, x):
        try:
            self.index_of(x)
        except DomainError:
            return False
        return True


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    spec: object
    grid: Grid
    k: np.ndarray
    # k[i, j] * weights[j]
    matrix: np.ndarray
    # exp(-V1(x_j)) * weights[j], the column factor of the kernel
    col_factor: np.ndarray


def _kernel_values(spec, x, y):
    with np.errstate(over="ignore"):
        return np.exp(-spec.v1(y)[None, :] - spec.v2(y[None, :] - x[:, None]))


def build_kernel(spec, grid):
    """Assemble the weighted kernel matrix on ``grid``.

    Raises :class:`~polypin.exceptions.SpecError` for flagged specs and
    :class:`~polypin.exceptions.NumericalError` if an entry is not a positive
    finite number.
    """
    spec = require_certified(spec)
    x = grid.nodes
    with np.errstate(under="ignore"):
        k = _kernel_values(spec, x, x)
    bad = ~(np.isfinite(k) & (k > 0))
    if bad.any():
        i, j = (int(t) for t in np.argwhere(bad)[0])
        raise NumericalError(
            f"kernel entry ({i}, {j}) = {k[i, j]!r} is not positive and finite; "
            f"use a narrower grid")
    wts = grid.weights
    with np.errstate(over="ignore"):
        col = np.exp(-spec.v1(x)) * wts
    return KernelMatrix(spec=spec, grid=grid, k=k, matrix=k * wts[None, :], col_factor=col)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Principal eigen-data of a discretized transfer operator.

    ``v`` is normalized by ``sum(v**2 * weights) == 1`` and ``w`` by
    ``sum(v * w * weights) == 1``.
    """

    kernel: KernelMatrix
    lam: float
    v: np.ndarray
    w: np.ndarray
    pi_weights: np.ndarray
    residual_right: float
    residual_left: float
    n_iter: int = 0
    residual_history: tuple = field(default=(), repr=False)

    @property
    def grid(self):
        return self.kernel.grid

    @property
    def spec(self):
        return self.kernel.spec

    @property
    def k(self):
        return self.kernel.k

    @property
    def zero_index(self):
        return self.grid.index_of(0.0)


def _power_iteration(A, tol, max_iter, polish=1e-13, max_polish=500):
    n = A.shape[0]
    v = np.full(n, 1.0 / math.sqrt(n))
    Av = A @ v
    history = []
    polish_steps = 0
    lam = res = math.nan
    for it in range(1, max_iter + 1):
        lam = float(v @ Av) / float(v @ v)
        res = float(np.linalg.norm(Av - lam * v) / np.linalg.norm(v))
        history.append(res)
        v_new = Av / np.linalg.norm(Av)
        if res <= tol:
            change = float(np.max(np.abs(v_new - v) / v_new))
            polish_steps += 1
            if change <= polish or polish_steps >= max_polish:
                return lam, v_new, it, history
        v = v_new
        Av = A @ v
        if not np.all(np.isfinite(Av)):
            raise NumericalError("power iteration produced non-finite values")
    raise ConvergenceError(
        f"power iteration did not reach residual {tol:g} in {max_iter} steps "
        f"(last residual {res:.3g})", residual=res, n_iter=max_iter)


def principal_eigen(kernel, tol=1e-10, max_iter=10000):
    """Perron eigenvalue and positive eigenvectors by power iteration.

    Iteration on ``K`` gives ``v`` and on ``K.T`` gives ``w * weights``.  After
    the eigen-residual falls below ``tol`` a few polishing steps are taken so
    that every node of ``v`` is converged in the relative sense, which keeps the
    transition rows normalized even where ``v`` is tiny.
    """
    tol = check_positive(tol, "tol")
    max_iter = check_int(max_iter, "max_iter", lower=1)
    A = kernel.matrix
    wts = kernel.grid.weights
    lam, v, n_iter, history = _power_iteration(A, tol, max_iter)
    _, u, n_left, _ = _power_iteration(A.T, tol, max_iter)
    if np.any(v <= 0) or np.any(u <= 0):
        raise NumericalError("Perron vectors are not strictly positive")
    v = v / math.sqrt(float(np.sum(v * v * wts)))
    w = u / wts
    w = w / float(np.sum(v * w * wts))
    res_r = float(np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v))
    res_l = float(np.linalg.norm((w * wts) @ kernel.k - lam * w) / np.linalg.norm(w))
    pi = v * w * wts
    pi = pi / pi.sum()
    return SpectralData(kernel=kernel, lam=float(lam), v=v, w=w, pi_weights=pi,
                        residual_right=res_r, residual_left=res_l,
                        n_iter=max(n_iter, n_left), residual_history=tuple(history))


def spectral_data(spec, grid, tol=1e-10, max_iter=10000):
    """Shortcut for ``principal_eigen(build_kernel(spec, grid), ...)``."""
    return principal_eigen(build_kernel(spec, grid), tol=tol, max_iter=max_iter)


def transition_density(sd, i, j):
    """``p(x_i, x_j)`` for node indices ``i`` and ``j``."""
    return float(sd.k[i, j] * sd.v[j] / (sd.lam * sd.v[i]))


def transition_matrix(sd):
    """Matrix of density values ``p(x_i, x_j)`` (not multiplied by weights)."""
    return sd.k * sd.v[None, :] / (sd.lam * sd.v[:, None])


def transition_probabilities(sd):
    """Row-stochastic matrix ``p(x_i, x_j) * weight_j``."""
    return transition_matrix(sd) * sd.grid.weights[None, :]


def row_integrals(sd):
    return transition_probabilities(sd).sum(axis=1)


def invariant_measure(sd):
    """Discrete invariant law on the nodes and its invariance residual.

    Returns ``(pi_weights, residual)`` where ``residual = ||pi P - pi||_1``.
    Only the product ``v * w`` enters, so the result does not depend on how
    the eigenvectors are scaled.
    """
    pi = sd.v * sd.w * sd.grid.weights
    pi = pi / pi.sum()
    P = transition_probabilities(sd)
    return pi, float(np.abs(pi @ P - pi).sum())


def interval_mass(pi_weights, grid, a, b):
    """``pi([a, b])`` as the sum of node masses inside the closed interval."""
    x = grid.nodes
    eps = 1e-9 * grid.h
    return float(pi_weights[(x >= a - eps) & (x <= b + eps)].sum())


def symmetry_deviation(sd, intervals=None):
    """Largest ``|pi([a, b]) - pi([-b, -a])|`` over test intervals."""
    grid = sd.grid
    if intervals is None:
        edges = np.linspace(0.0, grid.x_max, 9)
        intervals = [(a, b) for a in edges for b in edges if b > a]
        intervals += [(-1.0, 0.5), (-3.0, 2.0), (-0.25, 4.0)]
    pi = sd.pi_weights
    return max(abs(interval_mass(pi, grid, a, b) - interval_mass(pi, grid, -b, -a))
               for a, b in intervals)


def check_left_right_relation(sd, spec=None):
    """Deviation of ``w(x)`` from ``C exp(-V1(x)) v(-x)``.

    ``C`` is fitted by least squares; the return value is the largest relative
    deviation ``|w - C v_tilde| / w`` over the nodes.  The grid must be
    symmetric about 0 so that ``-x`` is a node whenever ``x`` is.
    """
    spec = spec or sd.spec
    grid = sd.grid
    if not grid.is_symmetric:
        raise DomainError("left/right relation needs a grid symmetric about 0")
    x = grid.nodes
    v_tilde = np.exp(-spec.v1(x)) * sd.v[::-1]
    C = float(v_tilde @ sd.w) / float(v_tilde @ v_tilde)
    return float(np.max(np.abs(sd.w - C * v_tilde) / sd.w))


def nystrom_row(sd, x):
    """Unnormalized transition weights from arbitrary real states ``x``.

    Returns ``g`` with ``g[..., j] = k(x, y_j) v(y_j)``.  The Nystrom extension
    of the right eigenvector is ``v(x) = sum_j g[..., j] weight_j / lam``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = sd.grid.nodes
    with np.errstate(over="ignore", under="ignore"):
        g = np.exp(-sd.spec.v1(y)[None, :] - sd.spec.v2(y[None, :] - x[:, None]))
    return g * sd.v[None, :]


def nystrom_v(sd, x):
    """Right eigenfunction evaluated off the grid by the Nystrom formula."""
    g = nystrom_row(sd, x)
    return g @ sd.grid.weights / sd.lam


def scaled(sd, v_scale=1.0, w_scale=1.0):
    """Copy of ``sd`` with rescaled eigenvectors (for invariance checks)."""
    return replace(sd, v=sd.v * v_scale, w=sd.w * w_scale)


def stationary_std(sd):
    x = sd.grid.nodes
    mean = float(sd.pi_weights @ x)
    return math.sqrt(float(sd.pi_weights @ (x - mean) ** 2))
