"""Partition functions of the pinned chain, free energy and contact fraction.

Three independent evaluations of ``Z_{eps,N}`` are provided:

* ``bruteforce``: the expansion over contact sets ``A ⊆ {1..N-1}``, each term
  integrated either in closed form (Gaussian determinant, quadratic specs) or
  by nested quadrature over the free heights;
* ``transfer``: a deterministic transfer recursion over the pair state
  ``(gradient, height)`` on the lattice of the spectral grid, with the site
  measure ``eps * delta_0 + Lebesgue`` represented exactly;
* ``bridge``: ``Z_{0,N} = lam**(N+1) phi[N+1]`` from a bridge density table.

All functions return natural logarithms.
"""

from dataclasses import dataclass, field
import itertools
import math
import warnings

import numpy as np
from scipy.special import logsumexp

from ._validation import check_int, check_positive, check_scalar

from .exceptions import AccuracyError, ConfigError, RangeError, SizeError
from .potentials import require_certified
from .spectral import Grid, stationary_std


@dataclass(frozen=True)
class PartitionTable:
    spec: object
    epsilon: float
    entries: tuple
    method: str

    def rows(self):
        return list(self.entries)


# --------------------------------------------------------------------------
# bridge representation

def z_free_bridge(sd, table, N):
    """``log Z_{0,N} = (N+1) log(lam) + log(phi[N+1])``."""
    N = check_int(N, "N", lower=1)
    if N + 1 > table.n_max:
        raise RangeError(f"phi_{N + 1} is beyond the table (n_max = {table.n_max})")
    return (N + 1) * math.log(sd.lam) + math.log(table.at(N + 1))


# --------------------------------------------------------------------------
# contact-set expansion

@dataclass(frozen=True)
class HeightQuadrature:
    """Trapezoid rule for a free height on ``[-L, L]``."""

    L: float = 8.0
    n_points: int = 161

    @property
    def grid(self):
        return Grid.symmetric(self.L, self.n_points)


def _difference_operators(N):
    """Gradient and Laplacian of the interior heights ``phi_1..phi_{N-1}``.

    Boundary heights ``phi_{-1} = phi_0 = phi_N = phi_{N+1} = 0`` drop out.
    """
    full = np.zeros((N + 3, N - 1))
    full[2:N + 1] = np.eye(N - 1)
    grad = np.diff(full, axis=0)[1:]
    lap = np.diff(full, n=2, axis=0)
    return grad, lap


def gaussian_log_integral(spec, N, pinned):
    """``log int exp(-H) prod_{free} dphi`` for quadratic potentials, in closed form."""
    alpha, beta = spec.v1.coef, spec.v2.coef
    grad, lap = _difference_operators(N)
    Q = alpha * grad.T @ grad + beta * lap.T @ lap
    free = [i for i in range(N - 1) if (i + 1) not in pinned]
    if not free:
        return 0.0
    sign, logdet = np.linalg.slogdet(Q[np.ix_(free, free)])
    if sign <= 0:
        raise AccuracyError("quadratic form is not positive definite")
    return 0.5 * len(free) * math.log(2.0 * math.pi) - 0.5 * logdet


def nested_log_integral(spec, N, pinned, quad=None):
    """``log int exp(-H) prod_{free} dphi`` by iterated one-dimensional quadrature.

    Heights are eliminated left to right; the state after site ``i`` is the
    pair ``(phi_{i-1}, phi_i)``.  Pinned and boundary heights are fixed at 0.
    """
    quad = quad or HeightQuadrature()
    qg = quad.grid
    q_nodes, q_wts = qg.nodes, qg.weights
    zero = np.zeros(1)

    def values(i):
        if i <= 0 or i >= N or i in pinned:
            return zero, np.ones(1)
        return q_nodes, q_wts

    cache = {}

    def factor(i):
        a, _ = values(i - 2)
        b, _ = values(i - 1)
        c, wc = values(i)
        key = (a.size, b.size, c.size)
        if key not in cache:
            lap = c[None, None, :] - 2.0 * b[None, :, None] + a[:, None, None]
            grad = c[None, :] - b[:, None]
            with np.errstate(over="ignore"):
                cache[key] = (np.exp(-spec.v2(lap)), np.exp(-spec.v1(grad)))
        t2, t1 = cache[key]
        return t2, t1 * wc[None, :]

    state = np.ones((1, 1))
    log_scale = 0.0
    for i in range(1, N + 2):
        t2, t1 = factor(i)
        state = np.einsum("ab,abc->bc", state, t2) * t1
        s = float(state.max())
        if not s > 0:
            return -math.inf
        state /= s
        log_scale += math.log(s)
    return log_scale + math.log(float(state[0, 0]))


def _log_subset_term(spec, N, pinned, method, quad):
    if method == "gaussian":
        return gaussian_log_integral(spec, N, pinned)
    return nested_log_integral(spec, N, pinned, quad)


def _resolve_method(spec, method):
    if method == "auto":
        return "gaussian" if spec.is_quadratic else "nested"
    if method not in ("gaussian", "nested"):
        raise ConfigError(f"unknown brute-force method {method!r}")
    if method == "gaussian" and not spec.is_quadratic:
        raise ConfigError("the Gaussian formula needs quadratic potentials")
    return method


def z_pinned_bruteforce(spec, eps, N, quad=None, method="auto", max_N=12):
    """``log Z_{eps,N}`` summed over all ``2**(N-1)`` contact sets."""
    N = check_int(N, "N", lower=1)
    if N > max_N:
        raise SizeError(f"brute force is limited to N <= {max_N}, got {N}")
    eps = check_scalar(eps, "eps", lower=0.0)
    spec = require_certified(spec)
    method = _resolve_method(spec, method)
    sites = range(1, N)
    terms = []
    for k in range(N):
        if k > 0 and eps == 0.0:
            break
        for A in itertools.combinations(sites, k):
            terms.append(k * math.log(eps) if k else 0.0)
            terms[-1] += _log_subset_term(spec, N, set(A), method, quad)
    return float(logsumexp(terms))


def couple_sets(N):
    """Contact sets made of disjoint couples ``{t-1, t}`` with gaps of at least 2."""
    out = []

    def extend(prev, chosen):
        out.append(tuple(chosen))
        for t in range(prev + 2, N):
            extend(t, chosen + [t - 1, t])

    extend(0, [])
    return out


def z_restricted_bruteforce(spec, eps, N, quad=None, method="auto"):
    """Contact-set sum restricted to couple-structured sets (a lower bound on ``Z``)."""
    N = check_int(N, "N", lower=1)
    eps = check_positive(eps, "eps")
    spec = require_certified(spec)
    method = _resolve_method(spec, method)
    terms = [len(A) * math.log(eps) + _log_subset_term(spec, N, set(A), method, quad)
             for A in couple_sets(N)]
    return float(logsumexp(terms))


# --------------------------------------------------------------------------
# transfer recursion

def default_height_grid(sd, N_max, c=6.0):
    h = sd.grid.h
    half = c * math.sqrt(N_max) * stationary_std(sd) + sd.grid.x_max
    return Grid.lattice(h, int(math.ceil(half / h)))


def _check_height_grid(sd, grid):
    if not grid.has_node(0.0):
        raise ConfigError("height grid must contain 0 exactly so the atom is representable")
    if abs(grid.h - sd.grid.h) > 1e-9 * sd.grid.h:
        raise ConfigError("height grid must use the spacing of the spectral grid")
    if not sd.grid.has_node(0.0):
        raise ConfigError("spectral grid must contain 0")


def log_partition_sequence(sd, eps, N_max, height_grid=None):
    """``log Z_{eps,N}`` for every ``N = 1..N_max`` from a single transfer sweep.

    The mass ``m_i(y, phi)`` carries the weight of all partial paths ending with
    gradient ``y`` and height ``phi`` at site ``i``.  One step is

        A[y', phi] = sum_y k(y, y') m_{i-1}(y, phi)
        m_i(y', phi') = A[y', phi' - y'] * (weight(y') + eps [phi' == 0])

    and closing the chain at ``N = i`` imposes ``phi_N = phi_{N+1} = 0``.
    Returns an array indexed by ``N`` (entry 0 is NaN).
    """
    N_max = check_int(N_max, "N_max", lower=1)
    eps = check_scalar(eps, "eps", lower=0.0)
    height_grid = height_grid or default_height_grid(sd, N_max)
    _check_height_grid(sd, height_grid)
    grid = sd.grid
    c0 = grid.index_of(0.0)
    pz = height_grid.index_of(0.0)
    n, nh = grid.n_points, height_grid.n_points
    offsets = np.arange(n) - c0
    kT = np.ascontiguousarray(sd.k.T)
    k_to_zero = sd.k[:, c0]
    site = np.repeat(grid.weights[:, None], nh, axis=1)
    site[:, pz] += eps

    # closing pairs (y', phi = -y') that lie inside the height grid
    close_rows = np.nonzero((pz - offsets >= 0) & (pz - offsets < nh))[0]
    close_cols = pz - offsets[close_rows]

    m = np.zeros((n, nh))
    m[c0, pz] = 1.0
    log_scale = 0.0
    out = np.full(N_max + 1, np.nan)
    shifted = np.empty_like(m)
    for i in range(1, N_max + 1):
        A = kT @ m
        z = float(A[close_rows, close_cols] @ k_to_zero[close_rows])
        out[i] = log_scale + (math.log(z) if z > 0 else -math.inf)
        if i == N_max:
            break
        shifted.fill(0.0)
        for j, s in enumerate(offsets):
            if s >= 0:
                if s < nh:
                    shifted[j, s:] = A[j, :nh - s]
            elif -s < nh:
                shifted[j, :nh + s] = A[j, -s:]
        m = shifted * site
        shifted = A
        top = float(m.max())
        m /= top
        log_scale += math.log(top)
    return out


def z_pinned_transfer(spec, sd, eps, N, pair_grid=None):
    """``log Z_{eps,N}`` by the transfer recursion (see :func:`log_partition_sequence`)."""
    N = check_int(N, "N", lower=1)
    if spec is not None and sd.spec.to_dict() != spec.to_dict():
        raise ConfigError("spectral data was computed for a different potential spec")
    return float(log_partition_sequence(sd, eps, N, pair_grid)[N])


def partition_table(sd, eps, N_list, method="transfer", table=None, height_grid=None):
    N_list = [int(N) for N in N_list]
    if method == "transfer":
        seq = log_partition_sequence(sd, eps, max(N_list), height_grid)
        entries = tuple((N, float(seq[N])) for N in N_list)
    elif method == "bridge":
        if eps != 0:
            raise ConfigError("the bridge representation only covers eps = 0")
        entries = tuple((N, z_free_bridge(sd, table, N)) for N in N_list)
    elif method == "bruteforce":
        entries = tuple((N, z_pinned_bruteforce(sd.spec, eps, N)) for N in N_list)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return PartitionTable(spec=sd.spec, epsilon=float(eps), entries=entries, method=method)


# --------------------------------------------------------------------------
# free energy and contacts

@dataclass(frozen=True, eq=False)
class FreeEnergyEstimate:
    eps: float
    N: np.ndarray
    log_z_eps: np.ndarray
    log_z_0: np.ndarray
    f_N: np.ndarray
    estimate: float
    band: float
    log_lambda: float
    rate_gap: np.ndarray
    warnings: tuple = field(default_factory=tuple)

    def rows(self):
        for i, N in enumerate(self.N):
            yield (self.eps, int(N), float(self.log_z_eps[i]), float(self.log_z_0[i]),
                   float(self.f_N[i]))


def _erratic(f, tol):
    d = np.diff(f)
    d = d[np.abs(d) > tol]
    return int(np.sum(np.diff(np.sign(d)) != 0)) > 1


def free_energy(spec, sd, eps, N_list, height_grid=None, log_z_0=None, tol=1e-9):
    """Finite-volume free energies ``f_N = (log Z_{eps,N} - log Z_{0,N}) / N``.

    The estimate is the value at the largest ``N`` and the error band is the
    difference between the last two values.  ``log_z_0`` may pass a precomputed
    free sequence (indexed by ``N``) to avoid recomputing it.
    """
    eps = check_scalar(eps, "eps", lower=0.0)
    N = np.array(sorted(int(t) for t in N_list))
    if N.size < 2:
        raise ConfigError("free_energy needs at least two values of N")
    N_max = int(N[-1])
    if log_z_0 is None or len(log_z_0) <= N_max:
        log_z_0 = log_partition_sequence(sd, 0.0, N_max, height_grid)
    seq = log_z_0 if eps == 0 else log_partition_sequence(sd, eps, N_max, height_grid)
    lz_e = seq[N]
    lz_0 = np.asarray(log_z_0)[N]
    f = (lz_e - lz_0) / N
    notes = []
    if _erratic(f, tol):
        notes.append("f_N is not monotone in N beyond tolerance; results may be unstable")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    log_lam = math.log(sd.lam)
    return FreeEnergyEstimate(eps=eps, N=N, log_z_eps=lz_e, log_z_0=lz_0, f_N=f,
                              estimate=float(f[-1]), band=float(abs(f[-1] - f[-2])),
                              log_lambda=log_lam, rate_gap=lz_0 / N - log_lam,
                              warnings=tuple(notes))


def contact_fraction(spec, sd, eps, N, d_eps=None, height_grid=None):
    """Mean fraction of pinned sites, ``eps d/d(eps) log Z_{eps,N} / N``.

    The derivative is a central finite difference with step ``d_eps``
    (default ``eps / 20``).
    """
    eps = check_positive(eps, "eps")
    N = check_int(N, "N", lower=2)
    d_eps = eps / 20.0 if d_eps is None else check_positive(d_eps, "d_eps")
    if d_eps >= eps:
        raise ConfigError("d_eps must be smaller than eps")
    hi = log_partition_sequence(sd, eps + d_eps, N, height_grid)[N]
    lo = log_partition_sequence(sd, eps - d_eps, N, height_grid)[N]
    frac = eps * (hi - lo) / (2.0 * d_eps) / N
    if not -0.01 <= frac <= 1.01:
        raise AccuracyError(f"contact fraction {frac:.4g} is outside [0, 1]")
    return float(frac)
