"""Renewal lower bound on the free energy.

Restricting the contact-set expansion to sets made of consecutive couples of
zeros factorizes the partition function into inter-arrival weights
``Ktilde(n) = lam**n phi[n]``.  Tilting by ``exp(-mu n)`` turns

    K_eps(n) = eps**2 phi[n] exp(-mu n),   n >= 2,

into a probability law, and the renewal theorem then gives ``F(eps) >= mu``.
Since ``mu > 0`` for every ``eps > 0``, the critical reward is 0.

Truncation of the series at ``n_trunc`` is made rigorous (relative to the
table) with the tail bound ``phi[n] <= C2`` for ``n > n_trunc``, which turns
``mu`` into a certified bracket ``[mu_lo, mu_hi]``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq

from ._validation import check_int, check_positive
from .exceptions import ConsistencyError, RangeError

NORMALIZATION_TOL = 1e-6


def ktilde(spec, sd, table, n):
    """Inter-arrival weight of a gap of ``n`` sites between two couples of zeros."""
    n = check_int(n, "n", lower=1)
    if n == 1:
        return 0.0
    if n == 2:
        return math.exp(-2.0 * float(spec.v1(0.0)) - 2.0 * float(spec.v2(0.0)))
    return sd.lam ** n * table.at(n)


def tail_constant(table, n_lo=11):
    """``max phi[n]`` over ``n_lo <= n <= n_max``, the uniform bound used for tails."""
    vals = table.phi[n_lo:]
    if vals.size == 0 or not np.all(np.isfinite(vals)):
        raise RangeError(f"table must hold finite values beyond n = {n_lo}")
    return float(np.max(vals))


def _geometric_tail(c2, mu, start):
    """``sum_{n >= start} c2 exp(-mu n)``."""
    if mu <= 0:
        return math.inf
    return c2 * math.exp(-mu * start) / -math.expm1(-mu)


def _weighted_geometric_tail(c2, mu, start):
    """``sum_{n >= start} n c2 exp(-mu n)``."""
    if mu <= 0:
        return math.inf
    q = math.exp(-mu)
    return c2 * q ** start * (start - (start - 1) * q) / (1.0 - q) ** 2


@dataclass(frozen=True)
class MuBracket:
    """Certified interval ``[mu_lo, mu_hi]`` containing ``mu_eps``."""

    eps: float
    mu_lo: float
    mu_hi: float
    n_trunc: int
    c2_hat: float

    @property
    def mu(self):
        return 0.5 * (self.mu_lo + self.mu_hi)

    @property
    def width(self):
        return self.mu_hi - self.mu_lo


class _Series:
    """Evaluates ``sum_{n=2}^{n_trunc} phi[n] exp(-mu n)`` quickly for many ``mu``."""

    def __init__(self, table, n_trunc):
        self.n = np.arange(2, n_trunc + 1, dtype=float)
        self.phi = table.phi[2:n_trunc + 1]

    def __call__(self, mu):
        return float(self.phi @ np.exp(-mu * self.n))


def _bisect_root(f, target, lo, hi, xtol):
    """Root of the decreasing ``f(mu) = target`` with both endpoints certified.

    Returns ``(a, b)`` with ``f(a) >= target >= f(b)`` and ``b - a`` small.
    """
    root = brentq(lambda m: f(m) - target, lo, hi, xtol=xtol, rtol=1e-15, maxiter=500)
    a, b = root, root
    step = max(xtol, 1e-15 * root)
    while f(a) < target:
        a = max(lo, a - step)
        step *= 2.0
    step = max(xtol, 1e-15 * root)
    while f(b) > target:
        b = min(hi, b + step)
        step *= 2.0
    return a, b


def _upper_start(f, target):
    mu = 1.0
    while f(mu) > target:
        mu *= 2.0
    return mu


def solve_mu(table, eps, n_trunc=200, xtol=1e-10, auto_double=True, rel_width=0.1,
             c2_hat=None):
    """Bracket ``mu_eps`` solving ``sum_{n>=2} phi[n] exp(-mu n) = 1 / eps**2``.

    The truncated series ``S(mu)`` and the tail bound ``T(mu) <= C2 exp(-mu
    (n_trunc + 1)) / (1 - exp(-mu))`` sandwich the full series, so the roots of
    ``S = target`` and ``S + T = target`` bracket ``mu_eps``.  With
    ``auto_double`` the truncation doubles (within the table) until the
    bracket width is below ``rel_width * mu_lo``.

    Raises
    ------
    RangeError
        If even the largest usable truncation leaves ``S(0) < 1 / eps**2``,
        i.e. ``mu_lo`` cannot be separated from 0.  A longer table is needed.
    """
    eps = check_positive(eps, "eps")
    n_trunc = check_int(n_trunc, "n_trunc", lower=3)
    if n_trunc > table.n_max:
        raise RangeError(f"n_trunc = {n_trunc} exceeds the table (n_max = {table.n_max})")
    c2 = tail_constant(table) if c2_hat is None else check_positive(c2_hat, "c2_hat")
    target = 1.0 / eps ** 2
    while True:
        S = _Series(table, n_trunc)
        resolvable = S(0.0) > target
        if resolvable:
            hi = _upper_start(S, target)
            mu_lo, _ = _bisect_root(S, target, 0.0, hi, xtol)
            upper = lambda m: S(m) + _geometric_tail(c2, m, n_trunc + 1)  # noqa: E731
            _, mu_hi = _bisect_root(upper, target, mu_lo, _upper_start(upper, target), xtol)
            done = mu_hi - mu_lo <= rel_width * mu_lo
        if (resolvable and (done or not auto_double)) or n_trunc >= table.n_max:
            break
        if not auto_double:
            break
        n_trunc = min(2 * n_trunc, table.n_max)
    if not resolvable:
        raise RangeError(
            f"1/eps^2 = {target:.6g} exceeds the truncated series at mu = 0 "
            f"(n_trunc = {n_trunc}); use a longer density table or a larger n_trunc")
    return MuBracket(eps=eps, mu_lo=mu_lo, mu_hi=mu_hi, n_trunc=n_trunc, c2_hat=c2)


@dataclass(frozen=True, eq=False)
class RenewalData:
    """Inter-arrival law ``K_eps`` and derived renewal quantities.

    ``k_eps[n]`` holds ``K_eps(n)`` for ``n = 0..n_trunc`` (entries 0 and 1
    vanish); ``tail`` bounds the discarded mass and ``mean_tail`` the
    discarded contribution to the mean.
    """

    epsilon: float
    mu: float
    k_eps: np.ndarray
    tail: float
    mean: float
    mean_tail: float
    n_trunc: int
    mu_lo: float = math.nan
    mu_hi: float = math.nan
    mass_fn: np.ndarray = None
    renewal_residual: float = math.nan

    @property
    def total(self):
        return float(self.k_eps.sum())


def interarrival_law(table, eps, mu, n_trunc, c2_hat=None, bracket=None):
    """``K_eps(n) = eps**2 phi[n] exp(-mu n)`` for ``2 <= n <= n_trunc``.

    Raises :class:`ConsistencyError` if ``[sum K, sum K + tail]`` misses 1 by
    more than ``1e-6``, which signals a ``mu`` that does not belong to ``table``.
    """
    eps = check_positive(eps, "eps")
    n_trunc = check_int(n_trunc, "n_trunc", lower=2)
    if n_trunc > table.n_max:
        raise RangeError(f"n_trunc = {n_trunc} exceeds the table (n_max = {table.n_max})")
    c2 = tail_constant(table) if c2_hat is None else c2_hat
    n = np.arange(n_trunc + 1, dtype=float)
    k = np.zeros(n_trunc + 1)
    k[2:] = eps ** 2 * table.phi[2:n_trunc + 1] * np.exp(-mu * n[2:])
    tail = eps ** 2 * _geometric_tail(c2, mu, n_trunc + 1)
    total = float(k.sum())
    if total > 1.0 + NORMALIZATION_TOL or total + tail < 1.0 - NORMALIZATION_TOL:
        raise ConsistencyError(
            f"K_eps is not normalized: sum = {total:.12g}, tail bound = {tail:.3g}; "
            f"mu was not solved on this table")
    mean = float(n @ k)
    mean_tail = eps ** 2 * _weighted_geometric_tail(c2, mu, n_trunc + 1)
    lo, hi = (bracket.mu_lo, bracket.mu_hi) if bracket is not None else (math.nan, math.nan)
    return RenewalData(epsilon=eps, mu=float(mu), k_eps=k, tail=tail, mean=mean,
                       mean_tail=mean_tail, n_trunc=n_trunc, mu_lo=lo, mu_hi=hi)


def renewal_sequence(k, N_max):
    """Mass function ``u(n) = sum_{j=1}^n k[j] u(n - j)``, ``u(0) = 1``."""
    N_max = check_int(N_max, "N_max", lower=0)
    kk = np.zeros(N_max + 1)
    m = min(len(k), N_max + 1)
    kk[:m] = k[:m]
    u = np.zeros(N_max + 1)
    u[0] = 1.0
    rev = kk[1:][::-1]
    for n in range(1, N_max + 1):
        u[n] = rev[N_max - n:] @ u[:n]
    return u


def renewal_mass(rd, N_max):
    """Attach the renewal mass function up to ``N_max`` and the renewal-theorem residual."""
    u = renewal_sequence(rd.k_eps, N_max)
    resid = abs(u[-1] - 1.0 / rd.mean)
    return RenewalData(**{**rd.__dict__, "mass_fn": u, "renewal_residual": float(resid)})


def renewal_data(table, eps, N_max=None, n_trunc=200):
    """Solve ``mu``, build ``K_eps`` and (optionally) the mass function in one call."""
    br = solve_mu(table, eps, n_trunc=n_trunc)
    rd = interarrival_law(table, eps, br.mu, br.n_trunc, c2_hat=br.c2_hat, bracket=br)
    return renewal_mass(rd, N_max) if N_max is not None else rd


def log_lower_bound(sd, rd, N):
    """``log[lam**(N+1) exp((N+1) mu) eps**-2 u(N+1)]``, a lower bound on ``log Z_{eps,N}``."""
    N = check_int(N, "N", lower=1)
    if rd.mass_fn is None or len(rd.mass_fn) < N + 2:
        rd = renewal_mass(rd, N + 1)
    u = rd.mass_fn[N + 1]
    if u <= 0:
        return -math.inf
    return ((N + 1) * (math.log(sd.lam) + rd.mu) - 2.0 * math.log(rd.epsilon)
            + math.log(u))


@dataclass(frozen=True)
class LowerBoundCertificate:
    eps: float
    mu_lo: float
    mu_hi: float
    n_trunc: int
    F_hat: float = math.nan
    tolerance: float = 1e-3

    @property
    def positive(self):
        return self.mu_lo > 0

    @property
    def consistent(self):
        return math.isnan(self.F_hat) or self.F_hat >= self.mu_lo - self.tolerance


def free_energy_lower_bound(spec, sd, table, eps, F_hat=None, tol=1e-3, n_trunc=200):
    """Certified ``mu_eps`` bracket with ``F(eps) >= mu_eps > 0``.

    When a finite-volume estimate ``F_hat`` is supplied it is checked against
    ``mu_lo - tol``; a violation means the transfer and bridge discretizations
    disagree and raises :class:`ConsistencyError`.
    """
    br = solve_mu(table, eps, n_trunc=n_trunc)
    cert = LowerBoundCertificate(eps=br.eps, mu_lo=br.mu_lo, mu_hi=br.mu_hi,
                                 n_trunc=br.n_trunc,
                                 F_hat=math.nan if F_hat is None else float(F_hat),
                                 tolerance=tol)
    if not cert.consistent:
        raise ConsistencyError(
            f"free-energy estimate {F_hat:.6g} is below mu_lo = {br.mu_lo:.6g} by more "
            f"than {tol:g}; refine the spectral grid or increase N")
    return br.mu, cert
