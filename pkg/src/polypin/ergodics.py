"""Numerical ergodicity certificates for the chain ``Y``.

* a Foster-Lyapunov drift inequality with test function
  ``U(x) = |x| exp(V1(x)) / v(x)``;
* total-variation convergence of ``P**n(x0, .)`` to the invariant law;
* smoothing of bounded (even discontinuous) functions by one step of ``P``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from ._validation import check_int
from .exceptions import CertificationError
from .potentials import _integrate
from .spectral import transition_matrix, transition_probabilities


@dataclass(frozen=True)
class DriftCertificate:
    """``PU <= U - (1 + |x|) / v + b 1_{[-M, M]}`` holds at every grid node.

    ``margin`` is the smallest log-ratio slack ``log(|x| e^{V1}) - log(1 + |x| +
    v PU)`` over nodes with ``|x| > M``.
    """

    M: float
    b: float
    margin: float
    c0: float
    c1: float
    n_outside: int

    @property
    def valid(self):
        return self.margin >= 0 and math.isfinite(self.M) and math.isfinite(self.b)

    def rows(self):
        return [("M", self.M), ("b", self.b), ("margin", self.margin),
                ("c0", self.c0), ("c1", self.c1)]


def _convolution_width(v2, reach, tol=1e-16, cap=1e4):
    lo, hi = v2.support
    Z = 1.0
    while Z < cap:
        z = np.array([-Z, Z])
        if np.all(np.exp(-v2(z)) * (Z + reach) < tol):
            break
        Z *= 1.5
    return min(Z, -lo, hi)


def scaled_drift(sd, spec=None):
    """``v(x) (PU)(x) = lam**-1 int exp(-V2(z)) |x + z| dz`` at every grid node.

    The integral runs over the whole line (not the truncated grid) and is split
    at the kink ``z = -x`` so that adaptive quadrature stays accurate.
    """
    spec = spec or sd.spec
    x = sd.grid.nodes
    Z = _convolution_width(spec.v2, float(np.max(np.abs(x))))

    def g(z):
        return math.exp(-float(spec.v2(z)))

    out = np.empty(x.size)
    for i, xi in enumerate(x):
        total = 0.0
        for a, b in ((-Z, min(-xi, 0.0)), (min(-xi, 0.0), max(-xi, 0.0)), (max(-xi, 0.0), Z)):
            if b > a:
                total += integrate.quad(lambda z: g(z) * abs(xi + z), a, b, limit=200)[0]
        out[i] = total
    return out / sd.lam


def drift_check(sd, spec=None):
    """Search the smallest grid radius ``M`` beyond which the drift inequality holds.

    Multiplying by ``v > 0`` turns the inequality into
    ``|x| exp(V1(x)) >= 1 + |x| + v(x) (PU)(x)``, compared in log space so that
    steep ``V1`` does not overflow.

    Raises
    ------
    CertificationError
        If the inequality fails at the outermost node (the grid truncates the
        growth of ``V1``; widen the domain).
    """
    spec = spec or sd.spec
    x = sd.grid.nodes
    ax = np.abs(x)
    pu_v = scaled_drift(sd, spec)
    with np.errstate(divide="ignore"):
        lhs = np.log(ax) + spec.v1(x)
    rhs = np.log1p(ax + pu_v)
    slack = lhs - rhs
    order = np.argsort(-ax, kind="stable")
    bad = np.nonzero(slack[order] < 0)[0]
    if bad.size and bad[0] == 0:
        raise CertificationError(
            "drift inequality fails at the edge of the grid; widen the domain",
            ["drift"])
    # M is the largest |x| where the inequality fails (0 if it never does)
    M = float(ax[order][bad[0]]) if bad.size else 0.0
    outside = ax > M * (1 + 1e-12) + 1e-300
    if not outside.any():
        raise CertificationError("no grid node beyond the drift radius; widen the domain",
                                 ["drift"])
    margin = float(np.min(slack[outside]))
    inside = ~outside
    with np.errstate(over="ignore"):
        u_v = ax * np.exp(spec.v1(x))
    b = float(np.max((pu_v[inside] - u_v[inside]) / sd.v[inside]))
    c0 = _integrate(lambda t: abs(t) * math.exp(-float(spec.v2(t))), 50.0)
    c1 = _integrate(lambda t: math.exp(-float(spec.v2(t))), 50.0)
    return DriftCertificate(M=M, b=b, margin=margin, c0=c0, c1=c1,
                            n_outside=int(outside.sum()))


@dataclass(frozen=True, eq=False)
class LyapunovReport:
    log_mean_u: np.ndarray
    b: float

    @property
    def mean_u(self):
        return np.exp(self.log_mean_u)

    @property
    def passed(self):
        m = self.mean_u
        ok = m[1:] <= m[:-1] + self.b + 1e-9 * np.maximum(1.0, m[:-1])
        return bool(np.all(np.isfinite(m)) and np.all(ok))


def lyapunov_recursion(sd, cert, x0=0.0, n_max=100, spec=None):
    """Propagate ``E[U(Y_n)]`` from ``Y_0 = x0`` and check ``E U(Y_{n+1}) <= E U(Y_n) + b``."""
    spec = spec or sd.spec
    n_max = check_int(n_max, "n_max", lower=1)
    x = sd.grid.nodes
    with np.errstate(divide="ignore"):
        log_u = np.log(np.abs(x)) + spec.v1(x) - np.log(sd.v)
    P = transition_probabilities(sd)
    mu = np.zeros(x.size)
    mu[sd.grid.index_of(x0)] = 1.0
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        with np.errstate(divide="ignore"):
            out[n] = logsumexp(np.log(mu) + log_u)
        mu = mu @ P
    return LyapunovReport(log_mean_u=out, b=max(cert.b, 0.0))


def tv_convergence(sd, x0=0.0, n_max=200):
    """``TV(n) = 0.5 * || delta_{x0} P**n - pi ||_1`` for ``n = 0..n_max``."""
    n_max = check_int(n_max, "n_max", lower=0)
    P = transition_probabilities(sd)
    pi = sd.pi_weights
    mu = np.zeros(pi.size)
    mu[sd.grid.index_of(x0)] = 1.0
    tv = np.empty(n_max + 1)
    for n in range(n_max + 1):
        tv[n] = 0.5 * float(np.abs(mu - pi).sum())
        mu = mu @ P
    return tv


def first_below(tv, threshold=1e-3):
    """First ``n`` with ``tv[n] <= threshold`` (``None`` if never)."""
    hits = np.nonzero(np.asarray(tv) <= threshold)[0]
    return int(hits[0]) if hits.size else None


def is_nonincreasing(seq, atol=1e-12):
    seq = np.asarray(seq)
    return bool(np.all(np.diff(seq) <= atol))


@dataclass(frozen=True)
class SmoothingReport:
    sup_f: float
    sup_pf: float
    modulus_f: float
    modulus_pf: float
    bound: float

    @property
    def passed(self):
        return self.modulus_pf <= self.bound * (1 + 1e-12) + 1e-15


def feller_smoothing_check(sd, f):
    """Compare the discrete modulus of continuity of ``f`` and of ``Pf``.

    ``f`` is a callable or an array of values on the grid.  The bound is the
    largest change of a transition density between neighbouring start nodes,
    times ``sup |f|``, times the span of the grid.
    """
    x = sd.grid.nodes
    fv = np.asarray(f(x) if callable(f) else f, dtype=float)
    if fv.shape != x.shape:
        raise ValueError("f must have one value per grid node")
    pf = transition_probabilities(sd) @ fv
    dens = transition_matrix(sd)
    span = sd.grid.x_max - sd.grid.x_min
    sup_f = float(np.max(np.abs(fv)))
    bound = float(np.max(np.abs(np.diff(dens, axis=0)))) * sup_f * span
    return SmoothingReport(sup_f=sup_f, sup_pf=float(np.max(np.abs(pf))),
                           modulus_f=float(np.max(np.abs(np.diff(fv)))),
                           modulus_pf=float(np.max(np.abs(np.diff(pf)))), bound=bound)
