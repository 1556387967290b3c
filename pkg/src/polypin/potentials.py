"""Interaction potentials and numerical certification of their standing assumptions.

A model is specified by a gradient potential ``V1`` and a Laplacian potential
``V2``.  Built-in families are normalized so that ``V(0) == 0``; tabulated
potentials need not be.

The certification is numeric: integrability is tested by quadrature on
``[-L, L]`` and on the doubled domain ``[-2L, 2L]``.  A spec that fails a check
is *flagged*, and downstream constructors refuse flagged specs.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy import integrate

from ._validation import check_finite_array, check_positive, check_scalar
from .exceptions import CertificationError, DomainError, SpecError

V1_FAMILIES = ("quadratic", "quartic", "log", "tabulated")
V2_FAMILIES = ("quadratic", "exponential", "tabulated")


@dataclass(frozen=True)
class Potential:
    """One-dimensional potential from a named family.

    ``quadratic``:   coef * x**2 / 2
    ``quartic``:     coef * x**4
    ``log``:         coef * log(1 + x**2)
    ``exponential``: coef * (exp(|x|) - 1)
    ``tabulated``:   linear interpolation through ``(table_x, table_v)``;
                     outside the table either a :class:`DomainError` or, when
                     ``extrapolate`` is set, the nearest endpoint value.
    """

    family: str
    coef: float = 1.0
    table_x: tuple = None
    table_v: tuple = None
    extrapolate: bool = False

    def __post_init__(self):
        if self.family == "tabulated":
            if self.table_x is None or self.table_v is None:
                raise DomainError("tabulated potential needs table_x and table_v")
            tx = check_finite_array(self.table_x, "table_x", ndim=1)
            tv = check_finite_array(self.table_v, "table_v", ndim=1)
            if tx.size < 2 or tx.size != tv.size:
                raise DomainError("table_x and table_v must have equal length >= 2")
            if np.any(np.diff(tx) <= 0):
                raise DomainError("table_x must be strictly increasing")
            object.__setattr__(self, "table_x", tuple(float(t) for t in tx))
            object.__setattr__(self, "table_v", tuple(float(t) for t in tv))
        elif self.family == "quadratic":
            check_scalar(self.coef, "coef", lower=0.0)
        elif self.family in ("quartic", "log", "exponential"):
            check_positive(self.coef, "coef")
        else:
            raise DomainError(f"unknown potential family {self.family!r}")
        object.__setattr__(self, "coef", float(self.coef))

    @property
    def support(self):
        """Interval where the potential is defined (``(-inf, inf)`` unless tabulated)."""
        if self.family == "tabulated" and not self.extrapolate:
            return self.table_x[0], self.table_x[-1]
        return -math.inf, math.inf

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        c = self.coef
        with np.errstate(over="ignore"):
            if self.family == "quadratic":
                return 0.5 * c * x * x
            if self.family == "quartic":
                return c * x ** 4
            if self.family == "log":
                return c * np.log1p(x * x)
            if self.family == "exponential":
                return c * np.expm1(np.abs(x))
        lo, hi = self.support
        if np.any((x < lo) | (x > hi)):
            raise DomainError(
                f"tabulated potential queried outside its table [{lo}, {hi}]")
        return np.interp(x, self.table_x, self.table_v)

    def to_dict(self, prefix):
        out = {f"{prefix}_family": self.family}
        if self.family == "tabulated":
            out[f"{prefix}_table_x"] = ",".join(repr(t) for t in self.table_x)
            out[f"{prefix}_table_v"] = ",".join(repr(t) for t in self.table_v)
            out[f"{prefix}_extrapolate"] = str(self.extrapolate).lower()
        else:
            out[f"{prefix}_coef"] = repr(self.coef)
        return out


@dataclass(frozen=True)
class PotentialSpec:
    """The pair ``(V1, V2)`` plus the neighbourhood radius ``gamma``.

    ``m_gamma`` (the supremum of ``V2`` on ``[-gamma, gamma]``) and ``status``
    are filled in by :func:`certify_assumptions`.
    """

    v1: Potential
    v2: Potential
    gamma: float = 1.0
    m_gamma: float = None
    status: str = None

    def __post_init__(self):
        if self.v1.family not in V1_FAMILIES:
            raise DomainError(f"{self.v1.family!r} is not a V1 family")
        if self.v2.family not in V2_FAMILIES:
            raise DomainError(f"{self.v2.family!r} is not a V2 family")
        object.__setattr__(self, "gamma", check_positive(self.gamma, "gamma"))
        if self.status not in (None, "certified", "flagged"):
            raise DomainError(f"invalid status {self.status!r}")

    @classmethod
    def quadratic(cls, alpha=1.0, beta=1.0, gamma=1.0):
        return cls(Potential("quadratic", check_positive(alpha, "alpha")),
                   Potential("quadratic", beta), gamma=gamma)

    @property
    def certified(self):
        return self.status == "certified"

    @property
    def is_quadratic(self):
        return self.v1.family == "quadratic" and self.v2.family == "quadratic"

    def V1(self, x):
        return self.v1(x)

    def V2(self, x):
        return self.v2(x)

    def to_dict(self):
        out = {}
        out.update(self.v1.to_dict("v1"))
        out.update(self.v2.to_dict("v2"))
        out["gamma"] = repr(self.gamma)
        return out


def eval_potential(spec, which, x):
    """Evaluate ``V1`` or ``V2`` of ``spec`` at a finite real ``x``."""
    x = check_scalar(x, "x")
    if which == "V1":
        return float(spec.v1(x))
    if which == "V2":
        return float(spec.v2(x))
    raise DomainError(f"which must be 'V1' or 'V2', got {which!r}")


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for the certification quadrature.

    Integrals are computed on ``[-L, L]`` and ``[-2L, 2L]``; a relative change
    above ``rel_tol`` fails the check.  ``n_test`` is the number of test points
    per half-line used for the symmetry and coercivity checks.
    """

    L: float = 50.0
    n_test: int = 4001
    rel_tol: float = 0.01

    def __post_init__(self):
        check_positive(self.L, "L")
        check_positive(self.rel_tol, "rel_tol")
        if int(self.n_test) < 3:
            raise DomainError("n_test must be >= 3")


@dataclass(frozen=True)
class AssumptionReport:
    spec: PotentialSpec
    L: float
    integrals: dict
    integrals_doubled: dict
    symmetry_residual: float
    coercivity_radius: float
    inf_v1: float
    inf_v2: float
    m_gamma: float
    sup_exp_neg_v2: float
    failures: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return not self.failures

    def relative_change(self, name):
        a, b = self.integrals[name], self.integrals_doubled[name]
        return abs(b - a) / abs(b) if b != 0 else math.inf

    def rows(self):
        """Flat ``(key, value)`` pairs for reporting."""
        out = [("L", self.L)]
        for name in self.integrals:
            out.append((f"int[{name}]", self.integrals[name]))
            out.append((f"int2L[{name}]", self.integrals_doubled[name]))
        out += [("symmetry_residual", self.symmetry_residual),
                ("coercivity_radius", self.coercivity_radius),
                ("inf_V1", self.inf_v1), ("inf_V2", self.inf_v2),
                ("M_gamma", self.m_gamma), ("sup_exp_neg_V2", self.sup_exp_neg_v2),
                ("passed", self.passed),
                ("failures", ";".join(self.failures) if self.failures else "")]
        return out


def _segments(L):
    edges = [0.0, 0.25, 0.5]
    while edges[-1] < L:
        edges.append(min(2.0 * edges[-1], L))
    return edges


def _integrate(f, L):
    total = 0.0
    edges = _segments(L)
    for a, b in zip(edges[:-1], edges[1:]):
        for sign in (1.0, -1.0):
            val, _ = integrate.quad(lambda t: f(sign * t), a, b, limit=200)
            total += val
    return total


def _coercivity_radius(v1, L, n_test):
    t = np.linspace(0.0, L, n_test)
    radius = 0.0
    for side in (t, -t):
        vals = v1(side)
        inc = np.diff(vals) >= -1e-12 * np.maximum(1.0, np.abs(vals[1:]))
        bad = np.nonzero(~inc)[0]
        start = bad[-1] + 1 if bad.size else 0
        if vals[-1] <= vals[start]:
            return math.nan
        radius = max(radius, float(t[start]))
    return radius


def certify_assumptions(spec, quad=None, strict=False):
    """Numerically check integrability, symmetry and growth of ``spec``.

    Returns an :class:`AssumptionReport` whose ``spec`` attribute is a copy of
    the input stamped with ``m_gamma`` and a ``status`` of ``"certified"`` or
    ``"flagged"``.  With ``strict=True`` a failing spec raises
    :class:`CertificationError` instead.
    """
    quad = quad or QuadratureConfig()
    L = float(quad.L)
    # keep the doubled domain inside any non-extrapolated table
    for pot in (spec.v1, spec.v2):
        lo, hi = pot.support
        L = min(L, min(-lo, hi) / 2.0)
    failures = []
    if not L > 0:
        raise CertificationError("tabulated domain does not contain a neighbourhood of 0",
                                 ["domain"])

    def e2v1(t):
        return math.exp(-2.0 * float(spec.v1(t)))

    def ev2(t):
        return math.exp(-float(spec.v2(t)))

    def xev2(t):
        return abs(t) * math.exp(-float(spec.v2(t)))

    funcs = {"exp(-2*V1)": e2v1, "exp(-V2)": ev2, "|x|*exp(-V2)": xev2}
    ints, ints2 = {}, {}
    with np.errstate(over="ignore"):
        for name, f in funcs.items():
            ints[name] = _integrate(f, L)
            ints2[name] = _integrate(f, 2.0 * L)
            a, b = ints[name], ints2[name]
            if not (math.isfinite(a) and math.isfinite(b)) or b <= 0:
                failures.append(f"integral {name} is not finite")
            elif abs(b - a) / b > quad.rel_tol:
                failures.append(
                    f"integral {name} not convergent: changes by {abs(b - a) / b:.3%} "
                    f"when the domain is doubled")

    t = np.linspace(0.0, 2.0 * L, quad.n_test)
    xs = np.concatenate([-t[::-1], t[1:]])
    with np.errstate(over="ignore"):
        v1 = spec.v1(xs)
        v2 = spec.v2(xs)
    scale = max(1.0, float(np.max(np.abs(v1[np.isfinite(v1)]))))
    sym = float(np.max(np.abs(spec.v1(t) - spec.v1(-t))))
    if not sym <= 1e-12 * scale:
        failures.append(f"V1 is not symmetric (residual {sym:.3g})")
    if not np.all(np.isfinite(v1)):
        failures.append("V1 is not finite on the test grid")
    inf_v1 = float(np.min(v1))
    inf_v2 = float(np.min(v2[np.isfinite(v2)]))
    radius = _coercivity_radius(spec.v1, 2.0 * L, quad.n_test)
    if spec.v1.family == "tabulated" and spec.v1.extrapolate:
        tv = np.asarray(spec.v1.table_v)
        if min(tv[0], tv[-1]) < np.max(tv):
            radius = math.nan
    if not math.isfinite(radius):
        failures.append("V1 is not coercive on the test domain")

    try:
        g = np.linspace(-spec.gamma, spec.gamma, 2001)
        m_gamma = float(np.max(spec.v2(g)))
    except DomainError:
        m_gamma = math.inf
    if not math.isfinite(m_gamma):
        failures.append("V2 is not bounded above near 0 (M_gamma infinite)")
    sup_ev2 = math.exp(-inf_v2)
    if not math.isfinite(sup_ev2):
        failures.append("exp(-V2) is unbounded")

    status = "flagged" if failures else "certified"
    stamped = replace(spec, m_gamma=m_gamma, status=status)
    report = AssumptionReport(
        spec=stamped, L=L, integrals=ints, integrals_doubled=ints2,
        symmetry_residual=sym, coercivity_radius=radius, inf_v1=inf_v1,
        inf_v2=inf_v2, m_gamma=m_gamma, sup_exp_neg_v2=sup_ev2,
        failures=tuple(failures))
    if strict and failures:
        raise CertificationError("; ".join(failures), failures)
    return report


def require_certified(spec, quad=None):
    """Return a certified copy of ``spec`` or raise :class:`SpecError`.

    Specs that were never certified are certified on the fly.
    """
    if spec.status is None:
        spec = certify_assumptions(spec, quad).spec
    if spec.status != "certified":
        raise SpecError("potential spec is flagged by certification; refusing to use it")
    return spec


def default_half_width(spec, threshold=1e-12, cap=1e4):
    """Smallest ``L`` (rounded up to an integer) with ``exp(-V1(+-L)) <= threshold``."""
    target = -math.log(threshold)
    L = 1.0
    while min(float(spec.v1(L)), float(spec.v1(-L))) < target:
        L *= 1.25
        if L > cap:
            raise DomainError("V1 grows too slowly to choose a truncation width")
    return float(math.ceil(L))
