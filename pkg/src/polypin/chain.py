"""The Markov chain ``Y`` with kernel ``p``, its integral ``W``, and bridge densities.

``phi[n]`` is the density of ``(W_{n-1}, W_n)`` at ``(0, 0)`` for the chain
started from ``Y_0 = W_0 = 0``.  Two deterministic routes compute it on the
lattice spanned by the spectral grid:

* :func:`pair_density_table` propagates the joint density of ``(Y_k, W_k)``
  step by step on a product grid (cost grows like ``n**1.5``);
* :func:`fourier_density_table` inverts the characteristic function of
  ``W`` in closed form through the eigen-decomposition of the twisted kernel,
  which reaches ``n ~ 10**6`` cheaply.

On their common range the two agree to round-off.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg

from ._validation import check_int, check_random_state
from .exceptions import AccuracyError, DataError, DomainError, RangeError
from .spectral import Grid, nystrom_row, nystrom_v, stationary_std


# --------------------------------------------------------------------------
# sampling

@dataclass(frozen=True, eq=False)
class Trajectory:
    seed: object
    a: float
    b: float
    y: np.ndarray
    w: np.ndarray

    def rows(self):
        yield 0, self.a, self.b
        for k in range(1, len(self.w)):
            yield k, float(self.y[k - 1]), float(self.w[k])


def _draw(sd, x, u):
    """Inverse-CDF draws from the rows ``p(x, .)`` for states ``x``.

    Within a grid cell the density is the linear interpolant of its node
    values, so the quadratic CDF is inverted exactly.
    """
    h = sd.grid.h
    nodes = sd.grid.nodes
    g = nystrom_row(sd, x)
    cum = np.cumsum(0.5 * h * (g[:, :-1] + g[:, 1:]), axis=1)
    target = u * cum[:, -1]
    j = np.minimum((cum < target[:, None]).sum(axis=1), cum.shape[1] - 1)
    rows = np.arange(len(x))
    prev = np.where(j > 0, cum[rows, j - 1], 0.0)
    r = np.maximum(target - prev, 0.0)
    a = g[rows, j]
    slope = (g[rows, j + 1] - a) / h
    disc = np.sqrt(np.maximum(a * a + 2.0 * slope * r, 0.0))
    denom = a + disc
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(denom > 0, 2.0 * r / denom, 0.0)
    return nodes[j] + np.clip(t, 0.0, h)


def sample_step(sd, x, rng):
    """One draw of ``Y_{n+1}`` given ``Y_n = x``."""
    rng = check_random_state(rng)
    return float(_draw(sd, np.array([float(x)]), rng.random(1))[0])


def step_cdf(sd, x):
    """Cumulative distribution of ``p(x, .)`` at the grid nodes."""
    h = sd.grid.h
    g = nystrom_row(sd, [x])[0]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (g[:-1] + g[1:]))])
    return cum / cum[-1]


def sample_trajectory(sd, a=0.0, b=0.0, n=1, seed=None):
    """Sample ``Y_1..Y_n`` from ``Y_0 = a`` and ``W_k = b + Y_1 + ... + Y_k``."""
    n = check_int(n, "n", lower=1)
    rng = check_random_state(seed)
    y = np.empty(n)
    x = np.array([float(a)])
    for k in range(n):
        x = _draw(sd, x, rng.random(1))
        y[k] = x[0]
    w = np.empty(n + 1)
    w[0] = float(b)
    acc = float(b)
    for k in range(n):
        acc = acc + y[k]
        w[k + 1] = acc
    return Trajectory(seed=seed, a=float(a), b=float(b), y=y, w=w)


def sample_paths(sd, n_paths, n_steps, a=0.0, seed=None, chunk=8192, callback=None):
    """Sample many independent paths; returns ``Y`` with shape ``(n_paths, n_steps)``.

    When ``callback`` is given it is called as ``callback(k, y_k)`` after each
    step for each chunk and nothing is stored, so arbitrarily many paths fit in
    memory.
    """
    n_paths = check_int(n_paths, "n_paths", lower=1)
    n_steps = check_int(n_steps, "n_steps", lower=1)
    rng = check_random_state(seed)
    out = None if callback else np.empty((n_paths, n_steps))
    for start in range(0, n_paths, chunk):
        m = min(chunk, n_paths - start)
        x = np.full(m, float(a))
        for k in range(n_steps):
            x = _draw(sd, x, rng.random(m))
            if callback:
                callback(k + 1, x)
            else:
                out[start:start + m, k] = x
    return out


# --------------------------------------------------------------------------
# finite dimensional laws

def hamiltonian(spec, path):
    """``H_[-1, n]`` for ``path = (w_{-1}, w_0, ..., w_n)`` along the last axis."""
    path = np.asarray(path, dtype=float)
    grad = np.diff(path, axis=-1)
    lap = np.diff(grad, axis=-1)
    return spec.v1(grad[..., 1:]).sum(axis=-1) + spec.v2(lap).sum(axis=-1)


def finite_dim_density(sd, w_points):
    """Density of ``(W_1, ..., W_n)`` under ``Y_0 = W_0 = 0`` at ``w_points``.

    ``w_points`` has the ``n`` coordinates along its last axis; leading axes
    are broadcast.
    """
    w = np.asarray(w_points, dtype=float)
    if w.shape[-1] < 1:
        raise DomainError("need at least one coordinate")
    n = w.shape[-1]
    zeros = np.zeros(w.shape[:-1] + (2,))
    path = np.concatenate([zeros, w], axis=-1)
    last = path[..., -1] - path[..., -2]
    v_last = nystrom_v(sd, last.ravel()).reshape(last.shape)
    v0 = float(nystrom_v(sd, [0.0])[0])
    log_scale = -n * math.log(sd.lam)
    return v_last / v0 * np.exp(log_scale - hamiltonian(sd.spec, path))


# --------------------------------------------------------------------------
# bridge density tables

@dataclass(frozen=True, eq=False)
class DensityTable:
    """``phi[n]`` for ``n = 2..n_max``; entries 0 and 1 are NaN."""

    sd: object
    n_max: int
    phi: np.ndarray
    method: str
    w_grid: Grid = None
    masses: np.ndarray = field(default=None, repr=False)
    leakage: float = 0.0

    @property
    def ns(self):
        return np.arange(2, self.n_max + 1)

    @property
    def values(self):
        return self.phi[2:]

    def __getitem__(self, n):
        return self.at(n)

    def at(self, n):
        if not 2 <= n <= self.n_max:
            raise RangeError(f"phi_{n} is not in the table (n_max = {self.n_max})")
        return float(self.phi[n])

    def truncated(self, n_max):
        n_max = min(int(n_max), self.n_max)
        masses = None if self.masses is None else self.masses[:n_max + 1]
        return DensityTable(self.sd, n_max, self.phi[:n_max + 1].copy(), self.method,
                            self.w_grid, masses, self.leakage)

    def rows(self):
        for n in range(2, self.n_max + 1):
            yield n, float(self.phi[n])


def default_w_grid(sd, n_max, c=6.0):
    """Lattice for ``W`` spanning ``+-(c sqrt(n_max) sigma + L)``."""
    h = sd.grid.h
    half = c * math.sqrt(n_max) * stationary_std(sd) + sd.grid.x_max
    return Grid.lattice(h, int(math.ceil(half / h)))


def _check_lattice(sd, w_grid):
    grid = sd.grid
    if not grid.has_node(0.0):
        raise DomainError("the spectral grid must contain the node 0")
    if abs(w_grid.h - grid.h) > 1e-9 * grid.h or not w_grid.has_node(0.0):
        raise DomainError("the W grid must share the spectral grid spacing and contain 0")


def _shift_rows(G, offsets, out):
    """``out[j, w] = G[j, w - offsets[j]]`` with zero fill."""
    nw = G.shape[1]
    out.fill(0.0)
    for j, s in enumerate(offsets):
        if s >= 0:
            if s < nw:
                out[j, s:] = G[j, :nw - s]
        elif -s < nw:
            out[j, :nw + s] = G[j, -s:]
    return out


def pair_density_table(sd, n_max, w_grid=None, max_leakage=1e-3):
    """Bridge densities by deterministic propagation of ``(Y_k, W_k)``.

    ``f_{k+1}(y', w') = sum_i f_k(y_i, w' - y') p(y_i, y') weight_i`` on the
    product of the spectral grid and a lattice for ``W`` with the same spacing,
    so that ``w' - y'`` is always a lattice point.  Raises
    :class:`AccuracyError` when more than ``max_leakage`` of the probability
    mass has left the ``W`` lattice.
    """
    n_max = check_int(n_max, "n_max", lower=2)
    w_grid = w_grid or default_w_grid(sd, n_max)
    _check_lattice(sd, w_grid)
    grid = sd.grid
    h = grid.h
    wts = grid.weights
    c0 = grid.index_of(0.0)
    wz = w_grid.index_of(0.0)
    offsets = np.arange(grid.n_points) - c0
    pf = sd.k * sd.v[None, :] / (sd.lam * sd.v[:, None])
    A = (pf * wts[:, None]).T
    nw = w_grid.n_points

    f = np.zeros((grid.n_points, nw))
    cols = wz + offsets
    ok = (cols >= 0) & (cols < nw)
    f[np.nonzero(ok)[0], cols[ok]] = pf[c0, ok] / h
    phi = np.full(n_max + 1, np.nan)
    masses = np.full(n_max + 1, np.nan)
    masses[0] = 1.0
    buf = np.empty_like(f)
    for k in range(1, n_max):
        masses[k] = float(wts @ f.sum(axis=1)) * h
        if 1.0 - masses[k] > max_leakage:
            raise AccuracyError(
                f"probability mass leaked through the W grid at step {k}: "
                f"{1.0 - masses[k]:.3g} > {max_leakage:g}; widen the W grid")
        phi[k + 1] = float(np.sum(f[:, wz] * pf[:, c0] * wts))
        G = A @ f
        f = _shift_rows(G, offsets, buf)
        buf = G
    masses[n_max] = float(wts @ f.sum(axis=1)) * h
    if 1.0 - masses[n_max] > max_leakage:
        raise AccuracyError(
            f"probability mass leaked through the W grid at step {n_max}: "
            f"{1.0 - masses[n_max]:.3g} > {max_leakage:g}; widen the W grid")
    return DensityTable(sd=sd, n_max=n_max, phi=phi, method="propagation",
                        w_grid=w_grid, masses=masses, leakage=float(1.0 - np.nanmin(masses)))


def theta_quadrature(theta_max, levels=22, order=16):
    """Gauss-Legendre nodes on dyadic panels of ``[0, theta_max]``.

    Panels shrink geometrically towards 0, where the characteristic function
    of ``W_n`` concentrates for large ``n``.
    """
    edges = np.concatenate([[0.0], theta_max * 2.0 ** -np.arange(levels, -1, -1.0)])
    gx, gw = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True, eq=False)
class _ModalExpansion:
    theta: np.ndarray
    theta_weights: np.ndarray
    # per theta node: eigenvalues / lam and the matching (0, 0) coefficients
    ratios: np.ndarray
    coefs: np.ndarray
    h: float

    def evaluate(self, ns, chunk=2048, cutoff=1e-40):
        ns = np.asarray(ns, dtype=float)
        mod = np.abs(self.ratios).ravel()
        amp = (np.abs(self.coefs) * self.theta_weights[:, None]).ravel()
        phase0 = np.angle(self.coefs).ravel()
        with np.errstate(divide="ignore"):
            log_mod = np.log(mod)
        arg = np.angle(self.ratios).ravel()
        out = np.empty(ns.size)
        for s in range(0, ns.size, chunk):
            block = ns[s:s + chunk]
            active = amp * np.exp(block[0] * log_mod) > cutoff
            lm, ar, am, p0 = log_mod[active], arg[active], amp[active], phase0[active]
            e = np.exp(block[None, :] * lm[:, None])
            c = np.cos(p0[:, None] + block[None, :] * ar[:, None])
            out[s:s + chunk] = am @ (e * c)
        return out / (math.pi * self.h)


def modal_expansion(sd, levels=22, order=16):
    """Eigen-decompose the Fourier-twisted kernel on a ``theta`` quadrature.

    With ``S = E^{1/2} G E^{1/2}`` (``G[i, j] = exp(-V2(y_j - y_i))``,
    ``E = exp(-V1) * weights``) and ``D = diag(exp(i theta y / 2))``, the
    lattice Fourier inversion gives

        lam**n phi[n] = (1 / (pi h)) int_0^{pi/h} Re [(D S D)**n]_{00} dtheta.
    """
    grid = sd.grid
    y = grid.nodes
    c0 = grid.index_of(0.0)
    with np.errstate(over="ignore", under="ignore"):
        G = np.exp(-sd.spec.v2(y[None, :] - y[:, None]))
    e = np.sqrt(sd.kernel.col_factor)
    S = e[:, None] * G * e[None, :]
    theta, tw = theta_quadrature(math.pi / grid.h, levels, order)
    n = grid.n_points
    ratios = np.empty((theta.size, n), dtype=complex)
    coefs = np.empty((theta.size, n), dtype=complex)
    e0 = np.zeros(n)
    e0[c0] = 1.0
    for q, t in enumerate(theta):
        d = np.exp(0.5j * t * y)
        B = d[:, None] * S * d[None, :]
        rho, R = scipy.linalg.eig(B, overwrite_a=True, check_finite=False)
        z = scipy.linalg.solve(R, e0, check_finite=False)
        ratios[q] = rho / sd.lam
        coefs[q] = R[c0] * z
    return _ModalExpansion(theta=theta, theta_weights=tw, ratios=ratios, coefs=coefs, h=grid.h)


def fourier_density_table(sd, n_max, expansion=None):
    """Bridge densities for ``n = 2..n_max`` by lattice Fourier inversion.

    No truncation of the ``W`` range is involved, so there is no leakage; the
    only approximation beyond the spectral grid is the ``theta`` quadrature.
    """
    n_max = check_int(n_max, "n_max", lower=2)
    if not sd.grid.has_node(0.0):
        raise DomainError("the spectral grid must contain the node 0")
    expansion = expansion or modal_expansion(sd)
    phi = np.full(n_max + 1, np.nan)
    phi[2:] = expansion.evaluate(np.arange(2, n_max + 1))
    return DensityTable(sd=sd, n_max=n_max, phi=phi, method="fourier")


# --------------------------------------------------------------------------
# checks

@dataclass(frozen=True)
class BoundsReport:
    n_lo: int
    n_hi: int
    c1_hat: float
    c2_hat: float
    exponent: float
    prefactor: float

    @property
    def passed(self):
        return self.c1_hat > 0 and math.isfinite(self.c2_hat)


def density_bounds_check(table, n_lo=11):
    """Empirical constants of the two-sided bound ``C1/n <= phi[n] <= C2`` (odd ``n``).

    Also fits ``phi[n] ~ c n**(-s)`` by least squares in log-log coordinates
    and reports ``s`` as a diagnostic.
    """
    n_lo = check_int(n_lo, "n_lo", lower=2)
    ns = np.arange(n_lo + (n_lo + 1) % 2, table.n_max + 1, 2)
    if ns.size < 2:
        raise RangeError(f"table must reach at least n = {n_lo + 2}")
    vals = table.phi[ns]
    if not np.all(np.isfinite(vals)):
        raise DataError("density table contains non-finite entries")
    c1 = float(np.min(ns * vals))
    c2 = float(np.max(vals))
    if np.all(vals > 0):
        slope, intercept = np.polyfit(np.log(ns), np.log(vals), 1)
        s, c = -float(slope), math.exp(float(intercept))
    else:
        s = c = math.nan
    return BoundsReport(n_lo=int(ns[0]), n_hi=int(ns[-1]), c1_hat=c1, c2_hat=c2,
                        exponent=s, prefactor=c)


@dataclass(frozen=True, eq=False)
class MomentReport:
    steps: np.ndarray
    mean_abs_y: np.ndarray
    se_abs_y: np.ndarray
    mean_inv_v: np.ndarray
    se_inv_v: np.ndarray
    mean_y: np.ndarray
    se_y: np.ndarray
    mean_abs_w: np.ndarray
    n_samples: int
    ref_step: int

    @property
    def abs_y_bound(self):
        return float(np.max(self.mean_abs_y))

    @property
    def bounded(self):
        i = int(np.nonzero(self.steps == self.ref_step)[0][0])
        return bool(np.all(self.mean_abs_y <= 3.0 * self.mean_abs_y[i])
                    and np.all(self.mean_inv_v <= 3.0 * self.mean_inv_v[i])
                    and np.all(np.isfinite(self.mean_inv_v)))

    @property
    def linear_w_bound(self):
        return bool(np.all(self.mean_abs_w <= self.abs_y_bound * self.steps * (1 + 1e-12)))

    @property
    def passed(self):
        return self.bounded and self.linear_w_bound


def moment_check(sd, n, n_samples=100_000, seed=None, ref_step=5):
    """Monte Carlo estimates of ``E|Y_k|``, ``E[1/v(Y_k)]`` and ``E|W_k|`` for ``k <= n``.

    Uniform boundedness is judged against the values at ``ref_step``: every
    estimate must stay below three times its reference value.
    """
    n = check_int(n, "n", lower=1)
    n_samples = check_int(n_samples, "n_samples", lower=2)
    ref_step = min(ref_step, n)
    sums = {key: np.zeros(n) for key in ("ay", "ay2", "iv", "iv2", "y", "y2", "aw")}
    state = {}

    def collect(k, x):
        if k == 1:
            state["w"] = np.zeros_like(x)
        state["w"] = state["w"] + x
        iv = 1.0 / nystrom_v(sd, x)
        ax = np.abs(x)
        i = k - 1
        sums["ay"][i] += ax.sum()
        sums["ay2"][i] += (ax * ax).sum()
        sums["iv"][i] += iv.sum()
        sums["iv2"][i] += (iv * iv).sum()
        sums["y"][i] += x.sum()
        sums["y2"][i] += (x * x).sum()
        sums["aw"][i] += np.abs(state["w"]).sum()

    sample_paths(sd, n_samples, n, seed=seed, callback=collect)
    m = float(n_samples)

    def mean_se(s1, s2):
        mean = s1 / m
        var = np.maximum(s2 / m - mean * mean, 0.0) * m / (m - 1.0)
        return mean, np.sqrt(var / m)

    ay, say = mean_se(sums["ay"], sums["ay2"])
    iv, siv = mean_se(sums["iv"], sums["iv2"])
    my, smy = mean_se(sums["y"], sums["y2"])
    return MomentReport(steps=np.arange(1, n + 1), mean_abs_y=ay, se_abs_y=say,
                        mean_inv_v=iv, se_inv_v=siv, mean_y=my, se_y=smy,
                        mean_abs_w=sums["aw"] / m, n_samples=n_samples, ref_step=ref_step)


def bridge_density_table(sd, n_max, n_direct=128, expansion=None, w_grid=None):
    """Propagation for ``n <= n_direct`` spliced with Fourier inversion beyond.

    The Fourier route is accurate to about ``1e-12`` relative once ``n`` exceeds a
    few dozen steps, while the propagation is exact for small ``n``.
    """
    n_max = check_int(n_max, "n_max", lower=2)
    direct = pair_density_table(sd, min(n_direct, n_max), w_grid=w_grid)
    if n_max <= n_direct:
        return direct
    expansion = expansion or modal_expansion(sd)
    phi = np.full(n_max + 1, np.nan)
    phi[:n_direct + 1] = direct.phi
    phi[n_direct + 1:] = expansion.evaluate(np.arange(n_direct + 1, n_max + 1))
    return DensityTable(sd=sd, n_max=n_max, phi=phi, method="hybrid",
                        w_grid=direct.w_grid, masses=direct.masses, leakage=direct.leakage)


def sampler_l1_error(sd, x=0.0, n_samples=1_000_000, nodes_per_bin=8, seed=None):
    """L1 distance between a histogram of one-step draws and the row law ``p(x, .)``.

    Bins are unions of ``nodes_per_bin`` grid cells, so their exact masses
    come from :func:`step_cdf`.
    """
    nodes_per_bin = check_int(nodes_per_bin, "nodes_per_bin", lower=1)
    draws = sample_paths(sd, n_samples, 1, a=x, seed=seed)[:, 0]
    cdf = step_cdf(sd, x)
    idx = np.unique(np.concatenate([np.arange(0, cdf.size, nodes_per_bin), [cdf.size - 1]]))
    edges = sd.grid.nodes[idx]
    expected = np.diff(cdf[idx])
    counts, _ = np.histogram(draws, bins=edges)
    return float(np.abs(counts / n_samples - expected).sum())
