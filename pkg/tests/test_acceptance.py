"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``[PASS]``/``[FAIL]`` line (also collected in the pytest
terminal summary) and then asserts the same condition.
"""

import math
import time

import numpy as np

from polypin.chain import density_bounds_check, moment_check, pair_density_table, sampler_l1_error
from polypin.ergodics import drift_check, first_below, is_nonincreasing, tv_convergence
from polypin.partition import (contact_fraction, free_energy, log_partition_sequence,
                               nested_log_integral, z_free_bridge, z_pinned_bruteforce)
from polypin.renewal import log_lower_bound, renewal_data, solve_mu
from polypin.spectral import (Grid, check_left_right_relation, invariant_measure,
                              row_integrals, spectral_data, symmetry_deviation)


def test_criterion_01_spectral_correctness(quad_spec, acceptance):
    t0 = time.perf_counter()
    sd = spectral_data(quad_spec, Grid.symmetric(8.0, 257))
    row_err = float(np.max(np.abs(row_integrals(sd) - 1.0)))
    _, inv = invariant_measure(sd)
    sym = symmetry_deviation(sd)
    lr = check_left_right_relation(sd)
    elapsed = time.perf_counter() - t0
    ok = (max(sd.residual_right, sd.residual_left) <= 1e-10 and row_err <= 1e-6
          and inv <= 1e-6 and sym <= 1e-5 and lr <= 1e-4 and elapsed < 10)
    acceptance(1, ok, f"residuals {sd.residual_right:.1e}/{sd.residual_left:.1e}, rows {row_err:.1e}, "
                      f"invariance {inv:.1e}, symmetry {sym:.1e}, left/right {lr:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_bridge_identity(quad_spec, sd, acceptance):
    t0 = time.perf_counter()
    table = pair_density_table(sd, 7)
    worst = 0.0
    for N in range(2, 7):
        bridge = math.exp(z_free_bridge(sd, table, N))
        direct = math.exp(nested_log_integral(quad_spec, N, set()))
        worst = max(worst, abs(bridge / direct - 1.0))
    analytic = abs(math.exp(z_free_bridge(sd, table, 2)) / (math.sqrt(math.pi) / 2) - 1.0)
    elapsed = time.perf_counter() - t0
    ok = worst <= 5e-3 and analytic <= 1e-3 and elapsed < 60
    acceptance(2, ok, f"max rel. error vs nested quadrature {worst:.2e}, "
                      f"N=2 vs sqrt(pi)/2 {analytic:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_03_pinned_oracle_equivalence(quad_spec, sd, acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for eps in (0.5, 1.0, 2.0):
        seq = log_partition_sequence(sd, eps, 10)
        for N in (4, 6, 8, 10):
            brute = z_pinned_bruteforce(quad_spec, eps, N)
            worst = max(worst, abs(math.expm1(seq[N] - brute)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-2 and elapsed < 300
    acceptance(3, ok, f"max rel. difference transfer vs subset sum {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_04_density_bounds(sd, acceptance):
    t0 = time.perf_counter()
    table = pair_density_table(sd, 101)
    rep = density_bounds_check(table, n_lo=11)
    elapsed = time.perf_counter() - t0
    ok = (rep.n_lo == 11 and rep.n_hi == 101 and rep.c1_hat > 0 and math.isfinite(rep.c2_hat)
          and table.leakage <= 1e-3 and elapsed < 120)
    acceptance(4, ok, f"min n*phi_n {rep.c1_hat:.4f}, max phi_n {rep.c2_hat:.4f}, "
                      f"leakage {table.leakage:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_05_positive_free_energy_bound(sd, long_table, acceptance):
    t0 = time.perf_counter()
    eps_list = (0.1, 0.2, 0.5, 1.0, 2.0)
    z0 = log_partition_sequence(sd, 0.0, 200)
    brackets, estimates = [], []
    for eps in eps_list:
        brackets.append(solve_mu(long_table, eps))
        estimates.append(free_energy(None, sd, eps, [50, 100, 200], log_z_0=z0).estimate)
    elapsed = time.perf_counter() - t0
    lo = [b.mu_lo for b in brackets]
    positive = all(m > 0 for m in lo)
    increasing = all(b.mu_hi < c.mu_lo for b, c in zip(brackets, brackets[1:]))
    above = all(f >= m - 1e-3 for f, m in zip(estimates, lo))
    ok = positive and increasing and above and elapsed < 600
    detail = ", ".join(f"eps={e:g}: mu_lo={m:.3e} F={f:.4f}" for e, m, f in zip(eps_list, lo, estimates))
    acceptance(5, ok, f"{detail}; {elapsed:.1f}s")
    assert ok


def test_criterion_06_finite_N_lower_bound(quad_spec, sd, long_table, acceptance):
    t0 = time.perf_counter()
    worst = -math.inf
    for eps in (0.5, 1.0):
        rd = renewal_data(long_table, eps, N_max=12)
        for N in range(5, 11):
            gap = log_lower_bound(sd, rd, N) - z_pinned_bruteforce(quad_spec, eps, N)
            worst = max(worst, gap)
    elapsed = time.perf_counter() - t0
    ok = worst <= math.log1p(0.01) and elapsed < 300
    acceptance(6, ok, f"max log(bound / Z) = {worst:.3f} (limit {math.log1p(0.01):.4f}), {elapsed:.2f}s")
    assert ok


def test_criterion_07_renewal_theorem(long_table, acceptance):
    t0 = time.perf_counter()
    rd = renewal_data(long_table, 1.0, N_max=2000)
    elapsed = time.perf_counter() - t0
    resid = abs(rd.mass_fn[2000] - 1.0 / rd.mean)
    ok = resid <= 1e-3 and elapsed < 10
    acceptance(7, ok, f"|u(2000) - 1/m| = {resid:.2e} (m = {rd.mean:.4f}), {elapsed:.2f}s")
    assert ok


def test_criterion_08_ergodic_certificates(sd, acceptance):
    t0 = time.perf_counter()
    cert = drift_check(sd)
    tv = tv_convergence(sd, 0.0, 200)
    n_hit = first_below(tv, 1e-3)
    elapsed = time.perf_counter() - t0
    ok = (cert.valid and n_hit is not None and n_hit <= 200 and is_nonincreasing(tv)
          and elapsed < 60)
    acceptance(8, ok, f"M={cert.M:g}, b={cert.b:.3f}, margin={cert.margin:.3e}, "
                      f"TV<=1e-3 at n={n_hit}, non-increasing={is_nonincreasing(tv)}, {elapsed:.2f}s")
    assert ok


def test_criterion_09_sampling_consistency(sd, acceptance):
    t0 = time.perf_counter()
    rep = moment_check(sd, 100, n_samples=100_000, seed=2024)
    z = abs(rep.mean_y[49]) / rep.se_y[49]
    l1 = max(sampler_l1_error(sd, x, n_samples=1_000_000, seed=9) for x in (0.0, 2.0))
    elapsed = time.perf_counter() - t0
    ok = rep.bounded and z <= 3.0 and l1 <= 0.01 and elapsed < 120
    acceptance(9, ok, f"sup E|Y_n| {rep.abs_y_bound:.3f}, sup E[1/v(Y_n)] "
                      f"{np.max(rep.mean_inv_v):.3f}, E[Y_50]/se {z:.2f}, one-step L1 {l1:.4f}, "
                      f"{elapsed:.1f}s")
    assert ok


def test_criterion_10_localization_dichotomy(sd, acceptance):
    t0 = time.perf_counter()
    eps_list = (1e-6, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0)
    frac = [contact_fraction(None, sd, e, 100) for e in eps_list]
    elapsed = time.perf_counter() - t0
    monotone = all(a < b for a, b in zip(frac, frac[1:]))
    ok = frac[0] <= 1e-3 and frac[-1] >= 0.5 and monotone and elapsed < 300
    acceptance(10, ok, f"contact fraction {frac[0]:.2e} at eps=1e-6, {frac[-1]:.3f} at eps=10, "
                       f"monotone={monotone}, {elapsed:.1f}s")
    assert ok
