import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polypin.exceptions import AccuracyError, ConfigError, RangeError, SizeError, SpecError
from polypin.partition import (HeightQuadrature, contact_fraction, couple_sets, free_energy,
                               gaussian_log_integral, log_partition_sequence, nested_log_integral,
                               partition_table, z_free_bridge, z_pinned_bruteforce,
                               z_pinned_transfer, z_restricted_bruteforce)
from polypin.potentials import Potential, PotentialSpec, certify_assumptions
from polypin.spectral import Grid, spectral_data


def test_two_site_chain_has_closed_form(quad_spec, short_table, sd):
    exact = math.log(math.sqrt(math.pi) / 2)
    assert z_free_bridge(sd, short_table, 2) == pytest.approx(exact, abs=1e-3)
    assert gaussian_log_integral(quad_spec, 2, set()) == pytest.approx(exact, abs=1e-12)
    assert nested_log_integral(quad_spec, 2, set()) == pytest.approx(exact, abs=1e-9)


def test_bridge_requires_table_entry(sd, short_table):
    with pytest.raises(RangeError):
        z_free_bridge(sd, short_table, 401)


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_gaussian_formula_matches_nested_quadrature(quad_spec, N):
    for pinned in [set(), {1}, set(range(1, N))]:
        assert gaussian_log_integral(quad_spec, N, pinned) == pytest.approx(
            nested_log_integral(quad_spec, N, pinned), abs=1e-8)


def test_all_pinned_term_is_one(quad_spec):
    # eps = 1, N = 3: full pin A = {1, 2} contributes exp(-H(0)) = 1
    assert nested_log_integral(quad_spec, 3, {1, 2}) == 0.0
    z1 = math.exp(z_pinned_bruteforce(quad_spec, 1.0, 3))
    rest = sum(math.exp(gaussian_log_integral(quad_spec, 3, A)) for A in [set(), {1}, {2}])
    assert z1 == pytest.approx(rest + 1.0)


def test_bruteforce_size_and_spec_errors(quad_spec):
    with pytest.raises(SizeError):
        z_pinned_bruteforce(quad_spec, 1.0, 13)
    flagged = certify_assumptions(PotentialSpec(Potential("log", 0.2), Potential("quadratic"))).spec
    with pytest.raises(SpecError):
        z_pinned_bruteforce(flagged, 1.0, 4)


def test_bruteforce_is_monotone_in_eps(quad_spec):
    z = [z_pinned_bruteforce(quad_spec, e, 8) for e in (0.0, 0.5, 1.0)]
    assert z[0] < z[1] < z[2]


def test_free_bridge_matches_bruteforce_at_eps_zero(quad_spec, sd, short_table):
    for N in range(2, 7):
        assert z_free_bridge(sd, short_table, N) == pytest.approx(
            z_pinned_bruteforce(quad_spec, 0.0, N), abs=5e-3)


@pytest.mark.parametrize("eps", [0.5, 1.0, 2.0])
def test_transfer_matches_bruteforce(quad_spec, sd, eps):
    seq = log_partition_sequence(sd, eps, 10)
    for N in (4, 6, 8, 10):
        assert seq[N] == pytest.approx(z_pinned_bruteforce(quad_spec, eps, N), abs=1e-2)


def test_transfer_matches_nested_for_non_gaussian_model(light_spec):
    sd = spectral_data(light_spec, Grid.symmetric(3.0, 481))
    quad = HeightQuadrature(L=6.0, n_points=241)
    for eps in (0.5, 2.0):
        seq = log_partition_sequence(sd, eps, 5)
        for N in (3, 5):
            brute = z_pinned_bruteforce(light_spec, eps, N, quad=quad)
            assert seq[N] == pytest.approx(brute, abs=1e-2)


def test_transfer_single_N_and_spec_check(quad_spec, sd):
    assert z_pinned_transfer(quad_spec, sd, 1.0, 6) == pytest.approx(
        log_partition_sequence(sd, 1.0, 6)[6])
    other = certify_assumptions(PotentialSpec.quadratic(2.0, 1.0)).spec
    with pytest.raises(ConfigError):
        z_pinned_transfer(other, sd, 1.0, 6)


def test_transfer_grid_needs_exact_zero(sd):
    shifted = Grid(-10.0 + 0.5 * sd.grid.h, 10.0 + 0.5 * sd.grid.h, 321)
    with pytest.raises(ConfigError):
        log_partition_sequence(sd, 1.0, 5, height_grid=shifted)


def test_large_eps_is_dominated_by_full_pinning(sd):
    eps = 1e4
    seq = log_partition_sequence(sd, eps, 12)
    for N in (6, 12):
        assert seq[N] - (N - 1) * math.log(eps) == pytest.approx(0.0, abs=0.01)


def test_couple_sets_structure():
    sets = couple_sets(7)
    assert () in sets and (1, 2) in sets and (1, 2, 4, 5) in sets
    # right ends t of the couples are subsets of {2..6} without neighbours
    assert len(sets) == 13 and len(set(sets)) == 13
    for A in sets:
        assert len(A) % 2 == 0 and max(A, default=0) <= 6
        ends = A[1::2]
        assert all(A[2 * i] == t - 1 for i, t in enumerate(ends))
        assert all(b - a >= 2 for a, b in zip((0,) + ends, ends))


def test_restricted_sum_is_a_lower_bound(quad_spec):
    for N in (5, 8):
        assert z_restricted_bruteforce(quad_spec, 1.0, N) < z_pinned_bruteforce(quad_spec, 1.0, N)


def test_partition_table_methods(sd, short_table):
    t = partition_table(sd, 0.0, [2, 4], method="bridge", table=short_table)
    b = partition_table(sd, 0.0, [2, 4], method="transfer")
    assert t.method == "bridge" and len(t.rows()) == 2
    for (n1, z1), (n2, z2) in zip(t.rows(), b.rows()):
        assert n1 == n2 and z1 == pytest.approx(z2, abs=1e-9)
    with pytest.raises(ConfigError):
        partition_table(sd, 1.0, [2], method="bridge", table=short_table)


def test_free_energy_at_zero_and_monotone(sd):
    z0 = log_partition_sequence(sd, 0.0, 200)
    f0 = free_energy(None, sd, 0.0, [50, 100, 200], log_z_0=z0)
    assert f0.estimate == 0.0
    fa = free_energy(None, sd, 0.5, [50, 100, 200], log_z_0=z0)
    fb = free_energy(None, sd, 1.0, [50, 100, 200], log_z_0=z0)
    assert 0 < fa.estimate <= fb.estimate
    assert fa.band == pytest.approx(abs(fa.f_N[-1] - fa.f_N[-2]))
    assert not fa.warnings


def test_free_rate_tends_to_log_lambda(sd):
    z0 = log_partition_sequence(sd, 0.0, 400)
    fe = free_energy(None, sd, 0.0, [25, 50, 100, 200, 400], log_z_0=z0)
    gap = np.abs(fe.rate_gap)
    assert np.all(np.diff(gap) < 0)
    assert np.all(gap <= (np.log(fe.N) + 2.0) / fe.N)


def test_free_energy_needs_two_sizes(sd):
    with pytest.raises(ConfigError):
        free_energy(None, sd, 1.0, [50])


def test_contact_fraction_range_and_errors(sd):
    assert 0 < contact_fraction(None, sd, 1.0, 20) < 1
    with pytest.raises(ConfigError):
        contact_fraction(None, sd, 1.0, 20, d_eps=2.0)



def test_contact_fraction_out_of_range_is_an_error(sd, monkeypatch):
    import polypin.partition as part
    monkeypatch.setattr(part, "log_partition_sequence",
                        lambda sd, eps, N, grid=None: np.full(N + 1, 100.0 * eps))
    with pytest.raises(AccuracyError):
        part.contact_fraction(None, sd, 1.0, 20)


def test_contact_fraction_agrees_with_bruteforce_derivative(quad_spec, sd):
    eps, N, d = 1.0, 8, 0.05
    hi = z_pinned_bruteforce(quad_spec, eps + d, N)
    lo = z_pinned_bruteforce(quad_spec, eps - d, N)
    assert contact_fraction(None, sd, eps, N) == pytest.approx(eps * (hi - lo) / (2 * d) / N, abs=1e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.05, 5.0))
def test_log_z_nondecreasing_in_eps(sd_coarse, e1, e2):  # noqa: D103
    lo, hi = sorted((e1, e2))
    a = log_partition_sequence(sd_coarse, lo, 12)[1:]
    b = log_partition_sequence(sd_coarse, hi, 12)[1:]
    assert np.all(b >= a - 1e-12)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.integers(3, 5))
def test_gaussian_fast_path_random_quadratics(alpha, beta, N):
    spec = certify_assumptions(PotentialSpec.quadratic(alpha, beta)).spec
    quad = HeightQuadrature(L=10.0, n_points=201)
    assert gaussian_log_integral(spec, N, set()) == pytest.approx(
        nested_log_integral(spec, N, set(), quad), abs=1e-6)
