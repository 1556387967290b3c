import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polypin.exceptions import ConvergenceError, DomainError, NumericalError, SpecError
from polypin.potentials import Potential, PotentialSpec, certify_assumptions
from polypin.spectral import (Grid, build_kernel, check_left_right_relation, interval_mass,
                              invariant_measure, nystrom_v, principal_eigen, row_integrals,
                              scaled, spectral_data, symmetry_deviation, transition_density,
                              transition_matrix)


def test_grid_weights_sum_to_length():
    g = Grid(-3.0, 5.0, 33)
    assert g.weights.sum() == pytest.approx(8.0)
    assert np.all(np.diff(g.nodes) > 0)
    assert g.index_of(0.0) == 12
    with pytest.raises(DomainError):
        g.index_of(0.1)


def test_kernel_entries(quad_spec):
    km = build_kernel(quad_spec, Grid.symmetric(2.0, 5))
    x = km.grid.nodes
    i0, i1 = 2, 3
    assert x[i0] == 0 and x[i1] == 1
    assert km.k[i0, i0] == pytest.approx(1.0)
    assert km.k[i1, i1] == pytest.approx(np.exp(-0.5))
    assert np.all(km.k > 0)


def test_kernel_refuses_flagged_spec():
    flagged = certify_assumptions(PotentialSpec(Potential("log", 0.2), Potential("quadratic"))).spec
    with pytest.raises(SpecError):
        build_kernel(flagged, Grid.symmetric(4.0, 9))


def test_kernel_underflow_names_entry(heavy_spec):
    with pytest.raises(NumericalError, match=r"\(\d+, \d+\)"):
        build_kernel(heavy_spec, Grid.symmetric(40.0, 81))


def test_power_iteration_on_known_matrix():
    class _K:
        grid = Grid(0.0, 1.0, 3)
        k = np.array([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.5]]) + 1e-12
        matrix = None
    km = _K()
    km.matrix = km.k * km.grid.weights[None, :] / km.grid.weights[None, :]
    sd = principal_eigen(km)
    assert sd.lam == pytest.approx(2.0, abs=1e-9)


def test_power_iteration_reports_nonconvergence(quad_spec):
    with pytest.raises(ConvergenceError) as info:
        principal_eigen(build_kernel(quad_spec, Grid.symmetric(8.0, 129)), max_iter=2)
    assert info.value.residual is not None


def test_eigenvalue_matches_dense_solver(sd):
    dense = np.max(np.abs(np.linalg.eigvals(sd.kernel.matrix)))
    assert sd.lam == pytest.approx(dense, abs=1e-10)


def test_eigenvectors_positive_and_normalized(sd):
    wts = sd.grid.weights
    assert np.all(sd.v > 0) and np.all(sd.w > 0)
    assert np.sum(sd.v ** 2 * wts) == pytest.approx(1.0)
    assert np.sum(sd.v * sd.w * wts) == pytest.approx(1.0)
    assert sd.pi_weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_rows_are_stochastic(sd):
    assert np.max(np.abs(row_integrals(sd) - 1.0)) <= 1e-6
    assert np.all(transition_matrix(sd) > 0)


def test_transition_density_formula(sd):
    i, j = 100, 140
    expected = sd.k[i, j] * sd.v[j] / (sd.lam * sd.v[i])
    assert transition_density(sd, i, j) == pytest.approx(expected)


def test_scaling_eigenvectors_changes_nothing(sd):
    sd2 = scaled(sd, v_scale=2.0, w_scale=3.0)
    assert np.allclose(transition_matrix(sd2), transition_matrix(sd))
    pi2, _ = invariant_measure(sd2)
    assert np.allclose(pi2, sd.pi_weights)
    assert check_left_right_relation(sd2) == pytest.approx(check_left_right_relation(sd), abs=1e-12)


def test_invariance_and_symmetry(sd):
    _, res = invariant_measure(sd)
    assert res <= 1e-6
    assert symmetry_deviation(sd) <= 1e-5
    assert interval_mass(sd.pi_weights, sd.grid, -8, 8) == pytest.approx(1.0)


def test_left_right_relation(sd):
    assert check_left_right_relation(sd) <= 1e-4


def test_left_right_relation_needs_symmetric_grid(quad_spec):
    sd = spectral_data(quad_spec, Grid(0.0, 8.0, 65))
    with pytest.raises(DomainError):
        check_left_right_relation(sd)


def test_lambda_stable_under_refinement(sd, sd_coarse):
    assert sd.lam == pytest.approx(sd_coarse.lam, rel=1e-6)


def test_v_becomes_smoother_under_refinement(sd, sd_coarse):
    assert np.max(np.abs(np.diff(sd.v))) < np.max(np.abs(np.diff(sd_coarse.v)))


def test_residual_history_decreases_after_burn_in(sd):
    hist = np.array(sd.residual_history)
    tail = hist[5:]
    tail = tail[tail > 1e-13]
    assert np.all(np.diff(tail) <= 1e-15)


def test_nystrom_extension_agrees_on_nodes(sd):
    x = sd.grid.nodes[::16]
    assert np.allclose(nystrom_v(sd, x), sd.v[::16], rtol=1e-9)


def test_non_gaussian_model(heavy_spec):
    sd = spectral_data(heavy_spec, Grid.symmetric(3.0, 241))
    assert np.all(sd.v > 0)
    assert np.max(np.abs(row_integrals(sd) - 1)) < 1e-6
    assert check_left_right_relation(sd) < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_left_right_relation_for_random_quadratics(alpha, beta):
    spec = certify_assumptions(PotentialSpec.quadratic(alpha, beta)).spec
    sd = spectral_data(spec, Grid.symmetric(8.0, 129))
    assert check_left_right_relation(sd) < 1e-6
    assert symmetry_deviation(sd) < 1e-9
