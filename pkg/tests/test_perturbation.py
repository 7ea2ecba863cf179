import numpy as np
import pytest

from nodallab import (
    ConnectionVariation,
    DegenerateEigenvalueError,
    MetricVariation,
    assemble_forms,
    connection_first_order_shift,
    lowest_eigenpairs,
    make_base_grid,
    make_connection,
    metric_first_order_shift,
    splitting_experiment,
)
from nodallab.perturbation import (
    cluster_shift_matrix,
    conformal_identity_shift,
    continuum_shift_quadrature,
    finite_difference_shift,
    perturbed_operator,
)


class TestVariationTypes:
    def test_trace_of_inverse_metric_rate(self, generic24):
        grid, _ = generic24
        var = MetricVariation.from_spec(grid, 0.5)
        assert np.allclose(var.trace_b, -2 * grid.dim * 0.5)

    def test_gauge_transform_grid_mismatch(self, generic24):
        from nodallab import Section, gauge_transform
        grid, conn = generic24
        s = Section(1, np.ones(grid.shape, complex), conn)
        with pytest.raises(ValueError, match="same grid"):
            gauge_transform(conn, s, np.zeros((8, 8)))


class TestMetricShift:
    def test_constant_direction_is_scaling_law_2d(self, generic24_eigs):
        # a uniform conformal rate k rescales every eigenvalue at rate -2k
        op, eigs = generic24_eigs
        var = MetricVariation.from_spec(op.grid, 0.37)
        shift = metric_first_order_shift(eigs[0], var, neighbors=[e.lam for e in eigs])
        assert np.isclose(shift, -2 * 0.37 * eigs[0].lam, rtol=1e-12)

    def test_constant_direction_is_scaling_law_3d(self):
        grid = make_base_grid(3, 8, {"kind": "random_fourier", "amplitude": 0.1, "seed": 5})
        conn = make_connection(grid, [[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
        op = assemble_forms(grid, conn, 1)
        eigs = lowest_eigenpairs(op, 2)
        var = MetricVariation.from_spec(grid, 0.21)
        shift = metric_first_order_shift(eigs[0], var)
        assert np.isclose(shift, -2 * 0.21 * eigs[0].lam, rtol=1e-10)

    def test_conformal_identity_2d(self, generic24_eigs):
        # in d = 2 the whole rate comes from the moving volume
        op, eigs = generic24_eigs
        var = MetricVariation.from_spec(
            op.grid, {"kind": "random_fourier", "amplitude": 1.0, "seed": 21})
        shift = metric_first_order_shift(eigs[0], var, neighbors=[e.lam for e in eigs])
        assert abs(shift - conformal_identity_shift(eigs[0], var)) <= 1e-8

    def test_matches_finite_difference_2d(self, generic24_eigs):
        op, eigs = generic24_eigs
        var = MetricVariation.from_spec(
            op.grid, {"kind": "random_fourier", "amplitude": 1.0, "seed": 21})
        shift = metric_first_order_shift(eigs[0], var, neighbors=[e.lam for e in eigs])
        fd = finite_difference_shift(op, 0, var, 1e-4, k=4)
        assert abs(fd - shift) / abs(shift) <= 1e-4

    def test_matches_finite_difference_3d(self):
        grid = make_base_grid(3, 10, {"kind": "random_fourier", "amplitude": 0.1, "seed": 5})
        conn = make_connection(grid, [[0, 1, 0], [-1, 0, 0], [0, 0, 0]],
                               {"kind": "random_fourier_form", "amplitude": 0.2, "seed": 9})
        op = assemble_forms(grid, conn, 1)
        eigs = lowest_eigenpairs(op, 3)
        var = MetricVariation.from_spec(
            grid, {"kind": "random_fourier", "amplitude": 1.0, "seed": 31})
        shift = metric_first_order_shift(eigs[0], var, neighbors=[e.lam for e in eigs])
        fd = finite_difference_shift(op, 0, var, 1e-4, k=3)
        assert abs(fd - shift) / abs(shift) <= 1e-4

    def test_richardson_ratio_in_truncation_regime(self, generic24_eigs):
        op, eigs = generic24_eigs
        var = MetricVariation.from_spec(
            op.grid, {"kind": "random_fourier", "amplitude": 1.0, "seed": 21})
        shift = metric_first_order_shift(eigs[0], var, neighbors=[e.lam for e in eigs])
        e1 = abs(finite_difference_shift(op, 0, var, 1e-2, k=4) - shift)
        e2 = abs(finite_difference_shift(op, 0, var, 5e-3, k=4) - shift)
        assert 3.5 <= e1 / e2 <= 4.5

    def test_degenerate_rejected_with_cluster_info(self, flat_c2_eigs):
        op, eigs = flat_c2_eigs
        var = MetricVariation.from_spec(op.grid, 0.1)
        with pytest.raises(DegenerateEigenvalueError) as err:
            metric_first_order_shift(eigs[0], var, neighbors=[e.lam for e in eigs])
        assert len(err.value.cluster_lambdas) == 2


class TestConnectionShift:
    def test_zero_direction(self, generic24_eigs):
        op, eigs = generic24_eigs
        var = ConnectionVariation.from_spec(op.grid, None)
        assert connection_first_order_shift(eigs[0], var) == 0.0

    def test_pure_gauge_gives_zero(self, generic24_eigs, rng):
        op, eigs = generic24_eigs
        var = ConnectionVariation.pure_gauge(op.grid, rng.normal(size=op.grid.shape))
        shift = connection_first_order_shift(eigs[0], var, neighbors=[e.lam for e in eigs])
        assert abs(shift) <= 1e-10

    def test_matches_finite_difference(self, generic24_eigs):
        op, eigs = generic24_eigs
        var = ConnectionVariation.from_spec(
            op.grid, {"kind": "random_fourier_form", "amplitude": 1.0, "seed": 23})
        shift = connection_first_order_shift(eigs[0], var, neighbors=[e.lam for e in eigs])
        fd = finite_difference_shift(op, 0, var, 1e-4, k=4)
        assert abs(fd - shift) / abs(shift) <= 1e-4

    def test_richardson_ratio(self, generic24_eigs):
        op, eigs = generic24_eigs
        var = ConnectionVariation.from_spec(
            op.grid, {"kind": "random_fourier_form", "amplitude": 1.0, "seed": 23})
        shift = connection_first_order_shift(eigs[0], var, neighbors=[e.lam for e in eigs])
        e1 = abs(finite_difference_shift(op, 0, var, 1e-2, k=4) - shift)
        e2 = abs(finite_difference_shift(op, 0, var, 5e-3, k=4) - shift)
        assert 3.5 <= e1 / e2 <= 4.5

    def test_flux_carrying_variation_rejected(self):
        grid = make_base_grid(2, 12)
        landau = make_connection(grid, 1)
        with pytest.raises(ValueError, match="flux"):
            ConnectionVariation(grid=grid, beta_dot=landau.link_angle)

    def test_continuum_quadrature_comparison(self, generic24_eigs):
        # the analytic rate expressions, discretized independently, close in
        # on the form derivative as the grid refines
        op, eigs = generic24_eigs
        var_m = MetricVariation.from_spec(
            op.grid, {"kind": "random_fourier", "amplitude": 1.0, "seed": 21})
        shift = metric_first_order_shift(eigs[0], var_m, neighbors=[e.lam for e in eigs])
        assert abs(continuum_shift_quadrature(eigs[0], var_m) - shift) <= 1e-10
        var_c = ConnectionVariation.from_spec(
            op.grid, {"kind": "random_fourier_form", "amplitude": 1.0, "seed": 23})
        shift_c = connection_first_order_shift(eigs[0], var_c, neighbors=[e.lam for e in eigs])
        assert abs(continuum_shift_quadrature(eigs[0], var_c) - shift_c) <= 0.05 * abs(shift_c)


class TestSplitting:
    def test_seeded_perturbation_splits_doublet(self, flat_c2_eigs):
        op, _ = flat_c2_eigs
        rep = splitting_experiment(op, 1e-2, seed=0, direction="both", k=6)
        assert rep.lowest_cluster_size_before == 2
        assert rep.split
        assert rep.min_gap_after > 0

    def test_zero_epsilon_keeps_clusters(self, flat_c2_eigs):
        op, _ = flat_c2_eigs
        rep = splitting_experiment(op, 0.0, seed=0, direction="both", k=6)
        assert rep.sizes_before == rep.sizes_after
        assert not rep.split

    def test_pure_gauge_never_splits(self, flat_c2_eigs):
        op, _ = flat_c2_eigs
        rep = splitting_experiment(op, 1e-2, seed=5, direction="pure_gauge", k=6)
        assert not rep.split
        assert rep.min_gap_after <= 1e-10 * (1 + rep.lambdas_before[0])

    def test_sum_rule_against_finite_difference(self, flat_c2_eigs):
        # trace of the cluster matrix is the first-order rate of the pair sum
        op, eigs = flat_c2_eigs
        var = MetricVariation.from_spec(
            op.grid, [0.2, {"kind": "random_fourier", "amplitude": 0.5, "seed": 2}])
        h1 = cluster_shift_matrix(eigs, [0, 1], var)
        trace = float(np.real(np.trace(h1)))
        eps = 1e-4
        plus = lowest_eigenpairs(perturbed_operator(op, var, eps), 4)
        minus = lowest_eigenpairs(perturbed_operator(op, var, -eps), 4)
        fd = ((plus[0].lam + plus[1].lam) - (minus[0].lam + minus[1].lam)) / (2 * eps)
        assert abs(trace - fd) / abs(trace) <= 1e-6

    def test_cluster_matrix_predicts_splittings(self, flat_c2_eigs):
        op, eigs = flat_c2_eigs
        var = MetricVariation.from_spec(
            op.grid, [0.2, {"kind": "random_fourier", "amplitude": 0.5, "seed": 2}])
        predicted = np.linalg.eigvalsh(cluster_shift_matrix(eigs, [0, 1], var))
        eps = 1e-4
        plus = lowest_eigenpairs(perturbed_operator(op, var, eps), 4)
        measured = np.sort((np.array([plus[0].lam, plus[1].lam])
                            - np.array([eigs[0].lam, eigs[1].lam])) / eps)
        assert np.allclose(predicted, measured, atol=1e-3 * max(1.0, np.abs(predicted).max()))
