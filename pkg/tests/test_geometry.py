import numpy as np
import pytest

from nodallab import (
    Section,
    assemble_forms,
    gauge_transform,
    gradient_edge_integrals,
    lowest_eigenpairs,
    make_base_grid,
    make_connection,
)

TWO_PI = 2 * np.pi


class TestBaseGrid:
    def test_flat_grid_weights(self):
        grid = make_base_grid(2, 16)
        assert grid.h == 1 / 16
        assert np.all(grid.volume_weight == 1 / 256)

    def test_constant_conformal_scaling(self):
        grid = make_base_grid(2, 16, 0.5)
        assert np.allclose(grid.volume_weight, np.exp(1.0) / 256, rtol=0, atol=1e-15)

    def test_cosine_conformal_d3(self):
        # weights exp(0.3 cos(2 pi x1)) / 1728, sampled exactly
        grid = make_base_grid(3, 12, {"kind": "cosine", "amplitude": 0.1, "wavevector": [1, 0, 0]})
        w = grid.volume_weight
        expected = np.exp(0.3 * np.cos(TWO_PI * grid.coords[0])) / 12 ** 3
        assert np.allclose(w, expected, rtol=1e-14)
        assert np.isclose(w.min() / w.max(), np.exp(-0.6), rtol=1e-13)

    def test_deterministic_random_u(self):
        spec = {"kind": "random_fourier", "amplitude": 0.2, "seed": 9}
        g1 = make_base_grid(2, 12, spec)
        g2 = make_base_grid(2, 12, spec)
        assert np.array_equal(g1.u, g2.u)
        assert np.max(np.abs(g1.u)) <= 0.2

    @pytest.mark.parametrize("dim,n", [(1, 16), (4, 16), (2, 7), (3, 4)])
    def test_rejects_bad_shape(self, dim, n):
        with pytest.raises(ValueError):
            make_base_grid(dim, n)

    def test_rejects_large_conformal_factor(self):
        with pytest.raises(ValueError, match="bound"):
            make_base_grid(2, 16, 2.5)


class TestConnection:
    @pytest.mark.parametrize("c", [0, 1, 2, 3, -2])
    def test_flux_quantization_2d(self, c):
        grid = make_base_grid(2, 16)
        conn = make_connection(grid, c)
        total = float(conn.plane_flux_sums(0, 1))
        assert abs(total - TWO_PI * c) < 1e-10
        assert conn.measured_flux()[0, 1] == c

    def test_flux_quantization_3d(self):
        grid = make_base_grid(3, 12)
        conn = make_connection(grid, [[0, 1, 0], [-1, 0, 2], [0, -2, 0]])
        for (a, b), c in [((0, 1), 1), ((0, 2), 0), ((1, 2), 2)]:
            sums = conn.plane_flux_sums(a, b)
            assert np.allclose(sums, TWO_PI * c, atol=1e-10)
        assert np.array_equal(conn.measured_flux(), [[0, 1, 0], [-1, 0, 2], [0, -2, 0]])

    def test_flux_with_beta_unchanged(self):
        grid = make_base_grid(2, 16)
        conn = make_connection(grid, 2, {"kind": "random_fourier_form", "amplitude": 0.4, "seed": 1})
        assert conn.measured_flux()[0, 1] == 2

    def test_trivial_bundle_has_unit_twists(self):
        grid = make_base_grid(2, 16)
        conn = make_connection(grid, 0)
        for axis in range(2):
            assert np.allclose(conn.twist_phase(axis, 3), 1.0)

    def test_landau_twist_phase(self):
        # weight-m sections pick up exp(-2 pi i m x2) across the x1 period
        grid = make_base_grid(2, 16)
        conn = make_connection(grid, 1)
        for m in (1, 2, -1):
            expected = np.exp(-TWO_PI * 1j * m * grid.coords[1])
            assert np.allclose(conn.twist_phase(0, m), expected, atol=1e-14)
        assert np.allclose(conn.twist_phase(1, 5), 1.0)

    def test_cocycle_consistency(self):
        # transport around every period-lattice 2-face closes exactly
        grid = make_base_grid(3, 8)
        conn = make_connection(grid, [[0, 2, -1], [-2, 0, 3], [1, -3, 0]])

        def tau(axis, m, offset):
            ang = np.zeros(grid.shape)
            for b in range(axis + 1, 3):
                ang = ang + TWO_PI * conn.flux[axis, b] * (
                    grid.coords[b] + (1.0 if b == offset else 0.0))
            return np.exp(-1j * m * ang)

        for m in (1, 2):
            for a in range(3):
                for b in range(a + 1, 3):
                    # one full period in x_b multiplies the a-twist by e^(-2 pi i m c_ab)
                    ratio = tau(a, m, offset=b) / tau(a, m, offset=-1)
                    assert np.allclose(ratio, np.exp(-TWO_PI * 1j * m * conn.flux[a, b]), atol=1e-12)
                    loop = (
                        tau(a, m, -1) * tau(b, m, a)
                        * np.conj(tau(a, m, b)) * np.conj(tau(b, m, -1))
                    )
                    assert np.allclose(loop, 1.0, atol=1e-12)

    def test_rejects_bad_flux(self):
        grid = make_base_grid(2, 8)
        with pytest.raises(ValueError, match="antisymmetric"):
            make_connection(grid, [[0, 1], [1, 0]])
        with pytest.raises(ValueError, match="integer"):
            make_connection(grid, [[0, 0.5], [-0.5, 0]])
        with pytest.raises(ValueError, match="2 x 2"):
            make_connection(grid, np.zeros((3, 3), dtype=int))

    def test_scalar_flux_only_2d(self):
        grid = make_base_grid(3, 8)
        with pytest.raises(ValueError, match="dimension 2"):
            make_connection(grid, 1)


class TestSection:
    def test_norm_and_normalize(self, rng):
        grid = make_base_grid(2, 16, 0.3)
        conn = make_connection(grid, 1)
        s = Section(1, rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape), conn)
        sn = s.normalized()
        assert abs(sn.norm() - 1.0) < 1e-12

    def test_weight_mismatch_rejected(self):
        grid = make_base_grid(2, 8)
        conn = make_connection(grid, 0)
        a = Section(1, np.ones(grid.shape), conn)
        b = Section(2, np.ones(grid.shape), conn)
        with pytest.raises(ValueError, match="weight"):
            _ = a + b

    def test_connection_mismatch_rejected(self):
        grid = make_base_grid(2, 8)
        a = Section(1, np.ones(grid.shape), make_connection(grid, 0))
        b = Section(1, np.ones(grid.shape), make_connection(grid, 0))
        with pytest.raises(ValueError, match="connection"):
            a.mdot(b)


class TestGaugeTransform:
    def test_constant_chi_changes_nothing(self):
        grid = make_base_grid(2, 12)
        conn = make_connection(grid, 1)
        s = Section(2, np.ones(grid.shape, complex), conn)
        conn2, s2 = gauge_transform(conn, s, 0.7)
        for a in range(2):
            assert np.allclose(conn2.link_angle[a], conn.link_angle[a], atol=1e-15)
        assert np.allclose(np.abs(s2.values), 1.0)
        assert np.allclose(s2.values, np.exp(-1j * 2 * 0.7))

    def test_unitary_on_sections(self, rng):
        grid = make_base_grid(2, 12, 0.2)
        conn = make_connection(grid, 1)
        s = Section(1, rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape), conn)
        _, s2 = gauge_transform(conn, s, {"kind": "cosine", "amplitude": 0.3, "wavevector": [0, 1]})
        assert abs(s.norm() - s2.norm()) < 1e-14

    def test_flux_matrix_unchanged(self, rng):
        grid = make_base_grid(2, 12)
        conn = make_connection(grid, 2)
        s = Section(1, np.ones(grid.shape, complex), conn)
        conn2, _ = gauge_transform(conn, s, rng.normal(size=grid.shape))
        assert np.array_equal(conn2.measured_flux(), conn.measured_flux())

    def test_spectrum_invariant(self, rng):
        # the reassembled operator is exactly unitarily equivalent
        grid = make_base_grid(2, 16, {"kind": "random_fourier", "amplitude": 0.2, "seed": 5})
        conn = make_connection(grid, 1, {"kind": "random_fourier_form", "amplitude": 0.3, "seed": 9})
        op = assemble_forms(grid, conn, 2)
        eigs = lowest_eigenpairs(op, 5)
        s = Section(2, np.ones(grid.shape, complex), conn)
        conn2, _ = gauge_transform(conn, s, rng.normal(size=grid.shape))
        eigs2 = lowest_eigenpairs(assemble_forms(grid, conn2, 2), 5)
        for a, b in zip(eigs, eigs2):
            assert abs(a.lam - b.lam) <= 1e-10 * (1 + abs(a.lam))

    def test_exact_gradient_edges(self, rng):
        grid = make_base_grid(2, 8)
        chi = rng.normal(size=grid.shape)
        d = gradient_edge_integrals(grid, chi)
        assert np.allclose(d[0], np.roll(chi, -1, axis=0) - chi)
        # discrete gradients are exactly curl-free plaquette by plaquette
        raw = d[0] + np.roll(d[1], -1, axis=0) - np.roll(d[0], -1, axis=1) - d[1]
        assert np.max(np.abs(raw)) < 1e-13
