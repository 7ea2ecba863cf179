import numpy as np
import pytest

from nodallab import (
    Section,
    assemble_forms,
    covering_survey,
    fiber_zero_count,
    lift,
    lowest_eigenpairs,
    make_base_grid,
    make_connection,
    nodal_domains,
    nodal_set_components,
    regularity_margin,
    section_zero_winding,
)
from nodallab.nodal import auto_n_theta


class TestLift:
    def test_auto_n_theta_rule(self):
        assert auto_n_theta(16, 1) == 16
        assert auto_n_theta(16, 2) == 16
        assert auto_n_theta(16, 3) == 32
        assert auto_n_theta(8, 2) == 16
        assert auto_n_theta(48, 3) == 48

    def test_product_lift_is_cos_theta(self, flat16):
        grid, conn = flat16
        s = Section(1, np.ones(grid.shape, complex), conn)
        fld = lift(s, 8)
        expected = np.cos(fld.thetas)
        assert np.allclose(fld.values, expected[None, None, :], atol=1e-14)

    def test_m0_constant_along_fibers(self, rng):
        grid = make_base_grid(2, 12)
        conn = make_connection(grid, 1)
        s = Section(0, rng.normal(size=grid.shape) + 0j, conn)
        fld = lift(s, 12)
        assert np.max(np.abs(fld.values - fld.values[..., :1])) < 1e-15

    def test_fiberwise_identity(self, generic24_eigs):
        _, eigs = generic24_eigs
        fld = lift(eigs[0].section)
        assert fld.check_against_section(eigs[0].section) < 1e-14

    def test_twist_shift_integers(self):
        grid = make_base_grid(2, 16)
        conn = make_connection(grid, 2)
        fld_n = 32
        shifts = conn.fiber_shift(0, fld_n)
        # crossing the x1 wrap at x2 = j/n shifts by (n_theta/n) * c * j
        expected = (fld_n // 16) * 2 * np.round(grid.coords[1] * 16).astype(int)
        assert np.array_equal(shifts, expected)

    def test_incommensurate_n_theta_rejected(self):
        grid = make_base_grid(2, 16)
        conn = make_connection(grid, 1)
        s = Section(1, np.ones(grid.shape, complex), conn)
        with pytest.raises(ValueError, match="multiple of n"):
            lift(s, 12)

    def test_wrap_continuity(self, generic24_eigs):
        # lifted eigenfunction values join smoothly across the twisted wrap
        _, eigs = generic24_eigs
        fld = lift(eigs[0].section)
        v = fld.values
        w = fld.shifted(v, 0, 1)
        wrap_jump = np.max(np.abs((w - v)[fld.grid.n - 1]))
        interior_jump = np.max(np.abs((w - v)[: fld.grid.n - 1]))
        assert wrap_jump <= 2 * interior_jump


class TestFiberZeros:
    def test_cos_2theta_has_four(self):
        assert fiber_zero_count(1.0, 0.0, 2, 1e-9) == 4

    def test_diagonal_m1_roots(self):
        # cos t + sin t vanishes at 3 pi / 4 and 7 pi / 4
        assert fiber_zero_count(1.0, 1.0, 1, 1e-9) == 2
        psi = np.arctan2(1.0, 1.0)
        roots = np.mod((psi + np.pi / 2 + np.arange(2) * np.pi), 2 * np.pi)
        assert np.allclose(np.sort(roots), [3 * np.pi / 4, 7 * np.pi / 4])

    def test_section_zero_undefined(self):
        assert fiber_zero_count(0.0, 0.0, 3, 1e-9) is None

    def test_m0_rejected(self):
        with pytest.raises(ValueError, match="m != 0"):
            fiber_zero_count(1.0, 0.0, 0, 1e-9)

    @pytest.mark.parametrize("m", [-3, -1, 1, 2, 5])
    def test_always_2m_zeros(self, m, rng):
        for _ in range(50):
            a, b = rng.normal(size=2)
            assert fiber_zero_count(a, b, m, 1e-12) == 2 * abs(m)


class TestCounts:
    def test_trivial_bundle_control(self, flat16):
        # product field cos(theta): two domains, two nodal-set components
        grid, conn = flat16
        s = Section(1, np.ones(grid.shape, complex), conn)
        fld = lift(s, 16)
        assert nodal_domains(fld) == 2
        assert nodal_set_components(fld) == 2
        assert abs(regularity_margin(fld) - 1.0) < 0.15

    def test_two_domain_law_generic(self, generic24_eigs):
        _, eigs = generic24_eigs
        fld = lift(eigs[0].section)
        assert nodal_domains(fld) == 2
        assert nodal_set_components(fld) == 1
        assert regularity_margin(fld) > 0.1

    def test_m0_pullback_domains(self):
        grid = make_base_grid(2, 16, {"kind": "random_fourier", "amplitude": 0.3, "seed": 12})
        conn = make_connection(grid, 0)
        op = assemble_forms(grid, conn, 0)
        eigs = lowest_eigenpairs(op, 3)
        excited = eigs[1]
        base = np.real(excited.section.values)
        base_domains = _base_domains(base)
        fld = lift(excited.section, 8)
        assert nodal_domains(fld) == base_domains
        assert base_domains >= 2

    def test_all_zero_field_rejected(self, flat16):
        grid, conn = flat16
        s = Section(1, np.zeros(grid.shape, complex), conn)
        fld = lift(s, 8)
        with pytest.raises(ValueError, match="all-zero"):
            nodal_domains(fld)


class TestWinding:
    def test_nonvanishing_trivial_section(self, flat16):
        grid, conn = flat16
        s = Section(1, np.full(grid.shape, 1.0 + 0.2j), conn)
        assert section_zero_winding(s) == (0, 0)

    @pytest.mark.parametrize("m,c", [(1, 1), (2, 1), (1, 2)])
    def test_total_winding_equals_degree(self, m, c):
        # n = 32 resolves the m*c vortex cores (phase step < pi per edge)
        grid = make_base_grid(2, 32, {"kind": "random_fourier", "amplitude": 0.15, "seed": 3})
        conn = make_connection(grid, c, {"kind": "random_fourier_form", "amplitude": 0.3, "seed": 7})
        op = assemble_forms(grid, conn, m)
        eigs = lowest_eigenpairs(op, 2)
        zeros, total = section_zero_winding(eigs[0].section)
        assert total == m * c
        assert zeros >= 1

    def test_corner_zero_rejected(self, flat16):
        grid, conn = flat16
        values = np.ones(grid.shape, complex)
        values[3, 4] = 0.0
        s = Section(1, values, conn)
        with pytest.raises(ValueError, match="vanishes"):
            section_zero_winding(s)

    def test_d3_rejected(self):
        grid = make_base_grid(3, 8)
        conn = make_connection(grid, np.zeros((3, 3), int))
        s = Section(1, np.ones(grid.shape, complex), conn)
        with pytest.raises(ValueError, match="2-dimensional"):
            section_zero_winding(s)


class TestCoveringSurvey:
    def test_everywhere_2m(self, generic24_eigs):
        _, eigs = generic24_eigs
        survey = covering_survey(eigs[0].section, 500, seed=1)
        defined = survey.sample_count - survey.undefined
        assert survey.histogram.get(2, 0) == defined
        assert defined >= 495

    def test_large_tau_flags_undefined(self, generic24_eigs):
        _, eigs = generic24_eigs
        big = 0.5 * float(np.max(np.abs(eigs[0].section.values)))
        survey = covering_survey(eigs[0].section, 200, tau=big, seed=1)
        assert survey.undefined > 0

    def test_m3_histogram(self):
        grid = make_base_grid(2, 16, {"kind": "random_fourier", "amplitude": 0.15, "seed": 3})
        conn = make_connection(grid, 1, {"kind": "random_fourier_form", "amplitude": 0.3, "seed": 7})
        op = assemble_forms(grid, conn, 3)
        eigs = lowest_eigenpairs(op, 4)
        survey = covering_survey(eigs[0].section, 300, seed=2)
        assert set(survey.histogram) == {6}

    def test_m0_rejected(self, flat16):
        grid, conn = flat16
        s = Section(0, np.ones(grid.shape, complex), conn)
        with pytest.raises(ValueError, match="m != 0"):
            covering_survey(s, 10)


def _base_domains(values, threshold=1e-13):
    import scipy.sparse as sp
    from scipy.sparse.csgraph import connected_components

    pos = values > threshold
    neg = values < -threshold
    ids = np.arange(values.size).reshape(values.shape)
    rows, cols = [], []
    for axis in range(values.ndim):
        nb = np.roll(ids, -1, axis=axis)
        same = (pos & np.roll(pos, -1, axis=axis)) | (neg & np.roll(neg, -1, axis=axis))
        rows.append(ids[same])
        cols.append(nb[same])
    graph = sp.coo_matrix(
        (np.ones(sum(map(len, rows)), dtype=np.int8),
         (np.concatenate(rows), np.concatenate(cols))),
        shape=(values.size, values.size))
    _, labels = connected_components(graph, directed=False)
    count = 0
    if pos.any():
        count += len(np.unique(labels[pos.ravel()]))
    if neg.any():
        count += len(np.unique(labels[neg.ravel()]))
    return count
