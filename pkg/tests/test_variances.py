import math

import numpy as np
import pytest
from scipy import integrate

from holofading import (
    IndexOutOfBand,
    coefficient_indices,
    lattice_ellipse,
    table_1d,
    table_2d,
    variance_1d,
    variance_2d_closed_form,
    variance_2d_quadrature,
)
from holofading.variances import fold_index

pytestmark = pytest.mark.filterwarnings("ignore:aperture below 4 wavelengths")


class TestVariance1D:
    def test_single_wavelength_center(self):
        assert variance_1d(0, 1.0) == 0.25

    def test_mirror_symmetry(self):
        assert variance_1d(-1, 1.0) == variance_1d(0, 1.0) == 0.25
        for l in range(0, 16):
            assert variance_1d(-l - 1, 16.0) == variance_1d(l, 16.0)

    def test_value_against_quadrature(self):
        # independent oracle: direct quadrature of the singular band spectrum
        want, _ = integrate.quad(lambda k: 1.0 / math.sqrt(1 - k * k), 0.0, 1.0 / 16.0)
        got = variance_1d(0, 16.0)
        assert got == pytest.approx(want / (2 * math.pi), abs=1e-12)
        assert got == pytest.approx(9.954e-3, abs=5e-6)

    @pytest.mark.parametrize("l", [-17, 16, 100])
    def test_out_of_band(self, l):
        with pytest.raises(IndexOutOfBand):
            variance_1d(l, 16.0)

    def test_rejects_non_integer_length(self):
        with pytest.raises(ValueError):
            variance_1d(0, 16.5)

    @pytest.mark.parametrize("lx", [1.0, 4.0, 16.0])
    def test_total_power_telescopes_to_one(self, lx):
        assert abs(table_1d(lx).total_power() - 1.0) <= 1e-12

    def test_all_nonnegative(self):
        assert np.all(table_1d(16.0).sigma_sq >= 0.0)


class TestVariance2DQuadrature:
    def test_quarter_disk_cell(self):
        assert variance_2d_quadrature(0, 0, 1.0, 1.0) == pytest.approx(0.125, abs=1e-9)

    def test_cell_outside_disk(self):
        assert variance_2d_quadrature(1, 0, 1.0, 1.0) == 0.0

    def test_mirrored_quarter_disk(self):
        assert variance_2d_quadrature(-1, 0, 1.0, 1.0) == pytest.approx(0.125, abs=1e-9)

    def test_out_of_band(self):
        with pytest.raises(IndexOutOfBand):
            variance_2d_quadrature(3, 0, 1.0, 1.0)

    def test_quadrant_reflections(self):
        for l, m in [(0, 0), (3, 1), (7, 7), (15, 0)]:
            base = variance_2d_quadrature(l, m, 16.0, 16.0)
            assert variance_2d_quadrature(-l - 1, m, 16.0, 16.0) == base
            assert variance_2d_quadrature(l, -m - 1, 16.0, 16.0) == base

    def test_interior_cell_against_cartesian_quadrature(self):
        # independent route: plain 2D quadrature, valid away from the rim
        x1, x2, y1, y2 = 2 / 16, 3 / 16, 5 / 16, 6 / 16
        want, _ = integrate.dblquad(
            lambda y, x: 1.0 / math.sqrt(1 - x * x - y * y), x1, x2, y1, y2,
            epsabs=1e-12, epsrel=1e-12,
        )
        got = variance_2d_quadrature(2, 5, 16.0, 16.0)
        assert got == pytest.approx(want / (4 * math.pi), abs=1e-11)

    def test_tolerance_convergence(self):
        # halving the tolerance moves no value by more than the tolerance
        for l, m in [(15, 0), (11, 10), (0, 15), (14, 7)]:
            a = variance_2d_quadrature(l, m, 16.0, 16.0, tol=1e-10)
            b = variance_2d_quadrature(l, m, 16.0, 16.0, tol=5e-11)
            assert abs(a - b) <= 1e-10


class TestClosedFormAgreement:
    def test_quarter_disk_cell(self):
        assert variance_2d_closed_form(0, 0, 1.0, 1.0) == pytest.approx(0.125, rel=1e-12)

    @pytest.mark.parametrize("side", [4.0, 16.0])
    def test_matches_quadrature_everywhere(self, side):
        seen = set()
        indices = [(i.l, i.m) for i in lattice_ellipse(side, side)]
        indices += [tuple(r) for r in coefficient_indices(side, side)]
        for l, m in indices:
            key = (fold_index(l), fold_index(m))
            if key in seen:
                continue
            seen.add(key)
            q = variance_2d_quadrature(l, m, side, side, tol=1e-11)
            c = variance_2d_closed_form(l, m, side, side)
            assert c == pytest.approx(q, rel=1e-8, abs=1e-13), (l, m)

    def test_matches_on_rectangular_aperture(self):
        for l, m in [(0, 0), (6, 2), (-7, -2), (5, -4)]:
            q = variance_2d_quadrature(l, m, 8.0, 4.0, tol=1e-11)
            c = variance_2d_closed_form(l, m, 8.0, 4.0)
            assert c == pytest.approx(q, rel=1e-8, abs=1e-13)

    def test_non_integer_sides_allowed(self):
        got = variance_2d_closed_form(0, 0, 5.5, 3.25)
        want = variance_2d_quadrature(0, 0, 5.5, 3.25)
        assert got == pytest.approx(want, rel=1e-10)


class TestTables:
    def test_total_power_single_wavelength(self):
        # the four quarter-disk cells tile the disk
        table = table_2d(1.0, 1.0)
        assert len(table) == 4
        assert table.total_power() == pytest.approx(1.0, abs=1e-12)

    def test_total_power_cap_and_monotonicity(self):
        totals = [table_2d(s, s).total_power() for s in (2.0, 4.0, 8.0, 16.0)]
        for t in totals:
            assert t <= 1.0 + 1e-9
        assert all(b >= a - 1e-12 for a, b in zip(totals, totals[1:]))
        assert 0.95 < totals[-1] <= 1.0

    def test_all_nonnegative(self):
        assert np.all(table_2d(16.0, 16.0).sigma_sq >= 0.0)

    def test_index_set_bounds_and_order(self):
        idx = coefficient_indices(4.0, 2.0)
        assert idx[:, 0].min() >= -4 and idx[:, 0].max() <= 3
        assert idx[:, 1].min() >= -2 and idx[:, 1].max() <= 1
        keys = [(m, l) for l, m in idx]
        assert keys == sorted(keys)

    def test_index_set_matches_positive_mass(self):
        idx = {tuple(r) for r in coefficient_indices(4.0, 4.0)}
        for l in range(-5, 5):
            for m in range(-5, 5):
                lf, mf = fold_index(l), fold_index(m)
                inside = (lf / 4.0) ** 2 + (mf / 4.0) ** 2 < 1.0
                assert ((l, m) in idx) == inside

    def test_quadrature_table_matches_closed_table(self):
        a = table_2d(4.0, 4.0, method="closed-form")
        b = table_2d(4.0, 4.0, method="quadrature")
        assert np.array_equal(a.ls, b.ls)
        assert np.allclose(a.sigma_sq, b.sigma_sq, rtol=1e-8, atol=1e-13)
