import math

import numpy as np
import pytest

from holofading import (
    BoundarySingularity,
    OutOfDisk,
    SpectralFactor,
    isotropic_factor_2d,
    isotropic_factor_3d,
    plane_wave_spectrum,
    shaping_response,
)
from holofading.spectrum import line_shaping_gain, shaping_gains
from holofading.variances import table_2d

KAPPA = 2.0 * math.pi


class TestIsotropicFactors:
    def test_3d_at_unit_wavelength(self):
        assert isotropic_factor_3d(KAPPA) == pytest.approx(math.sqrt(KAPPA), rel=1e-15)

    def test_3d_at_unit_kappa(self):
        assert isotropic_factor_3d(1.0) == pytest.approx(2 * math.pi, rel=1e-15)

    @pytest.mark.parametrize("kappa", [0.3, 1.0, KAPPA, 17.2])
    def test_3d_normalization_identity(self, kappa):
        a = isotropic_factor_3d(kappa)
        assert a * a * kappa / (4 * math.pi**2) == pytest.approx(1.0, rel=1e-14)

    def test_3d_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            isotropic_factor_3d(0.0)

    def test_2d_constant(self):
        assert isotropic_factor_2d() == pytest.approx(3.5449077018, rel=1e-9)
        assert isotropic_factor_2d(5.0) == isotropic_factor_2d(0.1)

    def test_2d_squared(self):
        assert isotropic_factor_2d() ** 2 == pytest.approx(4 * math.pi, rel=1e-15)

    def test_ratio_at_kappa_pi(self):
        # 2*sqrt(pi) / (2*pi/sqrt(pi)) = 1
        assert isotropic_factor_2d(math.pi) / isotropic_factor_3d(math.pi) == pytest.approx(1.0, rel=1e-14)


class TestPlaneWaveSpectrum:
    def test_isotropic_broadside(self):
        f = SpectralFactor.isotropic_3d(KAPPA)
        sp, sm = plane_wave_spectrum(f, (0.0, 0.0), KAPPA)
        assert sp == pytest.approx(math.pi / KAPPA**2, rel=1e-13)
        assert sm == sp

    def test_matches_isotropic_closed_form_inside(self):
        f = SpectralFactor.isotropic_3d(KAPPA)
        for r in (0.1, 0.5, 0.9):
            kx = r * KAPPA
            g = math.sqrt(KAPPA**2 - kx**2)
            sp, _ = plane_wave_spectrum(f, (kx, 0.0), KAPPA)
            assert sp == pytest.approx((math.pi / KAPPA) / g, rel=1e-13)

    def test_boundary_raises(self):
        f = SpectralFactor.isotropic_3d(KAPPA)
        with pytest.raises(BoundarySingularity):
            plane_wave_spectrum(f, (KAPPA * (1 - 1e-20), 0.0), KAPPA)

    def test_outside_raises(self):
        f = SpectralFactor.isotropic_3d(KAPPA)
        with pytest.raises(OutOfDisk):
            plane_wave_spectrum(f, (1.5 * KAPPA, 0.0), KAPPA)

    def test_constant_tabulated_factor(self, tmp_path):
        c = 2.5
        path = tmp_path / "const.csv"
        _write_polar_csv(path, lambda r, p: c, lambda r, p: c)
        f = SpectralFactor.from_csv(path, KAPPA)
        kx = 0.3 * KAPPA
        g = math.sqrt(KAPPA**2 - kx**2)
        sp, sm = plane_wave_spectrum(f, (kx, 0.0), KAPPA)
        assert sp == pytest.approx(c * c / (4 * math.pi * g), rel=1e-12)
        assert sm == pytest.approx(sp, rel=1e-12)

    def test_nonnegative_everywhere_defined(self):
        f = SpectralFactor.isotropic_3d(KAPPA)
        rng = np.random.default_rng(1)
        for _ in range(100):
            r = 0.999 * KAPPA * math.sqrt(rng.random())
            phi = 2 * math.pi * rng.random()
            sp, sm = plane_wave_spectrum(f, (r * math.cos(phi), r * math.sin(phi)), KAPPA)
            assert sp >= 0.0 and sm >= 0.0


class TestShapingResponse:
    def test_isotropic_is_identity(self):
        f = SpectralFactor.isotropic_3d(KAPPA)
        rng = np.random.default_rng(0)
        for _ in range(64):
            r = KAPPA * math.sqrt(rng.random())
            phi = 2 * math.pi * rng.random()
            gp, gm = shaping_response(f, (r * math.cos(phi), r * math.sin(phi)), KAPPA)
            assert gp == pytest.approx(1.0, abs=1e-12)
            assert gm == pytest.approx(1.0, abs=1e-12)

    def test_double_weight_doubles_gain(self):
        a = 4 * math.pi / math.sqrt(KAPPA)
        f = SpectralFactor.from_callables(lambda kx, ky: np.full(np.shape(kx), a), kappa=KAPPA)
        gp, gm = shaping_response(f, (0.1, 0.2), KAPPA)
        assert gp == pytest.approx(2.0, rel=1e-13)
        assert gm == pytest.approx(2.0, rel=1e-13)

    def test_one_sided_scattering(self):
        f = SpectralFactor.from_callables(
            lambda kx, ky: np.where(kx < 0, 0.0, isotropic_factor_3d(KAPPA)), kappa=KAPPA
        )
        gp, _ = shaping_response(f, (-0.5, 0.0), KAPPA)
        assert gp == 0.0
        gp, _ = shaping_response(f, (0.5, 0.0), KAPPA)
        assert gp == pytest.approx(1.0, rel=1e-13)

    def test_outside_raises(self):
        f = SpectralFactor.isotropic_3d(KAPPA)
        with pytest.raises(OutOfDisk):
            shaping_response(f, (2 * KAPPA, 0.0), KAPPA)

    def test_vectorized_gains_clamp_rim_points(self):
        f = SpectralFactor.isotropic_3d(KAPPA)
        gp, gm = shaping_gains(f, np.array([0.0, 1.01 * KAPPA]), np.array([0.0, 0.0]), KAPPA)
        assert np.allclose(gp, 1.0, atol=1e-12)
        assert np.allclose(gm, 1.0, atol=1e-12)

    def test_line_gain_identity_for_isotropic(self):
        for f in (SpectralFactor.isotropic_2d(), SpectralFactor.isotropic_3d()):
            assert np.all(line_shaping_gain(f, np.linspace(-KAPPA, KAPPA, 9), KAPPA) == 1.0)

    def test_line_gain_constant_factor(self):
        c = 2.0 * isotropic_factor_2d()
        f = SpectralFactor.from_callables(lambda kx, ky: np.full(np.shape(kx), c))
        assert np.allclose(line_shaping_gain(f, np.array([0.0, 1.0]), KAPPA), 2.0)


class TestIsotropicNormalization:
    def test_disk_integral_is_unit_power(self):
        # (1/(2 pi)^2) * integral of (S+ + S-) over the disk equals the
        # total cell mass of the quadrature table, which must be 1.
        table = table_2d(4.0, 4.0, method="quadrature", tol=1e-10)
        assert table.total_power() == pytest.approx(1.0, abs=1e-6)


class TestTabulatedFactors:
    def test_bilinear_interpolation_matches_smooth_profile(self, tmp_path):
        prof = lambda r, p: 1.0 + 0.5 * r  # linear in radius: bilinear is exact
        path = tmp_path / "smooth.csv"
        _write_polar_csv(path, prof, prof, nr=9, nphi=8)
        f = SpectralFactor.from_csv(path, KAPPA)
        ap, am = f.amplitudes(np.array([0.25 * KAPPA]), np.array([0.0]))
        assert ap[0] == pytest.approx(1.125, rel=1e-12)

    def test_rejects_nonfinite(self, tmp_path):
        path = tmp_path / "bad.csv"
        _write_polar_csv(path, lambda r, p: math.inf if r > 0.9 else 1.0, lambda r, p: 1.0)
        with pytest.raises(ValueError, match="unbounded"):
            SpectralFactor.from_csv(path, KAPPA)

    def test_rejects_negative(self, tmp_path):
        path = tmp_path / "neg.csv"
        _write_polar_csv(path, lambda r, p: -1.0, lambda r, p: 1.0)
        with pytest.raises(ValueError, match="negative"):
            SpectralFactor.from_csv(path, KAPPA)

    def test_rejects_partial_grid(self, tmp_path):
        path = tmp_path / "ragged.csv"
        with open(path, "w") as fh:
            fh.write("k_r_over_kappa,k_phi_rad,a_plus,a_minus\n")
            fh.write("0.0,0.0,1.0,1.0\n1.0,0.0,1.0,1.0\n1.0,1.0,1.0,1.0\n")
        with pytest.raises(ValueError, match="full polar grid"):
            SpectralFactor.from_csv(path, KAPPA)

    def test_rejects_missing_header(self, tmp_path):
        path = tmp_path / "nohdr.csv"
        with open(path, "w") as fh:
            fh.write("r,phi,a,b\n0,0,1,1\n")
        with pytest.raises(ValueError, match="header"):
            SpectralFactor.from_csv(path, KAPPA)


def _write_polar_csv(path, fplus, fminus, nr=5, nphi=6):
    with open(path, "w") as fh:
        fh.write("k_r_over_kappa,k_phi_rad,a_plus,a_minus\n")
        for i in range(nr):
            r = i / (nr - 1)
            for j in range(nphi):
                p = 2 * math.pi * j / nphi
                fh.write(f"{r},{p},{fplus(r, p)},{fminus(r, p)}\n")
