"""Sampling of the aperture harmonic series: coefficient draws, spectral
shaping, migration between z-planes, and IFFT synthesis on uniform grids.

Pipeline per realization (rectangular aperture):

    draw H+(l, m), H-(l, m) ~ complex normal, variance sigma2_lm each
    -> multiply by the shaping gains of the spectral factor
    -> H(l, m; z) = H+ e^{+i gamma_lm z} + H- e^{-i gamma_lm z}
    -> h(x_n, y_j) = sum over (l, m) of H e^{i 2 pi (l n / Nx + m j / Ny)}

The final sum is a zero-embedded 2D inverse FFT *without* the 1/(Nx*Ny)
normalization (the variance table already carries the physical scaling);
lattice index l maps to FFT bin l mod Nx and the output is reindexed onto
n = -Nx/2 .. Nx/2 - 1 by a half-grid cyclic shift.

A line aperture uses the single-coefficient series h(x_n) = sum over l of
H_l e^{i 2 pi l n / N} with H_l of variance 2*sigma2_l, observed at
y = z = 0; migration off the line is not defined for it.

All lengths are in wavelength units (kappa = 2*pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GridTooCoarse, MigrationRange
from .rng import complex_standard_normals
from .spectrum import SpectralFactor, line_shaping_gain, shaping_gains
from .variances import (
    CoefficientVariances1D,
    CoefficientVariances2D,
    table_1d,
    table_2d,
)

KAPPA = 2.0 * math.pi

LINEAR = "linear"
PLANAR = "planar"
VOLUMETRIC = "volumetric"


@dataclass(frozen=True)
class Aperture:
    """Rectangular aperture geometry and its uniform sample grid.

    Side lengths and spacings are in wavelengths. ly = lz = 0 describes a
    line aperture, lz = 0 a planar one. Sample counts are N = ceil(L/d)
    per active axis and must be even; spacings must respect the lambda/2
    Nyquist limit of the 2*kappa-bandlimited field, and the grid must hold
    every harmonic of the aperture (N >= 2 * ceil(L/lambda)).
    """

    lx: float
    dx: float
    ly: float = 0.0
    dy: float = 0.0
    lz: float = 0.0
    dz: float = 0.0

    def __post_init__(self):
        if not (self.lx > 0.0 and self.dx > 0.0):
            raise ValueError("lx and dx must be positive")
        if self.ly < 0.0 or self.lz < 0.0:
            raise ValueError("side lengths must be nonnegative")
        if self.lz > 0.0 and self.ly == 0.0:
            raise ValueError("a volumetric aperture needs ly > 0")
        if self.lz > 0.0 and not self.lz < min(self.lx, self.ly):
            raise ValueError("lz must be smaller than min(lx, ly)")
        if self.lz > 0.0 and not self.dz > 0.0:
            raise ValueError("dz must be positive for a volumetric aperture")
        if self.ly > 0.0 and not self.dy > 0.0:
            raise ValueError("dy must be positive for a planar aperture")
        self._check_axis("x", self.lx, self.dx)
        if self.ly > 0.0:
            self._check_axis("y", self.ly, self.dy)

    @staticmethod
    def _check_axis(name, length, spacing):
        if spacing > 0.5 + 1e-12:
            raise GridTooCoarse(
                f"d{name} = {spacing:g} exceeds the Nyquist spacing of "
                "lambda/2 for the 2*kappa-bandlimited field"
            )
        n = math.ceil(length / spacing)
        if n % 2 != 0:
            raise GridTooCoarse(
                f"N{name} = {n} must be even for the symmetric sample range"
            )
        if n < 2 * math.ceil(length):
            raise GridTooCoarse(
                f"N{name} = {n} cannot represent every harmonic of an "
                f"{length:g}-wavelength side (needs >= {2 * math.ceil(length)})"
            )

    @property
    def kind(self) -> str:
        if self.ly == 0.0:
            return LINEAR
        return VOLUMETRIC if self.lz > 0.0 else PLANAR

    @property
    def nx(self) -> int:
        return math.ceil(self.lx / self.dx)

    @property
    def ny(self) -> int:
        return math.ceil(self.ly / self.dy) if self.ly > 0.0 else 1

    @property
    def nz(self) -> int:
        return math.ceil(self.lz / self.dz) if self.lz > 0.0 else 1

    def z_planes(self) -> tuple[float, ...]:
        if self.lz > 0.0:
            return tuple(k * self.dz for k in range(self.nz))
        return (0.0,)

    def grid_x(self) -> np.ndarray:
        return np.arange(-(self.nx // 2), self.nx // 2) * self.dx

    def grid_y(self) -> np.ndarray:
        if self.ly == 0.0:
            return np.zeros(1)
        return np.arange(-(self.ny // 2), self.ny // 2) * self.dy

    def grid_coords(self) -> np.ndarray:
        """All sample coordinates as an (N, 3) array, x fastest, then y, z."""
        xs = self.grid_x()
        ys = self.grid_y()
        zs = np.asarray(self.z_planes())
        zz, yy, xx = np.meshgrid(zs, ys, xs, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])


@dataclass(frozen=True)
class CoefficientDraw:
    """One realization's coefficient pair per harmonic of a rectangular
    aperture, reproducible from (seed, realization)."""

    table: CoefficientVariances2D
    seed: int
    realization: int
    h_plus: np.ndarray
    h_minus: np.ndarray


@dataclass(frozen=True)
class FieldRealization:
    """Complex fading samples on the aperture grid plus generation metadata.

    ``samples`` has shape (nz, ny, nx), x fastest.
    """

    samples: np.ndarray
    aperture: Aperture
    seed: int
    realization: int
    factor_kind: str
    z_planes: tuple[float, ...] = field(default=(0.0,))


def draw_coefficients(
    table: CoefficientVariances2D, seed: int, realization: int = 0
) -> CoefficientDraw:
    """Independent circularly-symmetric draws H+, H- with per-index variance
    sigma2_lm, from the counter-based stream of (seed, realization)."""
    n = len(table)
    z = complex_standard_normals(seed, realization, 2 * n).reshape(n, 2)
    scale = np.sqrt(table.sigma_sq)
    return CoefficientDraw(
        table=table,
        seed=seed,
        realization=realization,
        h_plus=scale * z[:, 0],
        h_minus=scale * z[:, 1],
    )


def lattice_wavenumbers(table: CoefficientVariances2D) -> tuple[np.ndarray, np.ndarray]:
    """Wavenumber points (2*pi*l/Lx, 2*pi*m/Ly) of the table's harmonics."""
    return KAPPA * table.ls / table.lx, KAPPA * table.ms / table.ly


def lattice_gammas(table: CoefficientVariances2D) -> np.ndarray:
    """Vertical wavenumbers of the table's harmonics.

    Rim cells can carry in-disk power while their integer lattice point sits
    just outside the disk; their gamma is clamped to 0 (grazing incidence),
    which leaves all same-plane second-order statistics untouched.
    """
    s = (table.ls / table.lx) ** 2 + (table.ms / table.ly) ** 2
    return KAPPA * np.sqrt(np.clip(1.0 - s, 0.0, None))


def shape_coefficients(draw: CoefficientDraw, factor: SpectralFactor) -> CoefficientDraw:
    """Multiply each coefficient pair by the factor's shaping gains at its
    harmonic's wavenumber point. Isotropic factors are the identity."""
    if factor.is_isotropic:
        return draw
    kx, ky = lattice_wavenumbers(draw.table)
    gp, gm = shaping_gains(factor, kx, ky, KAPPA)
    return CoefficientDraw(
        table=draw.table,
        seed=draw.seed,
        realization=draw.realization,
        h_plus=draw.h_plus * gp,
        h_minus=draw.h_minus * gm,
    )


def migrate(draw: CoefficientDraw, z: float) -> np.ndarray:
    """Per-harmonic coefficients on the plane at height z:
    H(z) = H+ e^{+i gamma z} + H- e^{-i gamma z}.

    Raises:
        MigrationRange: if |z| >= min(Lx, Ly).
    """
    if abs(z) >= min(draw.table.lx, draw.table.ly):
        raise MigrationRange(
            f"|z| = {abs(z):g} outside the migration range of a "
            f"{draw.table.lx:g} x {draw.table.ly:g} wavelength aperture"
        )
    phase = np.exp(1j * lattice_gammas(draw.table) * z)
    return draw.h_plus * phase + draw.h_minus * np.conj(phase)


def _bins(table, aperture) -> tuple[np.ndarray, np.ndarray]:
    nx, ny = aperture.nx, aperture.ny
    if np.max(np.abs(table.ls)) * 2 > nx or np.max(np.abs(table.ms)) * 2 > ny:
        raise GridTooCoarse(
            f"{nx} x {ny} grid cannot hold the harmonics of a "
            f"{table.lx:g} x {table.ly:g} wavelength aperture"
        )
    return table.ms % ny, table.ls % nx


def synthesize_plane(hz: np.ndarray, table: CoefficientVariances2D, aperture: Aperture) -> np.ndarray:
    """Evaluate the series on the (ny, nx) grid by zero-embedded inverse FFT
    without the 1/(Nx*Ny) factor, reindexed onto n = -N/2 .. N/2 - 1."""
    return _synthesize_batch(hz[np.newaxis, :], table, aperture)[0]


def _synthesize_batch(hz, table, aperture) -> np.ndarray:
    rows, cols = _bins(table, aperture)
    b = hz.shape[0]
    spec = np.zeros((b, aperture.ny, aperture.nx), dtype=complex)
    spec[:, rows, cols] = hz  # bins are distinct: grid holds one full period
    out = np.fft.ifft2(spec, axes=(-2, -1)) * (aperture.nx * aperture.ny)
    return np.fft.fftshift(out, axes=(-2, -1))


def synthesize_line(h: np.ndarray, table: CoefficientVariances1D, aperture: Aperture) -> np.ndarray:
    """1D counterpart of synthesize_plane."""
    nx = aperture.nx
    if np.max(np.abs(table.ls)) * 2 > nx:
        raise GridTooCoarse(
            f"{nx}-point grid cannot hold the harmonics of a "
            f"{table.lx:g}-wavelength line aperture"
        )
    if h.ndim == 1:
        h = h[np.newaxis, :]
    spec = np.zeros((h.shape[0], nx), dtype=complex)
    spec[:, table.ls % nx] = h
    out = np.fft.ifft(spec, axis=-1) * nx
    return np.fft.fftshift(out, axes=-1)


def draw_line_coefficients(
    table: CoefficientVariances1D,
    seed: int,
    realization: int = 0,
    factor: SpectralFactor | None = None,
) -> np.ndarray:
    """Single-coefficient draws H_l of variance 2*sigma2_l, optionally
    shaped by a spectral factor's line gain."""
    z = complex_standard_normals(seed, realization, len(table.ls))
    h = np.sqrt(2.0 * table.sigma_sq) * z
    if factor is not None and not factor.is_isotropic:
        h = h * line_shaping_gain(factor, KAPPA * table.ls / table.lx, KAPPA)
    return h


def default_factor(aperture: Aperture) -> SpectralFactor:
    """Isotropic factor in the normalization native to the aperture kind."""
    if aperture.kind == LINEAR:
        return SpectralFactor.isotropic_2d()
    return SpectralFactor.isotropic_3d()


def generate(
    aperture: Aperture,
    factor: SpectralFactor | None = None,
    seed: int = 0,
    z_planes: Sequence[float] | None = None,
    realization: int = 0,
    table=None,
) -> FieldRealization:
    """Full pipeline for one realization: draw, shape, migrate, synthesize.

    Args:
        aperture: geometry and grid.
        factor: spectral factor; defaults to isotropic.
        seed: RNG key; fixed seed gives bit-identical output.
        z_planes: planes to synthesize; defaults to the aperture's grid.
            A line aperture only supports z = 0.
        realization: realization counter within the seed's stream.
        table: precomputed variance table (built on demand otherwise).

    Returns:
        FieldRealization with samples of shape (len(z_planes), ny, nx).
    """
    if factor is None:
        factor = default_factor(aperture)
    zs = tuple(z_planes) if z_planes is not None else aperture.z_planes()

    if aperture.kind == LINEAR:
        if any(z != 0.0 for z in zs):
            raise MigrationRange("a line aperture supports z = 0 only")
        if table is None:
            table = table_1d(aperture.lx)
        h = draw_line_coefficients(table, seed, realization, factor)
        samples = synthesize_line(h, table, aperture)[np.newaxis, :, :]
        return FieldRealization(samples, aperture, seed, realization, factor.kind, zs)

    if table is None:
        table = table_2d(aperture.lx, aperture.ly)
    for z in zs:
        if abs(z) >= min(aperture.lx, aperture.ly):
            raise MigrationRange(f"z = {z:g} outside the migration range")
    draw = shape_coefficients(draw_coefficients(table, seed, realization), factor)
    planes = [synthesize_plane(migrate(draw, z), table, aperture) for z in zs]
    return FieldRealization(
        np.stack(planes), aperture, seed, realization, factor.kind, zs
    )


def generate_batch(
    aperture: Aperture,
    factor: SpectralFactor | None,
    seed: int,
    realizations: Sequence[int],
    z: float = 0.0,
    table=None,
) -> np.ndarray:
    """Fields of many realizations on one z-plane, shape (B, ny, nx).

    Bit-identical to stacking single ``generate`` calls; used by the Monte
    Carlo estimators where per-realization object overhead matters.
    """
    out = generate_batch_planes(aperture, factor, seed, realizations, (z,), table)
    return out[0]


def generate_batch_planes(
    aperture: Aperture,
    factor: SpectralFactor | None,
    seed: int,
    realizations: Sequence[int],
    z_planes: Sequence[float],
    table=None,
) -> list[np.ndarray]:
    """Like generate_batch for several z-planes sharing the same draws."""
    if factor is None:
        factor = default_factor(aperture)
    if aperture.kind == LINEAR:
        if any(z != 0.0 for z in z_planes):
            raise MigrationRange("a line aperture supports z = 0 only")
        if table is None:
            table = table_1d(aperture.lx)
        h = np.stack(
            [draw_line_coefficients(table, seed, r, factor) for r in realizations]
        )
        plane = synthesize_line(h, table, aperture)[:, np.newaxis, :]
        return [plane for _ in z_planes]

    if table is None:
        table = table_2d(aperture.lx, aperture.ly)
    for z in z_planes:
        if abs(z) >= min(aperture.lx, aperture.ly):
            raise MigrationRange(f"z = {z:g} outside the migration range")
    n = len(table)
    hp = np.empty((len(realizations), n), dtype=complex)
    hm = np.empty_like(hp)
    scale = np.sqrt(table.sigma_sq)
    for i, r in enumerate(realizations):
        zdraw = complex_standard_normals(seed, r, 2 * n).reshape(n, 2)
        hp[i] = scale * zdraw[:, 0]
        hm[i] = scale * zdraw[:, 1]
    if not factor.is_isotropic:
        kx, ky = lattice_wavenumbers(table)
        gp, gm = shaping_gains(factor, kx, ky, KAPPA)
        hp *= gp
        hm *= gm
    gam = lattice_gammas(table)
    out = []
    for z in z_planes:
        phase = np.exp(1j * gam * z)
        out.append(_synthesize_batch(hp * phase + hm * np.conj(phase), table, aperture))
    return out


def brute_force_plane(hz, table, aperture) -> np.ndarray:
    """Direct O(N * n_harmonics) evaluation of the series; FFT-path oracle."""
    ns = np.arange(-(aperture.nx // 2), aperture.nx // 2)
    js = np.arange(-(aperture.ny // 2), aperture.ny // 2)
    ex = np.exp(2j * np.pi * np.outer(ns, table.ls) / aperture.nx)  # (nx, n)
    ey = np.exp(2j * np.pi * np.outer(js, table.ms) / aperture.ny)  # (ny, n)
    return np.einsum("jk,nk,k->jn", ey, ex, hz)


def lattice_acf_1d(table: CoefficientVariances1D, lags: np.ndarray) -> np.ndarray:
    """Exact series autocorrelation c_N(r) = sum 2*sigma2_l e^{i2pi l r/Lx}
    of the line generator at the given lags (wavelength units)."""
    lags = np.asarray(lags, dtype=float)
    ph = np.exp(2j * np.pi * np.outer(lags, table.ls) / table.lx)
    return ph @ (2.0 * table.sigma_sq)


def lattice_acf_2d(
    table: CoefficientVariances2D, lags_x: np.ndarray, lags_y: np.ndarray
) -> np.ndarray:
    """Exact series autocorrelation of the rectangular generator on the
    outer grid of x/y lags (wavelength units); shape (len(x), len(y))."""
    lags_x = np.asarray(lags_x, dtype=float)
    lags_y = np.asarray(lags_y, dtype=float)
    ex = np.exp(2j * np.pi * np.outer(lags_x, table.ls) / table.lx)
    ey = np.exp(2j * np.pi * np.outer(lags_y, table.ms) / table.ly)
    return np.einsum("xk,yk,k->xy", ex, ey, 2.0 * table.sigma_sq)
