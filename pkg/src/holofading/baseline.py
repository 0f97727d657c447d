"""Closed-form isotropic autocorrelations and the dense correlated-Gaussian
baseline sampler.

Isotropic scattering gives the classical autocorrelations between points at
distance r: sinc(2r/lambda) = sin(kappa r)/(kappa r) for fields in 3D space
and J0(2*pi*r/lambda) for fields observed on a line. The baseline sampler
draws correlated vectors h = C^{1/2} e with e ~ complex standard normal and
C the correlation matrix sampled from those closed forms; it exists to
cross-check the series generator at desk scale, not to scale.

J0 is evaluated locally: ascending power series for z <= 13 and the Hankel
large-argument expansion

    J0(z) ~ sqrt(2/(pi z)) * (cos(z - pi/4) P(z) + sin(z - pi/4) Q(z))
    P(z) = 1 - A2/z^2 + A4/z^4 - ...,  Q(z) = A1/z - A3/z^3 + ...
    Am = (1^2 * 3^2 * ... * (2m-1)^2) / (m! * 8^m)

beyond, truncated at twelve terms per sum. Absolute error is below 1e-10 on
[0, 200]; the test suite asserts this against quadrature of the integral
representation (1/pi) * int_0^pi cos(z sin t) dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import GridTooLarge, NotPSD
from .generator import Aperture
from .rng import STREAM_BASELINE, complex_standard_normals

_SERIES_SPLIT = 13.0
_SERIES_TERMS = 48
_HANKEL_TERMS = 12

# Am = prod_{j<=m} (2j-1)^2 / (m! 8^m)
_HANKEL_A = [1.0]
for _m in range(1, 2 * _HANKEL_TERMS + 1):
    _HANKEL_A.append(_HANKEL_A[-1] * (2 * _m - 1) ** 2 / (8.0 * _m))


def _j0_series(z: np.ndarray) -> np.ndarray:
    q = -0.25 * z * z
    term = np.ones_like(z)
    acc = np.ones_like(z)
    for k in range(1, _SERIES_TERMS + 1):
        term = term * q / (k * k)
        acc += term
    return acc


def _j0_hankel(z: np.ndarray) -> np.ndarray:
    inv2 = 1.0 / (z * z)
    p = np.zeros_like(z)
    q = np.zeros_like(z)
    for m in range(_HANKEL_TERMS - 1, -1, -1):
        p = _HANKEL_A[2 * m] - p * inv2
        q = _HANKEL_A[2 * m + 1] - q * inv2
    chi = z - 0.25 * math.pi
    return np.sqrt(2.0 / (math.pi * z)) * (np.cos(chi) * p + np.sin(chi) * q / z)


def bessel_j0(z):
    """Bessel function of the first kind, order zero (vectorized)."""
    z = np.abs(np.asarray(z, dtype=float))
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    small = z <= _SERIES_SPLIT
    if np.any(small):
        out[small] = _j0_series(z[small])
    if np.any(~small):
        out[~small] = _j0_hankel(z[~small])
    return float(out[0]) if scalar else out


def clarke_acf_3d(r, lam: float = 1.0):
    """sin(kappa r)/(kappa r) with the removable singularity giving exactly
    1 at r = 0; zero at every half-wavelength multiple."""
    return np.sinc(2.0 * np.asarray(r, dtype=float) / lam)


def clarke_acf_2d(r, lam: float = 1.0):
    """J0(2 pi r / lambda)."""
    return bessel_j0(2.0 * math.pi * np.asarray(r, dtype=float) / lam)


@dataclass(frozen=True)
class AcfClosedForm:
    """Closed-form isotropic autocorrelation, 'sinc-3d' or 'bessel-2d'."""

    kind: str
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sinc-3d", "bessel-2d"):
            raise ValueError(f"unknown autocorrelation kind {self.kind!r}")

    def __call__(self, r):
        if self.kind == "sinc-3d":
            return clarke_acf_3d(r, self.lam)
        return clarke_acf_2d(r, self.lam)


MAX_DENSE_POINTS = 8192


@dataclass(frozen=True)
class CorrelationMatrix:
    """Dense correlation matrix over grid-point pairs."""

    values: np.ndarray
    points: np.ndarray
    is_toeplitz: bool


def correlation_matrix(grid, acf: AcfClosedForm) -> CorrelationMatrix:
    """Entries c(r_nm) with r_nm the Euclidean distance of grid points n, m.

    Args:
        grid: Aperture (its sample grid is used) or an (N, d) point array.
        acf: closed-form autocorrelation.

    Raises:
        GridTooLarge: more than 8192 points (the dense baseline is
            desk-scale only).
    """
    if isinstance(grid, Aperture):
        points = grid.grid_coords()
        uniform_line = grid.kind == "linear"
    else:
        points = np.asarray(grid, dtype=float)
        if points.ndim == 1:
            points = points[:, np.newaxis]
        uniform_line = False
    n = len(points)
    if n > MAX_DENSE_POINTS:
        raise GridTooLarge(f"{n} points exceed the dense-baseline cap of {MAX_DENSE_POINTS}")
    if uniform_line:
        # uniform 1D grid: exactly Toeplitz from its first row
        lags = np.linalg.norm(points - points[0], axis=1)
        values = scipy.linalg.toeplitz(acf(lags))
        return CorrelationMatrix(values=values, points=points, is_toeplitz=True)
    diff = points[:, np.newaxis, :] - points[np.newaxis, :, :]
    values = acf(np.sqrt(np.sum(diff * diff, axis=-1)))
    return CorrelationMatrix(values=values, points=points, is_toeplitz=False)


PSD_REL_TOL = 1e-8


def kl_sample(c: CorrelationMatrix, seed: int, m: int) -> np.ndarray:
    """m correlated draws h = C^{1/2} e, e ~ complex standard normal.

    The square root is the symmetric eigendecomposition root; sinc/J0
    correlation matrices of dense grids are numerically rank-deficient, so
    Cholesky is not an option and small negative eigenvalues are clipped
    at zero.

    Returns:
        (m, N) complex array, deterministic from the seed.

    Raises:
        NotPSD: an eigenvalue below -1e-8 relative to the largest.
    """
    eigvals, eigvecs = np.linalg.eigh(c.values)
    top = float(eigvals[-1])
    if eigvals[0] < -PSD_REL_TOL * top:
        raise NotPSD(
            f"eigenvalue {eigvals[0]:g} below the PSD tolerance {-PSD_REL_TOL * top:g}"
        )
    root = (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.conj().T
    n = c.values.shape[0]
    draws = np.stack(
        [complex_standard_normals(seed, r, n, stream=STREAM_BASELINE) for r in range(m)]
    )
    return draws @ root.T
