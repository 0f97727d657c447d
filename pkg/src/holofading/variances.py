"""Per-harmonic variances of the aperture series for isotropic scattering.

Line aperture of length Lx: harmonic l in {-Lx/lambda, ..., Lx/lambda - 1}
carries

    sigma2_l = (1/2pi) * (arcsin((l+1) * lambda/Lx) - arcsin(l * lambda/Lx))

for l >= 0, mirrored through sigma2_{-l-1} = sigma2_l. The sum of 2*sigma2
over the full index range telescopes to exactly 1.

Rectangular aperture (Lx, Ly): harmonic (l, m) carries the isotropic
spectral mass of its wavenumber cell

    sigma2_lm = (1/4pi) * integral over
                [l*lambda/Lx, (l+1)*lambda/Lx] x [m*lambda/Ly, (m+1)*lambda/Ly]
                of 1_{unit disk}(kx, ky) / sqrt(1 - kx^2 - ky^2)

i.e. the solid angle subtended on the unit hemisphere by the in-disk part
of the cell, over 4pi. Negative indices mirror through the same reflection
as in 1D: the cell of (-l-1, m) is the image of the cell of (l, m) across
the ky axis.

Two independent routes compute the cell mass:

* ``variance_2d_quadrature``: adaptive quadrature in polar coordinates.
  The substitution k_r = sin(u) removes the boundary singularity and makes
  the radial integral elementary; the remaining angular integral is
  adaptive with breakpoints wherever the active radial bound changes.
  This route is the authoritative oracle.
* ``variance_2d_closed_form``: exact antiderivative. The corner mass
  V(a, b) over [0, a] x [0, b] intersected with the disk has a closed form
  (see ``_corner_mass``), and a cell is an inclusion-exclusion of four
  corners. Accepted only on agreement with the quadrature oracle.

The table index set is the cell-coverage set: all (l, m) in
{-ceil(Lx/lambda) .. ceil(Lx/lambda)-1} x {same in y} whose mirrored cell
corner lies strictly inside the unit disk. This is the 2D analog of the 1D
index range above; the covered cells tile the disk exactly, so the table's
total power 1 is preserved at every aperture size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import IndexOutOfBand

DEFAULT_QUAD_TOL = 1e-10


def fold_index(i: int) -> int:
    """Mirror a signed cell index into the first quadrant: -l-1 <-> l."""
    return i if i >= 0 else -i - 1


# ---------------------------------------------------------------------------
# line aperture
# ---------------------------------------------------------------------------

def _band_1d(lx: float, lam: float) -> int:
    n = lx / lam
    n_int = round(n)
    if abs(n - n_int) > 1e-9 or n_int < 1:
        raise ValueError(
            f"Lx/lambda must be a positive integer for the line series, got {n:g}"
        )
    return n_int


def variance_1d(l: int, lx: float, lam: float = 1.0) -> float:
    """Variance sigma2_l of line harmonic l (arcsin difference of its cell).

    Args:
        l: harmonic index in {-Lx/lambda, ..., Lx/lambda - 1}.
        lx: aperture length; lx/lam must be a positive integer.
        lam: wavelength.

    Raises:
        IndexOutOfBand: l outside the index range.
        ValueError: non-integer lx/lam.
    """
    n = _band_1d(lx, lam)
    if not -n <= l <= n - 1:
        raise IndexOutOfBand(f"l = {l} outside {{-{n}, ..., {n - 1}}}")
    lf = fold_index(l)
    return (math.asin((lf + 1) / n) - math.asin(lf / n)) / (2.0 * math.pi)


@dataclass(frozen=True)
class CoefficientVariances1D:
    """Variance table of the line series; one coefficient per harmonic,
    each drawn with variance 2*sigma2_l."""

    lx: float
    ls: np.ndarray        # full index range, ascending
    sigma_sq: np.ndarray  # sigma2_l per index

    def total_power(self) -> float:
        return float(np.sum(2.0 * self.sigma_sq))


def table_1d(lx: float, lam: float = 1.0) -> CoefficientVariances1D:
    n = _band_1d(lx, lam)
    ls = np.arange(-n, n)
    sig = np.array([variance_1d(int(l), lx, lam) for l in ls])
    return CoefficientVariances1D(lx=lx / lam, ls=ls, sigma_sq=sig)


# ---------------------------------------------------------------------------
# rectangular aperture: cell geometry
# ---------------------------------------------------------------------------

def _cell_bounds(l: int, m: int, ax: float, ay: float):
    """First-quadrant cell of (l, m) in disk units (kx/kappa, ky/kappa)."""
    lf, mf = fold_index(l), fold_index(m)
    return lf / ax, (lf + 1) / ax, mf / ay, (mf + 1) / ay


def _in_band_2d(l: int, m: int, ax: float, ay: float) -> bool:
    """Admissible indices: lattice-ellipse members or covered cells."""
    on_ellipse = (l / ax) ** 2 + (m / ay) ** 2 <= 1.0 + 1e-12
    x1, _, y1, _ = _cell_bounds(l, m, ax, ay)
    covered = x1 * x1 + y1 * y1 < 1.0
    return on_ellipse or covered


def coefficient_indices(lx: float, ly: float, lam: float = 1.0) -> np.ndarray:
    """Index set of the rectangular-aperture table: all (l, m) whose cell
    overlaps the unit disk with positive measure.

    Returns an (n, 2) int array in deterministic row-major order (m outer,
    l inner, ascending).
    """
    ax, ay = lx / lam, ly / lam
    nx, ny = math.ceil(ax), math.ceil(ay)
    out = []
    for m in range(-ny, ny):
        for l in range(-nx, nx):
            x1, _, y1, _ = _cell_bounds(l, m, ax, ay)
            if x1 * x1 + y1 * y1 < 1.0:
                out.append((l, m))
    return np.array(out, dtype=int)


# ---------------------------------------------------------------------------
# quadrature oracle
# ---------------------------------------------------------------------------

def _angular_mass(phi, x1, x2, y1, y2):
    """sqrt(1 - r_lo^2) - sqrt(1 - r_hi^2): the radial integral of the cell
    column at azimuth phi after the k_r = sin(u) substitution."""
    c, s = math.cos(phi), math.sin(phi)
    r_lo = 0.0
    if x1 > 0.0:
        r_lo = x1 / c
    if y1 > 0.0:
        r_lo = max(r_lo, y1 / s)
    r_hi = 1.0
    if c > 0.0:
        r_hi = min(r_hi, x2 / c)
    if s > 0.0:
        r_hi = min(r_hi, y2 / s)
    if r_lo >= 1.0 or r_hi <= r_lo:
        return 0.0
    return math.sqrt(1.0 - r_lo * r_lo) - math.sqrt(max(0.0, 1.0 - r_hi * r_hi))


def _cell_mass_quadrature(x1, x2, y1, y2, tol):
    """Disk-clipped cell mass by adaptive angular quadrature.

    The angular integrand is piecewise smooth except for square-root
    behavior where a radial bound crosses the rim; every such crossing is a
    breakpoint, and each smooth piece is integrated under the substitution
    phi = endpoint +/- u^2, which flattens the sqrt endpoints.
    """
    if x1 * x1 + y1 * y1 >= 1.0:
        return 0.0
    phi_lo = math.atan2(y1, x2)
    phi_hi = math.atan2(y2, x1)
    # Breakpoints where the active radial bound changes or meets the rim.
    candidates = [math.atan2(y1, x1), math.atan2(y2, x2)]
    for v in (x1, x2):
        if 0.0 < v < 1.0:
            candidates.append(math.acos(v))
    for v in (y1, y2):
        if 0.0 < v < 1.0:
            candidates.append(math.asin(v))
    points = sorted({phi_lo, phi_hi, *[p for p in candidates if phi_lo < p < phi_hi]})
    total = 0.0
    eps = tol * 4.0 * math.pi / (2.0 * max(len(points) - 1, 1))
    for a, b in zip(points[:-1], points[1:]):
        if b - a < 1e-15:
            continue
        mid = 0.5 * (a + b)
        for lo, sign in ((a, 1.0), (b, -1.0)):
            half = math.sqrt(abs(mid - lo))

            def g(u, lo=lo, sign=sign):
                return 2.0 * u * _angular_mass(lo + sign * u * u, x1, x2, y1, y2)

            val, _ = integrate.quad(g, 0.0, half, epsabs=eps, epsrel=1e-13, limit=200)
            total += val
    return total


def variance_2d_quadrature(
    l: int, m: int, lx: float, ly: float, lam: float = 1.0, tol: float = DEFAULT_QUAD_TOL
) -> float:
    """Variance sigma2_lm by the polar quadrature oracle.

    Args:
        l, m: harmonic index.
        lx, ly: aperture side lengths.
        lam: wavelength.
        tol: absolute tolerance on the returned variance.

    Raises:
        IndexOutOfBand: index outside the admissible band.
    """
    ax, ay = lx / lam, ly / lam
    if not _in_band_2d(l, m, ax, ay):
        raise IndexOutOfBand(f"index ({l}, {m}) outside the admissible band")
    x1, x2, y1, y2 = _cell_bounds(l, m, ax, ay)
    return _cell_mass_quadrature(x1, x2, y1, y2, tol) / (4.0 * math.pi)


# ---------------------------------------------------------------------------
# closed form
# ---------------------------------------------------------------------------

def _corner_mass(a: float, b: float) -> float:
    """Exact mass of [0, a] x [0, b] intersected with the unit disk.

    When the corner (a, b) lies on or outside the rim the region is a
    spherical lune of mass (pi/2)(a + b - 1) exactly. Inside, the closed
    form is written through the complementary small arguments sqrt(s) with
    s = 1 - a^2 - b^2, so nothing is evaluated near a branch point and the
    result stays accurate for corners arbitrarily close to the rim.
    """
    a = min(max(a, 0.0), 1.0)
    b = min(max(b, 0.0), 1.0)
    if a == 0.0 or b == 0.0:
        return 0.0
    base = 0.5 * math.pi * (a + b - 1.0)
    s = 1.0 - a * a - b * b
    if s <= 0.0:
        return base
    t = math.sqrt(s)
    bracket = (
        math.atan2(t, a * b)
        - a * math.asin(min(1.0, t / math.sqrt(1.0 - a * a)))
        - b * math.asin(min(1.0, t / math.sqrt(1.0 - b * b)))
    )
    return base + bracket


def variance_2d_closed_form(l: int, m: int, lx: float, ly: float, lam: float = 1.0) -> float:
    """Variance sigma2_lm by the exact corner antiderivative.

    Must agree with ``variance_2d_quadrature`` to 1e-8 relative; that
    agreement is asserted by the test suite on full index sets.
    """
    ax, ay = lx / lam, ly / lam
    if not _in_band_2d(l, m, ax, ay):
        raise IndexOutOfBand(f"index ({l}, {m}) outside the admissible band")
    x1, x2, y1, y2 = _cell_bounds(l, m, ax, ay)
    mass = (
        _corner_mass(x2, y2)
        - _corner_mass(x1, y2)
        - _corner_mass(x2, y1)
        + _corner_mass(x1, y1)
    )
    return max(mass, 0.0) / (4.0 * math.pi)


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientVariances2D:
    """Variance table of the rectangular-aperture series.

    Each index carries two independent coefficient draws (up/downgoing),
    each of variance sigma2_lm.
    """

    lx: float
    ly: float
    ls: np.ndarray        # (n,) signed l indices
    ms: np.ndarray        # (n,) signed m indices
    sigma_sq: np.ndarray  # (n,) sigma2_lm

    def __len__(self) -> int:
        return len(self.ls)

    def total_power(self) -> float:
        return float(np.sum(2.0 * self.sigma_sq))


@lru_cache(maxsize=32)
def _table_2d_cached(lx, ly, lam, method, tol):
    idx = coefficient_indices(lx, ly, lam)
    ax, ay = lx / lam, ly / lam
    if method == "closed-form":
        compute = lambda l, m: variance_2d_closed_form(l, m, lx, ly, lam)
    elif method == "quadrature":
        compute = lambda l, m: variance_2d_quadrature(l, m, lx, ly, lam, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    # distinct first-quadrant cells only; mirrors share the value
    cache: dict[tuple[int, int], float] = {}
    sig = np.empty(len(idx))
    for i, (l, m) in enumerate(idx):
        key = (fold_index(int(l)), fold_index(int(m)))
        if key not in cache:
            cache[key] = compute(*key)
        sig[i] = cache[key]
    return CoefficientVariances2D(
        lx=ax, ly=ay, ls=idx[:, 0].copy(), ms=idx[:, 1].copy(), sigma_sq=sig
    )


def table_2d(
    lx: float,
    ly: float,
    lam: float = 1.0,
    method: str = "closed-form",
    tol: float = DEFAULT_QUAD_TOL,
) -> CoefficientVariances2D:
    """Build the full variance table of a rectangular aperture.

    Args:
        lx, ly: aperture side lengths.
        lam: wavelength.
        method: 'closed-form' (fast path) or 'quadrature' (oracle).
        tol: quadrature tolerance (ignored by the closed form).
    """
    return _table_2d_cached(float(lx), float(ly), float(lam), method, float(tol))


def total_power(table) -> float:
    """Sum of 2*sigma2 over the table's index set."""
    return table.total_power()
