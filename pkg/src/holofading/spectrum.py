"""Directional scattering weights and their wavenumber-domain power spectra.

A scattering environment is described by a pair of nonnegative directional
weights (a_plus, a_minus) on the disk of radius kappa, one per propagation
half-space. The associated per-half-space power density is

    S(kx, ky) = a(kx, ky)^2 / (4 * pi * gamma(kx, ky))

which is singular (but integrable) at the disk boundary. Isotropic
scattering corresponds to the constant weight 2*pi/sqrt(kappa) in 3D and
2*sqrt(pi) for a field observed on a line (both normalized to unit total
power), and any other environment is reachable from the isotropic one
through a memoryless wavenumber gain

    g(kx, ky) = sqrt(kappa) * a(kx, ky) / (2 * pi)

which equals 1 everywhere for the isotropic weight.
"""
from __future__ import annotations

import csv
import math

import numpy as np

from .errors import BoundarySingularity, OutOfDisk
from .wavenumber import DISK_REL_TOL, _unpack

ISOTROPIC_3D = "isotropic-3d"
ISOTROPIC_2D = "isotropic-2d"
TABULATED = "tabulated"
ANALYTIC = "analytic"

# Polar probe grid used to reject unbounded or negative factors at load time.
_PROBE_RADII = 64
_PROBE_ANGLES = 64

# gamma/kappa below this is "at the boundary" for point evaluation purposes.
BOUNDARY_GAMMA_TOL = 1e-9


def isotropic_factor_3d(kappa: float) -> float:
    """Constant directional weight of the unit-power isotropic 3D channel,
    2*pi/sqrt(kappa)."""
    if not kappa > 0.0:
        raise ValueError("kappa must be positive")
    return 2.0 * math.pi / math.sqrt(kappa)


def isotropic_factor_2d(kappa: float | None = None) -> float:
    """Constant directional weight of the unit-power isotropic channel
    observed on a line, 2*sqrt(pi) independent of kappa."""
    return 2.0 * math.sqrt(math.pi)


class SpectralFactor:
    """Pair of nonnegative directional weights on the wavenumber disk.

    Instances are immutable after construction and safe to share across
    threads. Use the classmethod constructors; ``kind`` is one of
    'isotropic-3d', 'isotropic-2d', 'tabulated', 'analytic'.
    """

    def __init__(self, kind, a_plus, a_minus, kappa):
        self.kind = kind
        self._a_plus = a_plus
        self._a_minus = a_minus
        self.kappa = float(kappa)
        self._probe()

    @classmethod
    def isotropic_3d(cls, kappa: float = 2.0 * math.pi) -> "SpectralFactor":
        a = isotropic_factor_3d(kappa)
        return cls(ISOTROPIC_3D, _const(a), _const(a), kappa)

    @classmethod
    def isotropic_2d(cls, kappa: float = 2.0 * math.pi) -> "SpectralFactor":
        a = isotropic_factor_2d(kappa)
        return cls(ISOTROPIC_2D, _const(a), _const(a), kappa)

    @classmethod
    def from_callables(cls, a_plus, a_minus=None, kappa: float = 2.0 * math.pi) -> "SpectralFactor":
        """Wrap vectorized callables a(kx, ky) -> weight (nonnegative)."""
        return cls(ANALYTIC, a_plus, a_minus if a_minus is not None else a_plus, kappa)

    @classmethod
    def from_csv(cls, path, kappa: float = 2.0 * math.pi) -> "SpectralFactor":
        """Load a tabulated factor from CSV.

        Required header: ``k_r_over_kappa, k_phi_rad, a_plus, a_minus``.
        Rows must form a full polar grid; the radial grid must span [0, 1].
        Values are bilinearly interpolated in (radius, azimuth) with the
        azimuth wrapping at 2*pi, so the disk boundary is a grid line.
        """
        radii, angles, table_p, table_m = _read_polar_csv(path)
        interp_p = _PolarInterpolator(radii, angles, table_p, kappa)
        interp_m = _PolarInterpolator(radii, angles, table_m, kappa)
        return cls(TABULATED, interp_p, interp_m, kappa)

    @property
    def is_isotropic(self) -> bool:
        return self.kind in (ISOTROPIC_3D, ISOTROPIC_2D)

    def amplitudes(self, kx, ky):
        """Evaluate (a_plus, a_minus) at the given points (vectorized)."""
        kx = np.asarray(kx, dtype=float)
        ky = np.asarray(ky, dtype=float)
        return self._a_plus(kx, ky), self._a_minus(kx, ky)

    def _probe(self):
        r = np.linspace(0.0, self.kappa, _PROBE_RADII)
        phi = np.linspace(0.0, 2.0 * math.pi, _PROBE_ANGLES, endpoint=False)
        kx = np.outer(r, np.cos(phi)).ravel()
        ky = np.outer(r, np.sin(phi)).ravel()
        for name, a in (("a_plus", self._a_plus), ("a_minus", self._a_minus)):
            with np.errstate(invalid="ignore", over="ignore"):
                vals = np.asarray(a(kx, ky), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"spectral factor {name} is unbounded on the disk")
            if np.any(vals < 0.0):
                raise ValueError(f"spectral factor {name} takes negative values")


def _const(value):
    def f(kx, ky):
        return np.full(np.broadcast(kx, ky).shape, value, dtype=float)

    return f


class _PolarInterpolator:
    """Bilinear interpolation on a (radius, azimuth) grid over the disk."""

    def __init__(self, radii, angles, table, kappa):
        self.radii = radii              # ascending, spanning [0, 1] (of kappa)
        self.angles = angles            # ascending in [0, 2*pi)
        self.table = table              # shape (len(radii), len(angles))
        self.kappa = kappa

    def __call__(self, kx, ky):
        kx = np.asarray(kx, dtype=float)
        ky = np.asarray(ky, dtype=float)
        r = np.hypot(kx, ky) / self.kappa
        r = np.clip(r, 0.0, 1.0)
        phi = np.mod(np.arctan2(ky, kx), 2.0 * math.pi)

        ir = np.clip(np.searchsorted(self.radii, r, side="right") - 1, 0, len(self.radii) - 2)
        tr = (r - self.radii[ir]) / (self.radii[ir + 1] - self.radii[ir])
        tr = np.clip(tr, 0.0, 1.0)

        # periodic azimuth cell
        ext_angles = np.append(self.angles, self.angles[0] + 2.0 * math.pi)
        ip = np.clip(np.searchsorted(ext_angles, phi, side="right") - 1, 0, len(self.angles) - 1)
        tp = (phi - ext_angles[ip]) / (ext_angles[ip + 1] - ext_angles[ip])
        tp = np.clip(tp, 0.0, 1.0)
        ip1 = (ip + 1) % len(self.angles)

        v00 = self.table[ir, ip]
        v01 = self.table[ir, ip1]
        v10 = self.table[ir + 1, ip]
        v11 = self.table[ir + 1, ip1]
        return (1 - tr) * ((1 - tp) * v00 + tp * v01) + tr * ((1 - tp) * v10 + tp * v11)


def _read_polar_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"k_r_over_kappa", "k_phi_rad", "a_plus", "a_minus"}
        if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
            raise ValueError(
                f"tabulated factor CSV must have header columns {sorted(required)}"
            )
        rows = [
            (
                float(row["k_r_over_kappa"]),
                float(row["k_phi_rad"]),
                float(row["a_plus"]),
                float(row["a_minus"]),
            )
            for row in reader
        ]
    if not rows:
        raise ValueError("tabulated factor CSV has no data rows")
    radii = np.array(sorted({r for r, _, _, _ in rows}))
    angles = np.array(sorted({p for _, p, _, _ in rows}))
    if radii[0] != 0.0 or radii[-1] != 1.0:
        raise ValueError("radial grid must span k_r/kappa in [0, 1]")
    if len(rows) != len(radii) * len(angles):
        raise ValueError("tabulated factor rows do not form a full polar grid")
    table_p = np.empty((len(radii), len(angles)))
    table_m = np.empty_like(table_p)
    rindex = {r: i for i, r in enumerate(radii)}
    pindex = {p: j for j, p in enumerate(angles)}
    for r, p, ap, am in rows:
        table_p[rindex[r], pindex[p]] = ap
        table_m[rindex[r], pindex[p]] = am
    return radii, angles, table_p, table_m


def _check_inside(kx, ky, kappa):
    rho2 = kx * kx + ky * ky
    if rho2 > kappa * kappa * (1.0 + DISK_REL_TOL):
        raise OutOfDisk(
            f"(kx, ky) = ({kx:g}, {ky:g}) lies outside the disk of radius {kappa:g}"
        )
    return rho2


def plane_wave_spectrum(factor: SpectralFactor, point, kappa: float):
    """Per-half-space power densities (s_plus, s_minus) at a disk point.

    s = a^2 / (4 * pi * gamma); for the isotropic 3D weight this reduces to
    (pi / kappa) / gamma.

    Raises:
        OutOfDisk: point outside the disk.
        BoundarySingularity: gamma/kappa < 1e-9; integrals across the edge
            must use the transformed quadrature in the variances module.
    """
    kx, ky = _unpack(point)
    rho2 = _check_inside(kx, ky, kappa)
    g = math.sqrt(max(kappa * kappa - rho2, 0.0))
    if g < BOUNDARY_GAMMA_TOL * kappa:
        raise BoundarySingularity(
            "power density diverges at the disk boundary; use the cell "
            "quadrature instead of point evaluation"
        )
    ap, am = factor.amplitudes(kx, ky)
    scale = 1.0 / (4.0 * math.pi * g)
    return float(ap) ** 2 * scale, float(am) ** 2 * scale


def shaping_response(factor: SpectralFactor, point, kappa: float):
    """Amplitude gains (g_plus, g_minus) turning isotropic coefficient draws
    into draws for this factor: g = sqrt(kappa) * a / (2 * pi).

    Equals (1, 1) everywhere for the isotropic 3D weight.

    Raises:
        OutOfDisk: point outside the disk.
    """
    kx, ky = _unpack(point)
    _check_inside(kx, ky, kappa)
    ap, am = factor.amplitudes(kx, ky)
    scale = math.sqrt(kappa) / (2.0 * math.pi)
    return float(ap) * scale, float(am) * scale


def shaping_gains(factor: SpectralFactor, kx, ky, kappa: float):
    """Vectorized shaping gains with out-of-disk points clamped radially.

    Harmonic lattice points of rim cells can sit just outside the disk while
    their cell still carries in-disk power; the factor is then evaluated at
    the radially nearest disk point.
    """
    kx = np.asarray(kx, dtype=float).copy()
    ky = np.asarray(ky, dtype=float).copy()
    rho = np.hypot(kx, ky)
    outside = rho > kappa
    if np.any(outside):
        shrink = kappa / rho[outside]
        kx[outside] *= shrink
        ky[outside] *= shrink
    ap, am = factor.amplitudes(kx, ky)
    scale = math.sqrt(kappa) / (2.0 * math.pi)
    return ap * scale, am * scale


def line_shaping_gain(factor: SpectralFactor, kx, kappa: float):
    """Shaping gain for the single-coefficient line series.

    The line series lumps the two half-space coefficients into one draw of
    twice the variance, observed at y = z = 0 where both halves add with
    unit phase; a directional weight therefore acts through the RMS of the
    two half-space gains, normalized so the isotropic line weight
    2*sqrt(pi) maps to gain 1. Isotropic factors of either kind are the
    shaping identity.
    """
    kx = np.asarray(kx, dtype=float)
    if factor.is_isotropic:
        return np.ones_like(kx)
    kxc = np.clip(kx, -kappa, kappa)
    ap, am = factor.amplitudes(kxc, np.zeros_like(kxc))
    norm = isotropic_factor_2d()
    return np.sqrt((np.square(ap) + np.square(am)) / 2.0) / norm
