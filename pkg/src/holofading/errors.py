"""Exception types shared across the package."""


class HoloFadingError(Exception):
    """Base class for every error raised by this package."""


class OutOfDisk(HoloFadingError):
    """Wavenumber point or lattice index outside the propagating disk.

    Directions with kx^2 + ky^2 > kappa^2 correspond to evanescent waves,
    which this package does not model.
    """


class BoundarySingularity(HoloFadingError):
    """Power spectrum requested too close to the disk edge.

    The spectrum diverges at the boundary; integrals across it must use the
    transformed quadrature in :mod:`holofading.variances` instead of point
    evaluation.
    """


class IndexOutOfBand(HoloFadingError):
    """Coefficient index outside the admissible band of the aperture."""


class MigrationRange(HoloFadingError):
    """Requested z-plane outside the validity range of the series expansion."""


class GridTooCoarse(HoloFadingError):
    """Sample grid cannot represent every aperture harmonic."""


class GridTooLarge(HoloFadingError):
    """Dense-baseline grid exceeds the desk-scale point cap."""


class NotPSD(HoloFadingError):
    """Correlation matrix has an eigenvalue below the PSD tolerance."""


class InsufficientRealizations(HoloFadingError):
    """Too few Monte Carlo realizations for the requested estimate."""


class LagMismatch(HoloFadingError):
    """Estimate and oracle are defined on different lag grids."""


class ConfigError(HoloFadingError):
    """Bad command-line flag or configuration-file entry."""
