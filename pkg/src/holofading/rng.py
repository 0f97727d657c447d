"""Counter-based random draws for reproducible, order-independent Monte Carlo.

Every draw comes from a Philox generator keyed by the user seed, with the
256-bit counter laid out as

    word 0: running position inside the realization (low word),
    word 1: 0,
    word 2: realization index,
    word 3: stream tag (coefficient draws, baseline noise, ...).

Gaussian variates use the Box-Muller transform of uniform draws so each
complex draw consumes exactly two 64-bit counter words: draw i of a
realization always occupies words [2*i, 2*i + 2), independent of batching
or evaluation order, and distinct realizations never share counter space.
"""
from __future__ import annotations

import numpy as np

STREAM_COEFFICIENTS = 0
STREAM_BASELINE = 1

_MASK64 = (1 << 64) - 1


def generator_for(seed: int, realization: int, stream: int = STREAM_COEFFICIENTS) -> np.random.Generator:
    """Philox generator positioned at the start of one realization's stream."""
    key = np.array([seed & _MASK64, 0], dtype=np.uint64)
    counter = np.array([0, 0, realization & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def complex_standard_normals(
    seed: int, realization: int, n: int, stream: int = STREAM_COEFFICIENTS
) -> np.ndarray:
    """n circularly-symmetric complex normals with unit total variance.

    Real and imaginary parts each have variance 1/2. The transform is
    Box-Muller on (1 - u) so the open interval [0, 1) of the uniform source
    never reaches log(0).
    """
    g = generator_for(seed, realization, stream)
    u = g.random((n, 2))
    radius = np.sqrt(-np.log1p(-u[:, 0]))  # Rayleigh with E[r^2] = 1
    phase = 2.0 * np.pi * u[:, 1]
    return radius * (np.cos(phase) + 1j * np.sin(phase))
