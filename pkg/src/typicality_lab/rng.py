"""Counter-based random substreams and Box-Muller complex Gaussians.

Every trial of every experiment owns an independent Philox stream keyed by
``(seed, stream)`` with the trial index placed in the counter.  A trial's
draws therefore depend only on ``(seed, stream, trial)`` and never on how
trials are scheduled across workers.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Return the generator owned by ``trial`` within ``(seed, stream)``."""
    if seed < 0 or trial < 0 or stream < 0:
        raise ValueError("seed, trial and stream must be non-negative")
    bitgen = np.random.Philox(
        key=[seed & _MASK64, stream & _MASK64],
        counter=[0, trial & _MASK64, 0, 0],
    )
    return np.random.Generator(bitgen)


def box_muller(u: np.ndarray) -> np.ndarray:
    """Map uniforms of shape (..., 2) to standard complex Gaussians of shape (...)."""
    radius = np.sqrt(-2.0 * np.log1p(-u[..., 0]))
    return radius * np.exp(2j * np.pi * u[..., 1])


def complex_normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussians, E|g|^2 = 2, via Box-Muller.

    Each complex entry consumes exactly two uniforms from ``rng``.
    """
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    return box_muller(rng.random(shape + (2,)))


def complex_normal_rows(rngs, dim: int) -> np.ndarray:
    """One row of ``dim`` complex Gaussians per generator, stacked to (len(rngs), dim).

    Row i equals ``complex_normals(rngs[i], dim)``.
    """
    return box_muller(np.stack([r.random((dim, 2)) for r in rngs]))
