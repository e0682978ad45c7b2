"""Statistical operators with a preset expectation value and their deformations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, OutOfRangeError, SingularDeformationError

MAX_BISECTIONS = 200
INVERSE_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """rho = V diag(p) V^dagger; ``basis=None`` means V = 1."""

    spectrum: np.ndarray = field(repr=False)
    basis: np.ndarray | None = field(default=None, repr=False)
    y: float | None = None
    target: float | None = None

    def __post_init__(self):
        p = np.asarray(self.spectrum, dtype=float)
        if p.ndim != 1:
            raise ValueError("spectrum must be one-dimensional")
        if np.any(p < 0):
            raise ValueError("density operator has a negative eigenvalue")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"trace is {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "spectrum", p)

    @property
    def dim(self) -> int:
        return self.spectrum.size

    @classmethod
    def fully_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.full(dim, 1.0 / dim))

    def matrix(self) -> np.ndarray:
        if self.basis is None:
            return np.diag(self.spectrum).astype(complex)
        V = self.basis
        return (V * self.spectrum) @ V.conj().T


def _h(y: float, x: np.ndarray, counts: np.ndarray) -> float:
    return float(np.sum(counts * x / (1.0 + y * x)))


def solve_reimann_rho(observable, m: float) -> DensityOperator:
    """rho = (1/N) / (1 + y (m - M)) with Tr rho = 1 and Tr M rho = m.

    ``observable`` is a MagnetizationObservable or a 1-d array holding the
    diagonal of M.  Degenerate eigenvalues are collapsed before root finding.

    Tr rho = 1 holds trivially at y = 0, so y is fixed by the equivalent
    condition sum_k (m - E_k) / (1 + y (m - E_k)) = 0.  That function is
    strictly decreasing on the positivity bracket
    (-1/(m - E_min), 1/(E_max - m)) and diverges to +inf / -inf at its ends,
    so bisection finds the unique root.
    """
    diag = np.asarray(getattr(observable, "eigenvalues", observable), dtype=float)
    N = diag.size
    values, inverse, counts = np.unique(diag, return_inverse=True, return_counts=True)
    e_min, e_max = values[0], values[-1]
    if not (e_min < m < e_max):
        raise OutOfRangeError(f"m={m!r} outside the open spectral range ({e_min}, {e_max})")
    x = m - values
    lo, hi = -1.0 / (m - e_min), 1.0 / (e_max - m)
    y = 0.5 * (lo + hi)
    span = hi - lo
    for _ in range(MAX_BISECTIONS):
        y = 0.5 * (lo + hi)
        hy = _h(y, x, counts)
        if hy == 0.0 or (hi - lo) < 1e-15 * span:
            break
        if hy > 0:
            lo = y
        else:
            hi = y
    else:
        raise NumericError("bisection for y did not converge")
    denom = 1.0 + y * x
    if np.any(denom <= 0):
        raise NumericError("root left the positivity bracket")
    p_distinct = 1.0 / (N * denom)
    p = p_distinct[inverse]
    p = p / p.sum()
    achieved = float(np.dot(p, diag))
    if abs(achieved - m) > 1e-10:
        raise NumericError(f"Tr M rho = {achieved!r} misses target {m!r}")
    return DensityOperator(p, None, float(y), float(m))


def purity(rho: DensityOperator) -> float:
    return float(np.sum(rho.spectrum ** 2))


def effective_dimension(rho: DensityOperator) -> float:
    return 1.0 / purity(rho)


@dataclass(frozen=True, eq=False)
class Deformation:
    """Lambda = sqrt(N rho), stored by its eigenvalues in the basis of rho."""

    source: DensityOperator

    @property
    def dim(self) -> int:
        return self.source.dim

    @property
    def scale(self) -> np.ndarray:
        return np.sqrt(self.dim * self.source.spectrum)

    @property
    def invertible(self) -> bool:
        return bool(self.source.spectrum.min() > INVERSE_FLOOR)

    @property
    def is_diagonal(self) -> bool:
        return self.source.basis is None

    def _scaled(self, v, factor: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        V = self.source.basis
        if V is None:
            return factor * v
        # v has shape (..., N): transform into the eigenbasis and back
        return (factor * (v @ V.conj())) @ V.T

    def apply(self, v) -> np.ndarray:
        return self._scaled(v, self.scale)

    def apply_inverse(self, v) -> np.ndarray:
        if not self.invertible:
            raise SingularDeformationError(
                f"smallest eigenvalue {self.source.spectrum.min():.3e} of rho is below {INVERSE_FLOOR}")
        return self._scaled(v, 1.0 / self.scale)

    def apply_squared(self, v) -> np.ndarray:
        return self._scaled(v, self.dim * self.source.spectrum)

    def matrix(self) -> np.ndarray:
        V = self.source.basis
        if V is None:
            return np.diag(self.scale).astype(complex)
        return (V * self.scale) @ V.conj().T


def deformation_from(rho: DensityOperator) -> Deformation:
    return Deformation(rho)


def apply_deformation(deformation: Deformation, v, inverse: bool = False) -> np.ndarray:
    return deformation.apply_inverse(v) if inverse else deformation.apply(v)


def overlap_trace(rho: DensityOperator, rho_prime: DensityOperator) -> float:
    """N Tr rho rho', the mean of <chi|Lambda' Lambda^2 Lambda'|chi> over Haar chi."""
    N = rho.dim
    if rho.basis is None and rho_prime.basis is None:
        return float(N * np.dot(rho.spectrum, rho_prime.spectrum))
    return float(N * np.trace(rho.matrix() @ rho_prime.matrix()).real)
