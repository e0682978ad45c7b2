"""Pure states: Haar sampling and constructions with a preset overlap."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSamplingError,
    DimensionMismatchError,
    InvalidDimensionError,
    SingularDeformationError,
)
from .rng import complex_normal_rows, complex_normals

NORM_TOL = 1e-12
COLLINEAR_TOL = 1e-12
MAX_RESAMPLES = 100


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit-norm complex amplitude vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise InvalidDimensionError(f"a state needs dim >= 2, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def from_vector(cls, vector) -> "PureState":
        v = np.asarray(vector, dtype=complex)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def basis(cls, dim: int, index: int) -> "PureState":
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return cls(v)

    def overlap(self, other: "PureState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class OverlapSpec:
    """Preset overlap z = <chi|psi> with |z| <= 1."""

    z: complex

    def __post_init__(self):
        z = complex(self.z)
        if not np.isfinite(z) or abs(z) > 1.0 + 1e-15:
            raise ValueError(f"|z| must lie in [0, 1], got {z!r}")
        if abs(z) > 1.0:
            z = z / abs(z)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_theta(cls, theta: float, phase: float = 0.0) -> "OverlapSpec":
        if not 0.0 <= theta <= np.pi / 2 + 1e-15:
            raise ValueError(f"theta must lie in [0, pi/2], got {theta!r}")
        return cls(np.cos(theta) * np.exp(1j * phase))

    @property
    def abs_z(self) -> float:
        return abs(self.z)

    @property
    def theta(self) -> float:
        return float(np.arccos(min(self.abs_z, 1.0)))

    @property
    def perp_weight(self) -> float:
        """sqrt(1 - |z|^2), the weight of the perpendicular branch."""
        return float(np.sqrt(max(0.0, 1.0 - self.abs_z**2)))


def haar_amplitudes(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = complex_normals(rng, dim)
    return g / np.linalg.norm(g)


def complement_amplitudes(ref: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform unit vector orthogonal to ``ref`` (which need not be normalized)."""
    unit = ref / np.linalg.norm(ref)
    for _ in range(MAX_RESAMPLES):
        xi = haar_amplitudes(rng, unit.size)
        c = np.vdot(unit, xi)
        weight = 1.0 - abs(c) ** 2
        if weight >= COLLINEAR_TOL:
            perp = (xi - c * unit) / np.sqrt(weight)
            # one re-orthogonalization pass keeps <ref|perp> at machine precision
            perp -= np.vdot(unit, perp) * unit
            return perp / np.linalg.norm(perp)
    raise DegenerateSamplingError(
        f"no non-collinear sample after {MAX_RESAMPLES} attempts")


def haar_rows(rngs, dim: int) -> np.ndarray:
    """Row i is ``haar_amplitudes(rngs[i], dim)``, drawn for all rows at once."""
    g = complex_normal_rows(rngs, dim)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def complement_rows(refs: np.ndarray, rngs) -> np.ndarray:
    """Row-wise ``complement_amplitudes``; collinear rows fall back to the scalar resampler."""
    refs = np.asarray(refs, dtype=complex)
    unit = refs / np.linalg.norm(refs, axis=1, keepdims=True)
    xi = haar_rows(rngs, refs.shape[1])
    c = np.sum(np.conj(unit) * xi, axis=1, keepdims=True)
    weight = 1.0 - np.abs(c) ** 2
    bad = weight[:, 0] < COLLINEAR_TOL
    weight[bad] = 1.0
    perp = (xi - c * unit) / np.sqrt(weight)
    perp -= np.sum(np.conj(unit) * perp, axis=1, keepdims=True) * unit
    perp /= np.linalg.norm(perp, axis=1, keepdims=True)
    for i in np.flatnonzero(bad):
        perp[i] = complement_amplitudes(refs[i], rngs[i])
    return perp


def sample_haar(dim: int, rng: np.random.Generator) -> PureState:
    """Draw a state from the unitarily invariant measure on the unit sphere of C^dim."""
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"dim must be an integer >= 2, got {dim!r}")
    return PureState(haar_amplitudes(rng, int(dim)))


def orthogonal_complement_sample(chi: PureState, rng: np.random.Generator) -> PureState:
    """Uniform state in the orthogonal complement of ``chi``.

    A Haar state xi is projected off chi and renormalized; xi is redrawn if it
    is (numerically) collinear with chi.
    """
    return PureState(complement_amplitudes(chi.amplitudes, rng))


def fixed_overlap_state(chi: PureState, spec: OverlapSpec, rng: np.random.Generator) -> PureState:
    """State psi = z chi + sqrt(1-|z|^2) chi_perp, so that <chi|psi> = z exactly.

    Only |z| enters any average; the phase of z is carried on the chi
    coefficient.
    """
    if spec.abs_z == 1.0:
        return PureState(spec.z * chi.amplitudes)
    perp = complement_amplitudes(chi.amplitudes, rng)
    return PureState(spec.z * chi.amplitudes + spec.perp_weight * perp)


def deformed_fixed_overlap_state(chi: PureState, deformation, spec: OverlapSpec,
                                 rng: np.random.Generator,
                                 method: str = "uniform") -> PureState:
    """State psi with <chi|Lambda|psi> / ||Lambda chi|| = z.

    ``method="uniform"`` draws the perpendicular branch uniformly from the
    complement of Lambda chi, which is the exact conditional measure whose
    mean is the fixed-overlap nonuniform closed form.  ``method="inverse"``
    uses Lambda^{-1} chi_perp / ||Lambda^{-1} chi_perp|| instead; it obeys the
    same constraint but is not uniform on the constraint set unless
    Lambda = 1.
    """
    if not deformation.invertible:
        raise SingularDeformationError("deformation has a (near) zero eigenvalue")
    if deformation.dim != chi.dim:
        raise DimensionMismatchError(f"deformation dim {deformation.dim} != state dim {chi.dim}")
    lam_chi = deformation.apply(chi.amplitudes)
    e = lam_chi / np.linalg.norm(lam_chi)
    if spec.abs_z == 1.0:
        return PureState(spec.z * e)
    if method == "uniform":
        branch = complement_amplitudes(e, rng)
    elif method == "inverse":
        chi_perp = complement_amplitudes(chi.amplitudes, rng)
        branch = deformation.apply_inverse(chi_perp)
        branch /= np.linalg.norm(branch)
    else:
        raise ValueError(f"unknown method {method!r}")
    psi = spec.z * e + spec.perp_weight * branch
    return PureState(psi / np.linalg.norm(psi))


def _apply(op, v: np.ndarray) -> np.ndarray:
    if hasattr(op, "apply"):
        return op.apply(v)
    op = np.asarray(op)
    if op.ndim == 1:
        return op * v
    return op @ v


def transition_probability(chi: PureState, op, psi: PureState) -> float:
    """|<chi|A|psi>|^2.

    ``op`` may be a dense matrix, a 1-d array (diagonal operator), ``None``
    (identity) or any object with an ``apply`` method.
    """
    if chi.dim != psi.dim:
        raise DimensionMismatchError(f"state dims differ: {chi.dim} vs {psi.dim}")
    if op is None:
        a_psi = psi.amplitudes
    else:
        dim = getattr(op, "dim", None) or np.shape(op)[-1]
        if dim != psi.dim:
            raise DimensionMismatchError(f"operator dim {dim} != state dim {psi.dim}")
        a_psi = _apply(op, psi.amplitudes)
    return float(abs(np.vdot(chi.amplitudes, a_psi)) ** 2)
