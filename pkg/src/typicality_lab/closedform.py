"""Closed-form Hilbert space averages and variances.

Operators are passed as dense complex matrices unless noted otherwise;
states as PureState or plain amplitude vectors.  ``z`` may be complex; every
formula depends on |z| only.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatchError, DomainError, UnsupportedOrderError

MAX_MOMENT_ORDER = 6
VARIANCE_FLOOR = -1e-12


@dataclass(frozen=True)
class LambdaCoefficients:
    lambda1: float
    lambda2: float
    lambda3: float

    def total(self) -> float:
        return self.lambda1 + self.lambda2 + self.lambda3


@dataclass(frozen=True)
class MomentReport:
    """Mean, variance, skewness and (non-excess) kurtosis."""

    mean: float
    variance: float
    skewness: float
    kurtosis: float


def _vec(state) -> np.ndarray:
    return np.asarray(getattr(state, "amplitudes", state), dtype=complex)


def _mat(A, N: int) -> np.ndarray:
    A = np.asarray(getattr(A, "dense", A), dtype=complex)
    if A.shape != (N, N):
        raise DimensionMismatchError(f"operator shape {A.shape} does not match dim {N}")
    return A


def clamp_variance(v: float) -> float:
    """Round cancellation noise in [-1e-12, 0) up to 0; reject anything lower."""
    if v < VARIANCE_FLOOR:
        raise ArithmeticError(f"variance formula returned {v!r}")
    return max(float(v), 0.0)


# -- expectation values -------------------------------------------------------

def ha_expectation(trace_m: complex, N: int) -> complex:
    return trace_m / N


def hv_expectation(trace_m: complex, trace_m2: complex, N: int) -> float:
    v = (trace_m2 / N - trace_m**2 / N**2) / (N + 1)
    return float(np.real(v))


# -- transition probabilities, no overlap constraint --------------------------

def _chi_aadag_chi(chi: np.ndarray, A: np.ndarray) -> float:
    w = A.conj().T @ chi
    return float(np.vdot(w, w).real)


def ha_transition_uniform(chi, A, N: int) -> float:
    """Average over Haar psi of |<chi|A|psi>|^2 = <chi|A A^dag|chi> / N."""
    chi = _vec(chi)
    return _chi_aadag_chi(chi, _mat(A, N)) / N


def ha_transition_both(trace_aadag: float, N: int) -> float:
    return float(np.real(trace_aadag)) / N**2


def ha_transition_deformed(rho, rho_prime, A) -> float:
    """Tr rho' A rho A^dag, the average of |<chi|Lambda' A Lambda|psi>|^2."""
    N = rho.dim
    A = _mat(A, N)
    R, Rp = rho.matrix(), rho_prime.matrix()
    return float(np.trace(Rp @ A @ R @ A.conj().T).real)


def hv_transition_uniform(chi, A, N: int) -> float:
    a = _chi_aadag_chi(_vec(chi), _mat(A, N))
    return (N - 1) / (N**2 * (N + 1)) * a**2


def hv_transition_both(A, N: int) -> float:
    """Average over chi of the psi-variance of |<chi|A|psi>|^2.

    This is not the joint variance over both states, which also contains the
    spread of <chi|A A^dag|chi>/N over chi; the two agree when A A^dag = 1.
    """
    A = _mat(A, N)
    AA = A @ A.conj().T
    return (N - 1) / (N**3 * (N + 1) ** 2) * float(np.real(np.trace(AA @ AA) + np.trace(AA) ** 2))


# -- fixed overlap, one state held fixed --------------------------------------

def lambda_coefficients(z, N: int) -> LambdaCoefficients:
    z2 = abs(z) ** 2
    w = 1.0 - z2
    a = 2 * w**2 / (N * (N - 1))
    b = w**2 / (N - 1) ** 2
    c = 2 * w * z2 / (N - 1)
    return LambdaCoefficients(a - b, 2 * b + c - 2 * a, a - b - c)


def _fixed_mean(a: float, b: float, z, N: int) -> float:
    z2 = abs(z) ** 2
    return (1 - z2) / (N - 1) * a + (N * z2 - 1) / (N - 1) * b


def _fixed_var(a: float, b: float, z, N: int) -> float:
    lam = lambda_coefficients(z, N)
    return clamp_variance(lam.lambda1 * a**2 + lam.lambda2 * a * b + lam.lambda3 * b**2)


def ha_fixed_overlap(chi, A, z, N: int) -> float:
    """Average of |<chi|A|psi>|^2 over psi uniform on {<chi|psi> = z}."""
    chi = _vec(chi)
    A = _mat(A, N)
    a = _chi_aadag_chi(chi, A)
    b = abs(np.vdot(chi, A @ chi)) ** 2
    return _fixed_mean(a, b, z, N)


def hv_fixed_overlap(chi, A, z, N: int) -> float:
    chi = _vec(chi)
    A = _mat(A, N)
    a = _chi_aadag_chi(chi, A)
    b = abs(np.vdot(chi, A @ chi)) ** 2
    return _fixed_var(a, b, z, N)


def _deformed_terms(chi, A, deformation, N):
    chi = _vec(chi)
    A = _mat(A, N)
    lam2_chi = deformation.apply_squared(chi)
    norm2 = float(np.vdot(chi, lam2_chi).real)
    adag_chi = A.conj().T @ chi
    a = float(np.vdot(adag_chi, deformation.apply_squared(adag_chi)).real)
    b = abs(np.vdot(chi, A @ lam2_chi)) ** 2 / norm2
    return a, b


def ha_fixed_overlap_deformed(chi, A, deformation, z, N: int) -> float:
    """Average of |<chi|A Lambda|psi>|^2 given <chi|Lambda|psi>/||Lambda chi|| = z."""
    a, b = _deformed_terms(chi, A, deformation, N)
    return _fixed_mean(a, b, z, N)


def hv_fixed_overlap_deformed(chi, A, deformation, z, N: int) -> float:
    a, b = _deformed_terms(chi, A, deformation, N)
    return _fixed_var(a, b, z, N)


# -- fixed overlap, both states averaged --------------------------------------

def ha_fixed_overlap_both(trace_aadag: float, trace_a: complex, z, N: int) -> float:
    z2 = abs(z) ** 2
    d = N**3 - N
    return (N - z2) / d * float(np.real(trace_aadag)) + (N * z2 - 1) / d * abs(trace_a) ** 2


def ha_fixed_overlap_both_unitary(K1: float, z, N: int) -> float:
    """Unitary case, written through the form factor K(1) = |Tr U|^2 / N."""
    z2 = abs(z) ** 2
    return (N - z2) / (N**2 - 1) + (N * z2 - 1) / (N**2 - 1) * K1


def ha_diag_moment2_unitary(trace_u: complex, N: int) -> float:
    """Average over Haar chi of |<chi|U|chi>|^2."""
    return (abs(trace_u) ** 2 + N) / (N * (N + 1))


def ha_diag_moment4_unitary(trace_u: complex, trace_u2: complex, N: int) -> float:
    """Average over Haar chi of |<chi|U|chi>|^4."""
    t1 = abs(trace_u) ** 2
    poly = (t1**2 + 2 * np.real(trace_u2 * np.conj(trace_u) ** 2) + abs(trace_u2) ** 2
            + (4 * N + 8) * t1 + 2 * N**2 + 6 * N)
    return float(poly) * _rising_reciprocal(N, 4)


def second_moment_fixed_overlap_both_unitary(trace_u: complex, trace_u2: complex, z, N: int) -> float:
    z2 = abs(z) ** 2
    w = 1 - z2
    m2 = ha_diag_moment2_unitary(trace_u, N)
    m4 = ha_diag_moment4_unitary(trace_u, trace_u2, N)
    return (2 * w**2 / (N * (N - 1))
            + (2 * w**2 / (N * (N - 1)) - 4 * w * z2 / (N - 1) + z2**2) * m4
            + (4 * w * z2 / (N - 1) - 4 * w**2 / (N * (N - 1))) * m2)


def hv_fixed_overlap_both_unitary(trace_u: complex, trace_u2: complex, z, N: int) -> float:
    mean = ha_fixed_overlap_both_unitary(abs(trace_u) ** 2 / N, z, N)
    return clamp_variance(second_moment_fixed_overlap_both_unitary(trace_u, trace_u2, z, N) - mean**2)


def slope_fixed_overlap_both(K1: float, z, N: int) -> float:
    """d/d|z| of the both-states unitary average."""
    return 2 * abs(z) * (N * K1 - 1) / (N**2 - 1)


# -- products of diagonal matrix elements -------------------------------------

def _rising_reciprocal(N: int, M: int) -> float:
    """(N-1)! / (N+M-1)! as a product of M reciprocals."""
    out = 1.0
    for k in range(M):
        out /= N + k
    return out


@lru_cache(maxsize=None)
def _cycle_types(M: int) -> tuple:
    """Cycle decompositions of every permutation of range(M).

    A cycle (m, s(m), s^2(m), ...) contributes Tr(B_m B_s(m) ...).
    """
    out = []
    for perm in itertools.permutations(range(M)):
        seen, cycles = set(), []
        for start in range(M):
            if start in seen:
                continue
            cyc, k = [], start
            while k not in seen:
                seen.add(k)
                cyc.append(k)
                k = perm[k]
            cycles.append(tuple(cyc))
        out.append(tuple(cycles))
    return tuple(out)


def moment_product(operators, N: int | None = None) -> complex:
    """Average over Haar chi of prod_m <chi|B_m|chi>.

    Evaluated as (N-1)!/(N+M-1)! times the sum over permutations of the
    product of traces over each cycle.
    """
    mats = [np.asarray(B, dtype=complex) for B in operators]
    M = len(mats)
    if M < 1 or M > MAX_MOMENT_ORDER:
        raise UnsupportedOrderError(f"moment order must be in 1..{MAX_MOMENT_ORDER}, got {M}")
    N = mats[0].shape[0] if N is None else N
    for B in mats:
        if B.shape != (N, N):
            raise DimensionMismatchError(f"operator shape {B.shape} does not match dim {N}")
    trace_cache: dict[tuple, complex] = {}

    def cycle_trace(cyc: tuple) -> complex:
        # a cycle's trace is invariant under rotation; canonicalize on the smallest index
        r = cyc.index(min(cyc))
        key = cyc[r:] + cyc[:r]
        if key not in trace_cache:
            prod = mats[key[0]]
            for k in key[1:-1]:
                prod = prod @ mats[k]
            if len(key) == 1:
                trace_cache[key] = np.trace(prod)
            else:
                trace_cache[key] = np.sum(prod * mats[key[-1]].T)
        return trace_cache[key]

    total = 0j
    for cycles in _cycle_types(M):
        term = 1 + 0j
        for cyc in cycles:
            term *= cycle_trace(cyc)
        total += term
    return complex(total * _rising_reciprocal(N, M))


# -- both states nonuniform: second-order geometric-series approximation ------

def approx_ha_full_nonuniform(A, deformation, deformation_prime, z, N: int | None = None,
                              gate: tuple[float, float] = (0.5, 1.5)) -> float:
    """Approximate average of |<chi|L' A L|psi>|^2 over chi and constrained psi.

    The ratio |<chi|alpha|chi>|^2 / <chi|beta|chi>, with alpha = L' A L^2 L' and
    beta = L' L^2 L', is replaced by (3 - 3 beta + beta^2) |alpha|^2 and each
    term is averaged through ``moment_product``.  Exact for L = L' = 1.
    """
    N = deformation.dim if N is None else N
    A = _mat(A, N)
    L = deformation.matrix()
    Lp = deformation_prime.matrix()
    L2 = L @ L
    alpha = Lp @ A @ L2 @ Lp
    beta = Lp @ L2 @ Lp
    alpha_dag = alpha.conj().T
    center = float(np.trace(beta).real) / N
    lo, hi = gate
    if not lo <= center <= hi:
        warnings.warn(f"N Tr rho rho' = {center:.3f} lies outside the validity gate [{lo}, {hi}]",
                      RuntimeWarning, stacklevel=2)
    h1 = moment_product([alpha, alpha_dag], N)
    h2 = moment_product([beta, alpha, alpha_dag], N)
    h3 = moment_product([beta, beta, alpha, alpha_dag], N)
    ratio = float(np.real(3 * h1 - 3 * h2 + h3))
    first = float(np.trace(Lp @ A @ L2 @ A.conj().T @ Lp).real) / N
    return _fixed_mean(first, ratio, z, N)


# -- distribution of transition probabilities ---------------------------------

def _check_n(N: int):
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")


def kumaraswamy_pdf(s, N: int):
    """p(s) = (N-1)(1-s)^(N-2) on [0, 1]."""
    _check_n(N)
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s > 1)):
        raise DomainError("s must lie in [0, 1]")
    out = (N - 1) * (1 - s) ** (N - 2)
    return float(out) if out.ndim == 0 else out


def kumaraswamy_cdf(s, N: int):
    _check_n(N)
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s > 1)):
        raise DomainError("s must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        out = -np.expm1((N - 1) * np.log1p(-s))
    out = np.where(s >= 1, 1.0, out)
    return float(out) if out.ndim == 0 else out


def kumaraswamy_moments(N: int) -> MomentReport:
    """Exact finite-N moments from E[s^k] = k! (N-1)! / (N+k-1)!."""
    _check_n(N)
    raw = [1.0]
    for k in range(1, 5):
        raw.append(raw[-1] * k / (N + k - 1))
    m1, m2, m3, m4 = raw[1:]
    var = m2 - m1**2
    c3 = m3 - 3 * m1 * m2 + 2 * m1**3
    c4 = m4 - 4 * m1 * m3 + 6 * m1**2 * m2 - 3 * m1**4
    return MomentReport(m1, var, c3 / var**1.5, c4 / var**2)
