"""Seeded Monte Carlo estimators of Hilbert space averages.

Trial ``t`` of a run draws only from ``substream(seed, t, stream)``; trials are
evaluated in fixed-size chunks and the per-trial values are concatenated in
trial order before any reduction, so results do not depend on ``workers``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .closedform import MomentReport, kumaraswamy_cdf
from .errors import DimensionMismatchError, SingularDeformationError
from .rng import substream
from .statespace import OverlapSpec, PureState, complement_rows, haar_amplitudes, haar_rows

CHUNK = 256
DEGENERATE_SPREAD = 1e-12


@dataclass(frozen=True, eq=False)
class EstimatorResult:
    n_samples: int
    mean: float
    std_dev: float
    std_error: float
    samples: np.ndarray | None = None

    @property
    def variance(self) -> float:
        return self.std_dev**2


@dataclass(frozen=True, eq=False)
class HistogramResult:
    bin_edges: np.ndarray
    counts: np.ndarray
    moments: MomentReport
    ks_statistic: float | None
    samples: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return int(self.counts.sum())


def summarize(values: np.ndarray, keep_samples: bool = False) -> EstimatorResult:
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        raise ValueError("no samples")
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if n > 1 else 0.0
    return EstimatorResult(n, mean, std, std / np.sqrt(n), values if keep_samples else None)


def sample_moments(values: np.ndarray) -> MomentReport:
    values = np.asarray(values, dtype=float)
    mean = values.mean()
    d = values - mean
    c2 = np.mean(d**2)
    if c2 == 0:
        return MomentReport(float(mean), 0.0, 0.0, 0.0)
    return MomentReport(float(mean), float(values.var(ddof=1)),
                        float(np.mean(d**3) / c2**1.5), float(np.mean(d**4) / c2**2))


def run_trials(chunk_fn: Callable[[int, int], np.ndarray], n_samples: int,
               workers: int = 1) -> np.ndarray:
    """Evaluate ``chunk_fn(start, stop)`` over fixed chunks and concatenate in order."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    bounds = [(s, min(s + CHUNK, n_samples)) for s in range(0, n_samples, CHUNK)]
    if workers <= 1 or len(bounds) == 1:
        parts = [chunk_fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: chunk_fn(*ab), bounds))
    return np.concatenate(parts)


def _adjoint_rows(op, rows: np.ndarray) -> np.ndarray:
    """A^dagger applied to each row of ``rows``."""
    if op is None:
        return rows
    if hasattr(op, "apply_adjoint"):
        return op.apply_adjoint(rows)
    op = np.asarray(op)
    if op.ndim == 1:
        return np.conj(op) * rows
    return rows @ op.conj()


def _op_dim(op):
    if op is None:
        return None
    return getattr(op, "dim", None) or np.shape(op)[-1]


def estimate_fixed_overlap(U, chi, z, n_samples: int, seed: int, *,
                           deformation=None, deformation_prime=None,
                           stream: int = 1, workers: int = 1,
                           keep_samples: bool = False, method: str = "uniform",
                           dim: int | None = None) -> EstimatorResult:
    """Monte Carlo estimate of the fixed-overlap transition probability.

    Each trial builds the reference r = L' chi (chi Haar if ``chi="resample"``),
    draws psi uniformly from {||psi|| = 1, <L r|psi> / ||L r|| = z} and records
    |<r|U L|psi>|^2.  Missing deformations act as the identity.
    """
    spec = z if isinstance(z, OverlapSpec) else OverlapSpec(z)
    resample = isinstance(chi, str)
    if resample and chi != "resample":
        raise ValueError(f"chi must be a PureState or 'resample', got {chi!r}")
    N = dim or (None if resample else chi.dim) or _op_dim(U) or getattr(deformation, "dim", None)
    if N is None:
        raise ValueError("cannot infer the Hilbert space dimension")
    dims = [_op_dim(U)] + [d.dim for d in (deformation, deformation_prime) if d is not None]
    for d in dims:
        if d is not None and d != N:
            raise DimensionMismatchError(f"dimension {d} does not match {N}")
    if method == "inverse" and deformation is not None and not deformation.invertible:
        raise SingularDeformationError("deformation is not invertible")

    L, Lp = deformation, deformation_prime
    fixed_ref = None
    if not resample:
        fixed_ref = chi.amplitudes if Lp is None else Lp.apply(chi.amplitudes)
        fixed_target = _adjoint_rows(U, fixed_ref[None, :])[0]

    def chunk(start: int, stop: int) -> np.ndarray:
        rngs = [substream(seed, t, stream) for t in range(start, stop)]
        if resample:
            refs = haar_rows(rngs, N)
            if Lp is not None:
                refs = Lp.apply(refs)
        else:
            refs = np.broadcast_to(fixed_ref, (len(rngs), N))
        e = refs if L is None else L.apply(refs)
        e = e / np.linalg.norm(e, axis=1, keepdims=True)
        if spec.abs_z == 1.0:
            psis = spec.z * e
        else:
            if method == "inverse" and L is not None:
                branch = L.apply_inverse(complement_rows(refs, rngs))
                branch /= np.linalg.norm(branch, axis=1, keepdims=True)
            else:
                branch = complement_rows(e, rngs)
            psis = spec.z * e + spec.perp_weight * branch
        lam_psi = psis if L is None else L.apply(psis)
        targets = fixed_target[None, :] if not resample else _adjoint_rows(U, refs)
        amp = np.sum(np.conj(targets) * lam_psi, axis=1)
        return np.abs(amp) ** 2

    values = run_trials(chunk, n_samples, workers)
    return summarize(values, keep_samples)


def histogram_transition(U, z, n_samples: int, n_bins: int = 50, seed: int = 0, *,
                         stream: int = 1, workers: int = 1, dim: int | None = None,
                         reference_cdf: Callable | None = None,
                         keep_samples: bool = False) -> HistogramResult:
    """Histogram of |<chi|U|psi>|^2 over independent pairs with |<chi|psi>| = |z|.

    Bins are uniform on [0, max(sample)]; a sample with no spread gets a
    single bin.  The KS statistic uses the raw
    samples; when z = 0 and no reference is given the Kumaraswamy law is used.
    """
    if n_samples < 100:
        raise ValueError("histograms need at least 100 samples")
    spec = z if isinstance(z, OverlapSpec) else OverlapSpec(z)
    N = dim or _op_dim(U)
    if N is None:
        raise ValueError("cannot infer the Hilbert space dimension")
    res = estimate_fixed_overlap(U, "resample", spec, n_samples, seed, stream=stream,
                                 workers=workers, keep_samples=True, dim=N)
    values = res.samples
    top = float(values.max())
    lo = float(values.min())
    if top - lo <= DEGENERATE_SPREAD * max(1.0, abs(top)):
        # a point mass, e.g. U = 1: one bin around the common value
        edges = np.array([lo - DEGENERATE_SPREAD, top + DEGENERATE_SPREAD])
    else:
        edges = np.linspace(0.0, top, n_bins + 1)
    counts, edges = np.histogram(values, bins=edges)
    if reference_cdf is None and spec.abs_z == 0.0:
        reference_cdf = lambda s: kumaraswamy_cdf(np.clip(s, 0.0, 1.0), N)  # noqa: E731
    ks = None
    if reference_cdf is not None:
        ks = float(stats.kstest(values, reference_cdf).statistic)
    return HistogramResult(edges, counts, sample_moments(values), ks,
                           values if keep_samples else None)


def estimate_generic(f: Callable[[np.ndarray], np.ndarray], dim: int, n_samples: int,
                     seed: int, *, sampler="haar", stream: int = 1, workers: int = 1,
                     keep_samples: bool = False) -> EstimatorResult:
    """Empirical Hilbert space average of a state functional.

    ``f`` maps a (k, dim) array of sampled states (one per row) to k real
    values.  ``sampler`` is ``"haar"`` or a callable ``(rng, dim) -> amplitudes``.
    """
    def chunk(start: int, stop: int) -> np.ndarray:
        rngs = [substream(seed, t, stream) for t in range(start, stop)]
        if isinstance(sampler, str) and sampler == "haar":
            states = haar_rows(rngs, dim)
        else:
            states = np.stack([sampler(r, dim) for r in rngs])
        return np.asarray(f(states), dtype=float).reshape(stop - start)

    return summarize(run_trials(chunk, n_samples, workers), keep_samples)


def haar_state(seed: int, stream: int, dim: int) -> PureState:
    """Deterministic Haar state used as the fixed reference of a scan."""
    return PureState(haar_amplitudes(substream(seed, 0, stream), dim))
