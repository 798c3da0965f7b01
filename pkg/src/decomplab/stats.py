"""Empirical distributions, two-sample KS tests and empirical transforms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KS_C_001 = 1.628
DECOMPOSITION_SLACK = 0.005


@dataclass(frozen=True)
class EmpiricalSample:
    """Sorted i.i.d. draws with provenance metadata."""

    values: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size < 1:
            raise ValueError("an empirical sample needs at least one value")
        if np.any(~np.isfinite(v)):
            raise ValueError("sample values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True)
class TransformEstimate:
    s: float
    estimate: float
    stderr: float


@dataclass(frozen=True)
class KSResult:
    statistic: float
    threshold: float
    reject: bool


def _as_sorted(sample) -> np.ndarray:
    if isinstance(sample, EmpiricalSample):
        return sample.values
    return np.sort(np.asarray(sample, dtype=float).ravel())


def ecdf(sample, x):
    """Right-continuous empirical CDF at ``x`` (scalar or array)."""
    v = _as_sorted(sample)
    out = np.searchsorted(v, np.asarray(x, dtype=float), side="right") / v.size
    return float(out) if np.ndim(x) == 0 else out


def ks_statistic(a, b) -> float:
    """``sup_x |ECDF_a(x) - ECDF_b(x)|`` over the pooled points."""
    va, vb = _as_sorted(a), _as_sorted(b)
    if va.size == 0 or vb.size == 0:
        raise ValueError("both samples must be nonempty")
    pooled = np.concatenate([va, vb])
    fa = np.searchsorted(va, pooled, side="right") / va.size
    fb = np.searchsorted(vb, pooled, side="right") / vb.size
    return float(np.max(np.abs(fa - fb)))


def ks_threshold(na: int, nb: int, c_alpha: float = KS_C_001, slack: float = 0.0) -> float:
    return c_alpha * math.sqrt((na + nb) / (na * nb)) + slack


def ks_two_sample(a, b, c_alpha: float = KS_C_001, slack: float = 0.0) -> KSResult:
    """Two-sample KS decision with the asymptotic threshold ``c(alpha) sqrt((Na+Nb)/(Na Nb))``."""
    d = ks_statistic(a, b)
    thr = ks_threshold(_as_sorted(a).size, _as_sorted(b).size, c_alpha, slack)
    return KSResult(statistic=d, threshold=thr, reject=d > thr)


def convolve_samples(a, b, rng: np.random.Generator) -> EmpiricalSample:
    """Independent sums ``a_i + b_pi(i)`` with a uniform pairing without replacement.

    Each value is used at most once, so the sums remain i.i.d.
    """
    va = np.asarray(a.values if isinstance(a, EmpiricalSample) else a, dtype=float).ravel()
    vb = np.asarray(b.values if isinstance(b, EmpiricalSample) else b, dtype=float).ravel()
    n = min(va.size, vb.size)
    ia = rng.permutation(va.size)[:n]
    ib = rng.permutation(vb.size)[:n]
    return EmpiricalSample(va[ia] + vb[ib], {"origin": "convolution"})


def empirical_lt(sample, s: float) -> TransformEstimate:
    """Mean of ``exp(-s X)`` with standard error ``sqrt(var / N)``."""
    if s < 0:
        raise ValueError("empirical transform needs s >= 0")
    v = _as_sorted(sample)
    e = np.exp(-s * v)
    se = float(e.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return TransformEstimate(s=float(s), estimate=float(e.mean()), stderr=se)
