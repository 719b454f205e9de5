"""Float64 references and scoring: ALIF dynamics, Poisson PMF, NRMSE, chi-square."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .kernels.config import AlifParams


class DegenerateRange(ValueError):
    pass


@dataclass(frozen=True)
class Trajectory:
    """Per-step record: ``spikes[t]`` = S[t], ``v[t]`` = V[t+1], ``a[t]`` = A[t+1]."""

    v: np.ndarray
    a: np.ndarray
    spikes: np.ndarray

    def __post_init__(self):
        if not (len(self.v) == len(self.a) == len(self.spikes)):
            raise ValueError("trajectory components differ in length")

    def __len__(self):
        return len(self.v)


def alif_reference(params: AlifParams, input_current) -> Trajectory:
    """Exact float64 evaluation of the ALIF recurrence from V = A = 0.

    Step t computes S[t] from V[t] and A[t] (spike when V >= threshold), then
    V[t+1] = alpha V[t] + I[t] - S[t] v_th and A[t+1] = rho A[t] + S[t], where
    ``input_current[t]`` is the input that arrives during step t.  Works
    element-wise on (T,) or (T, n) inputs.
    """
    cur = np.asarray(input_current, dtype=np.float64)
    alpha, rho = params.alpha, params.rho
    V = np.zeros(cur.shape[1:])
    A = np.zeros(cur.shape[1:])
    vs = np.empty_like(cur)
    as_ = np.empty_like(cur)
    ss = np.empty(cur.shape, dtype=bool)
    for t in range(cur.shape[0]):
        S = V >= params.v_th + params.beta * A
        V = alpha * V + cur[t] - S * params.v_th
        A = rho * A + S
        vs[t], as_[t], ss[t] = V, A, S
    return Trajectory(vs, as_, ss)


def nrmse(fixed, ref) -> float:
    """Root-mean-square error normalised by the reference's range."""
    fixed = np.asarray(fixed, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if fixed.shape != ref.shape:
        raise ValueError(f"shape mismatch {fixed.shape} vs {ref.shape}")
    span = float(ref.max() - ref.min())
    if span == 0.0:
        raise DegenerateRange("reference series is constant")
    return float(np.sqrt(np.mean((fixed - ref) ** 2)) / span)


def poisson_pmf(lam: float, k: int) -> float:
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if k < 0:
        return 0.0
    return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    alpha: float
    bins: tuple  # (label, observed, expected)

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha


def chi_square_gof(samples, pmf, alpha: float = 0.001, min_expected: float = 5.0) -> ChiSquareResult:
    """Goodness of fit of integer samples against ``pmf(k)``.

    Bins with expected count below ``min_expected`` are merged into the lower
    tail (k <= lo) or upper tail (k >= hi) so every reported bin meets it.
    """
    samples = np.asarray(samples, dtype=np.int64)
    n = len(samples)
    if n == 0:
        raise ValueError("no samples")
    kmax = int(max(samples.max(), 0))
    # extend far enough that the upper tail carries negligible mass
    k_hi = kmax
    while n * (1.0 - sum(pmf(k) for k in range(k_hi + 1))) > 1e-9 and k_hi < kmax + 1000:
        k_hi += 1
    expected = np.array([n * pmf(k) for k in range(k_hi + 1)])
    observed = np.bincount(np.clip(samples, 0, None), minlength=k_hi + 1)[:k_hi + 1].astype(float)

    lo = 0
    while lo < k_hi and expected[:lo + 1].sum() < min_expected:
        lo += 1
    hi = k_hi
    while hi > lo and n - expected[:hi].sum() < min_expected:
        hi -= 1
    bins = [(f"<={lo}", observed[:lo + 1].sum(), expected[:lo + 1].sum())]
    bins += [(str(k), observed[k], expected[k]) for k in range(lo + 1, hi)]
    bins.append((f">={hi}", n - observed[:hi].sum(), n - expected[:hi].sum()))
    obs = np.array([b[1] for b in bins])
    exp = np.array([b[2] for b in bins])
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = len(bins) - 1
    p = float(sps.chi2.sf(stat, dof))
    return ChiSquareResult(stat, dof, p, alpha, tuple(bins))
