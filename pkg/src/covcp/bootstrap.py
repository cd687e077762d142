"""Threshold selection for the screening step.

The resampling threshold replaces each component's centered-product sequence
with i.i.d. Gaussian noise whose scale matches the component's noise level,
recomputes D on that synthetic no-change data and takes its largest entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CHUNK, CenteredData, DataValidationError, n_components, vech_pairs
from .reduction import d_statistic

DEFAULT_SEED = 20170321

# Rows of X* sharing one RNG substream. Fixed so that the variates of row ell
# depend only on (seed, replicate, ell // RNG_BLOCK), never on chunking.
RNG_BLOCK = 4096

AGGREGATIONS = ("max-of-single", "median-of-maxima")


@dataclass(frozen=True)
class VarianceProfile:
    p: int
    scales: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scales, dtype=np.float64)
        if s.shape != (n_components(self.p),):
            raise ValueError(f"expected {n_components(self.p)} scales for p={self.p}, got {s.shape}")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValueError("scales must be finite and nonnegative")
        object.__setattr__(self, "scales", s)

    @property
    def degenerate(self) -> bool:
        return not np.any(self.scales > 0)


@dataclass(frozen=True)
class ThresholdConfig:
    replicates: int = 1
    seed: int = DEFAULT_SEED
    aggregation: str = "max-of-single"

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        if self.replicates > 1 and self.aggregation == "max-of-single":
            object.__setattr__(self, "aggregation", "median-of-maxima")

    @property
    def is_extension(self) -> bool:
        """True when the configuration departs from the single-draw scheme."""
        return self.replicates > 1


def _z_block(x: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    half = x.shape[0] // 2
    odd = x[0:2 * half:2]
    even = x[1:2 * half:2]
    t_odd = odd[:, rows] * odd[:, cols]
    t_even = even[:, rows] * even[:, cols]
    return ((t_even - t_odd) / math.sqrt(2.0)).T


def build_Z(c: CenteredData) -> np.ndarray:
    """Scaled differences of consecutive product columns, (p(p+1)/2) x floor(n/2).

    A trailing odd observation is dropped.
    """
    if c.n < 4:
        raise DataValidationError(f"need at least 4 observations, got {c.n}")
    rows, cols = vech_pairs(c.p)
    return _z_block(c.values, rows, cols)


def row_scales(Z: np.ndarray, p: int | None = None) -> VarianceProfile:
    """Sample standard deviation (ddof=1) of each row of Z."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] < 2:
        raise ValueError("need at least two columns to estimate a standard deviation")
    if p is None:
        p = int(round((math.sqrt(8 * Z.shape[0] + 1) - 1) / 2))
    return VarianceProfile(p, Z.std(axis=1, ddof=1))


def variance_profile(c: CenteredData, chunk: int = CHUNK) -> VarianceProfile:
    """Equivalent to ``row_scales(build_Z(c))`` without materializing Z."""
    if c.n < 4:
        raise DataValidationError(f"need at least 4 observations, got {c.n}")
    rows, cols = vech_pairs(c.p)
    scales = np.empty(len(rows))
    for start in range(0, len(rows), chunk):
        sl = slice(start, start + chunk)
        scales[sl] = _z_block(c.values, rows[sl], cols[sl]).std(axis=1, ddof=1)
    return VarianceProfile(c.p, scales)


def _block_rng(seed: int, replicate: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), replicate, block]))


def _max_resampled_d(scales: np.ndarray, n: int, seed: int, replicate: int) -> float:
    best = -np.inf
    for block, start in enumerate(range(0, len(scales), RNG_BLOCK)):
        o = scales[start:start + RNG_BLOCK]
        # column j holds the n variates of row start + j of X*
        x_star = _block_rng(seed, replicate, block).standard_normal((n, len(o))) * o
        best = max(best, float(d_statistic(x_star).max()))
    return best


def bootstrap_threshold(profile: VarianceProfile, n: int, cfg: ThresholdConfig | None = None) -> float:
    """Largest entry of D computed on X* = diag(scales) Y, Y standard normal.

    With ``cfg.replicates > 1`` the median of the per-draw maxima is returned.
    """
    cfg = cfg or ThresholdConfig()
    if profile.degenerate:
        return 0.0
    maxima = [_max_resampled_d(profile.scales, n, cfg.seed, r) for r in range(cfg.replicates)]
    if cfg.replicates == 1:
        return maxima[0]
    return float(np.median(maxima))


def theoretical_threshold(p: int, n: int, C: float) -> float:
    """C * max(ln p, ln n)."""
    if not C > 0:
        raise ValueError("C must be positive")
    return C * max(math.log(p), math.log(n))
