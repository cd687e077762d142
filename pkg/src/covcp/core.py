"""Data model, half-vectorization indexing, centering and prefix sums.

Components (a, b) with 1 <= a <= b <= p are stored in row-major order over
the upper triangle: (1,1), (1,2), ..., (1,p), (2,2), ..., (p,p). Public
indices are 1-based; arrays returned by :func:`vech_pairs` are 0-based so
they can index numpy arrays directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

MIN_OBSERVATIONS = 8

# Columns of centered products materialized at once; bounds peak memory at
# roughly n * CHUNK * 8 bytes per temporary.
CHUNK = 8192


class DataValidationError(ValueError):
    """Raised when input data violates the data-model invariants."""


def n_components(p: int) -> int:
    return p * (p + 1) // 2


@dataclass(frozen=True)
class DataMatrix:
    """Raw n x p observation block, one observation per row."""

    values: np.ndarray

    def __post_init__(self):
        x = np.array(self.values, dtype=np.float64, copy=True)
        if x.ndim != 2:
            raise DataValidationError(f"data must be two-dimensional, got shape {x.shape}")
        n, p = x.shape
        if p < 1:
            raise DataValidationError("data must have at least one column")
        if n < MIN_OBSERVATIONS:
            raise DataValidationError(
                f"need at least {MIN_OBSERVATIONS} observations, got {n}"
            )
        bad = np.argwhere(~np.isfinite(x))
        if len(bad):
            i, a = bad[0]
            raise DataValidationError(
                f"non-finite value {x[i, a]!r} at row {i + 1}, column {a + 1}"
            )
        x.setflags(write=False)
        object.__setattr__(self, "values", x)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CenteredData:
    """Column-centered observations (produced by :func:`center`)."""

    values: np.ndarray

    def __post_init__(self):
        x = np.array(self.values, dtype=np.float64, copy=True)
        if x.ndim != 2:
            raise DataValidationError(f"centered data must be two-dimensional, got shape {x.shape}")
        x.setflags(write=False)
        object.__setattr__(self, "values", x)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def n_components(self) -> int:
        return n_components(self.p)


@dataclass(frozen=True)
class ComponentIndex:
    a: int
    b: int
    ell: int


@dataclass(frozen=True)
class ComponentSeries:
    """Centered products y_i = x_ia * x_ib with prefix sums.

    ``S[k]`` is the sum of the first k products and ``Q[k]`` the sum of their
    squares, for k = 0..n.
    """

    index: ComponentIndex
    y: np.ndarray
    S: np.ndarray
    Q: np.ndarray

    @property
    def n(self) -> int:
        return len(self.y)

    @classmethod
    def from_values(cls, y: Sequence[float], index: ComponentIndex | None = None) -> "ComponentSeries":
        """Wrap a raw sequence (used by the resampling threshold and in tests)."""
        y = np.asarray(y, dtype=np.float64)
        S, Q = prefix_sums(y)
        return cls(index or ComponentIndex(1, 1, 0), y, S, Q)


def vech_index(a: int, b: int, p: int) -> int:
    """Linear index of the 1-based component (a, b)."""
    if not (1 <= a <= b <= p):
        raise IndexError(f"component ({a}, {b}) invalid for p={p}; need 1 <= a <= b <= p")
    return (a - 1) * p - (a - 1) * (a - 2) // 2 + (b - a)


def vech_unindex(ell: int, p: int) -> tuple[int, int]:
    """Inverse of :func:`vech_index`."""
    if not (0 <= ell < n_components(p)):
        raise IndexError(f"linear index {ell} out of range for p={p}")
    a, start = 1, 0
    while start + (p - a + 1) <= ell:
        start += p - a + 1
        a += 1
    return a, a + (ell - start)


def vech_pairs(p: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based (rows, cols) of all components in canonical order."""
    return np.triu_indices(p)


def center(data: DataMatrix | np.ndarray) -> CenteredData:
    if not isinstance(data, DataMatrix):
        data = DataMatrix(data)
    x = data.values
    return CenteredData(x - x.mean(axis=0))


def component_index(ell: int, p: int) -> ComponentIndex:
    a, b = vech_unindex(ell, p)
    return ComponentIndex(a, b, ell)


def prefix_sums(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Prefix sums of y and y**2 along axis 0, with a leading zero row."""
    y = np.asarray(y, dtype=np.float64)
    shape = (y.shape[0] + 1,) + y.shape[1:]
    S = np.empty(shape)
    Q = np.empty(shape)
    S[0] = 0.0
    Q[0] = 0.0
    if y.ndim == 1:
        np.cumsum(y, out=S[1:])
        np.cumsum(y * y, out=Q[1:])
        return S, Q
    # row-at-a-time accumulation; much faster than cumsum along axis 0
    sq = y * y
    for k in range(y.shape[0]):
        np.add(S[k], y[k], out=S[k + 1])
        np.add(Q[k], sq[k], out=Q[k + 1])
    return S, Q


def component_series(c: CenteredData, idx: ComponentIndex | int) -> ComponentSeries:
    p = c.p
    if isinstance(idx, ComponentIndex):
        if vech_index(idx.a, idx.b, p) != idx.ell:
            raise IndexError(f"inconsistent component index {idx}")
    else:
        idx = component_index(int(idx), p)
    y = c.values[:, idx.a - 1] * c.values[:, idx.b - 1]
    S, Q = prefix_sums(y)
    return ComponentSeries(idx, y, S, Q)


def products(c: CenteredData, ells: np.ndarray | None = None) -> np.ndarray:
    """n x len(ells) matrix of centered products for the given components."""
    rows, cols = vech_pairs(c.p)
    if ells is not None:
        ells = np.asarray(ells, dtype=np.intp)
        rows, cols = rows[ells], cols[ells]
    x = c.values
    return x[:, rows] * x[:, cols]


def iter_product_blocks(
    c: CenteredData, ells: np.ndarray | None = None, chunk: int = CHUNK
) -> Iterator[tuple[slice, np.ndarray]]:
    """Yield (output slice, n x block products) over the requested components."""
    if ells is None:
        ells = np.arange(c.n_components)
    ells = np.asarray(ells, dtype=np.intp)
    for start in range(0, len(ells), chunk):
        block = ells[start:start + chunk]
        yield slice(start, start + len(block)), products(c, block)
