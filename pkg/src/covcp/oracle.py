"""Brute-force reference statistics.

Each function evaluates the defining sums literally, with explicit nested
loops and explicit exclusion of coincident indices. No algebraic
simplification is applied; these exist to check the prefix-sum kernels and
are only practical for n up to about 14.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import CenteredData, vech_index
from .reduction import DVector, SelectionSet


def _vech_outer(x: list[float]) -> list[float]:
    # vech(x x^T) in canonical (upper-triangle, row-major) order
    p = len(x)
    return [x[a] * x[b] for a in range(p) for b in range(a, p)]


def _stacked(c: CenteredData) -> list[list[float]]:
    return [_vech_outer(row) for row in c.values.tolist()]


def _vk_from_products(t: list[list[float]], ell: int, k: int) -> float:
    n = len(t)
    if not (2 <= k <= n - 2):
        raise ValueError(f"split point k={k} outside 2..{n - 2}")
    # observations are 1-based in the sums below; t is 0-based
    first = 0.0
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            if i != j:
                first += t[i - 1][ell] * t[j - 1][ell]
    second = 0.0
    for i in range(k + 1, n + 1):
        for j in range(k + 1, n + 1):
            if i != j:
                second += t[i - 1][ell] * t[j - 1][ell]
    cross = 0.0
    for i in range(1, k + 1):
        for j in range(k + 1, n + 1):
            cross += t[i - 1][ell] * t[j - 1][ell]
    return (
        first / (k * (k - 1))
        + second / ((n - k) * (n - k - 1))
        - 2.0 * cross / (k * (n - k))
    )


def naive_vk(c: CenteredData, a: int, b: int, k: int) -> float:
    """V_k(a, b) for 1-based a <= b."""
    return _vk_from_products(_stacked(c), vech_index(a, b, c.p), k)


def naive_D(c: CenteredData) -> DVector:
    t = _stacked(c)
    n = c.n
    if n < 4:
        raise ValueError("need n >= 4")
    d = []
    for ell in range(c.n_components):
        total = 0.0
        for k in range(2, n - 1):
            total += k * (n - k) / n * _vk_from_products(t, ell, k)
        d.append(total / (n - 3))
    return DVector(c.p, np.array(d))


def naive_un_components(c: CenteredData, ells: Sequence[int], k: int) -> float:
    n = c.n
    if not (2 <= k <= n - 2):
        raise ValueError(f"split point k={k} outside 2..{n - 2}")
    full = _stacked(c)
    x = [[row[e] for e in ells] for row in full]
    m = len(ells)
    total = 0.0
    for i in range(1, k + 1):
        for t in range(1, k + 1):
            if i == t:
                continue
            for j in range(k + 1, n + 1):
                for l in range(k + 1, n + 1):
                    if j == l:
                        continue
                    xi, xj, xt, xl = x[i - 1], x[j - 1], x[t - 1], x[l - 1]
                    for q in range(m):
                        total += (xi[q] - xj[q]) * (xt[q] - xl[q])
    return total / float(n) ** 4


def naive_un(c: CenteredData, selection: SelectionSet, k: int) -> float:
    """Literal quadruple sum over i != t <= k and j != l > k."""
    return naive_un_components(c, [int(e) for e in selection.indices], k)


def naive_cusum_gap(c: CenteredData, ells: Sequence[int], k: int) -> float:
    """The three correction sums separating the CUSUM form from U_n(k)."""
    n = c.n
    full = _stacked(c)
    x = [[row[e] for e in ells] for row in full]

    def dot(u, v, w, z):
        return sum((u[q] - v[q]) * (w[q] - z[q]) for q in range(len(u)))

    first = 0.0
    for i in range(1, k + 1):
        for j in range(k + 1, n + 1):
            first += dot(x[i - 1], x[j - 1], x[i - 1], x[j - 1])
    second = 0.0
    for i in range(1, k + 1):
        for j in range(k + 1, n + 1):
            for l in range(k + 1, n + 1):
                if j != l:
                    second += dot(x[i - 1], x[j - 1], x[i - 1], x[l - 1])
    third = 0.0
    for i in range(1, k + 1):
        for t in range(1, k + 1):
            if i != t:
                for j in range(k + 1, n + 1):
                    third += dot(x[i - 1], x[j - 1], x[t - 1], x[j - 1])
    return (first + second + third) / float(n) ** 4


def relative_deviation(x, ref) -> float:
    """max |x - ref| / |ref|, with |ref| floored at 1e-12 of the largest |ref|."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    ref = np.atleast_1d(np.asarray(ref, dtype=np.float64))
    scale = float(np.abs(ref).max()) if ref.size else 0.0
    if scale == 0.0:
        return float(np.abs(x - ref).max(initial=0.0))
    floor = np.maximum(np.abs(ref), 1e-12 * scale)
    return float((np.abs(x - ref) / floor).max())


def agreement_report(max_n: int = 12, instances: int = 50, seed: int = 0) -> dict[str, float]:
    """Max relative deviation of each fast kernel from its brute-force oracle
    over random instances with 8 <= n <= max_n and 2 <= p <= 4."""
    from .core import center, component_series
    from .detect import u_curve
    from .reduction import compute_D, v_k

    if max_n < 8:
        raise ValueError("max_n must be at least 8")
    rng = np.random.default_rng(seed)
    worst = {"v_k": 0.0, "D": 0.0, "u_n": 0.0}
    for _ in range(instances):
        n = int(rng.integers(8, max_n + 1))
        p = int(rng.integers(2, 5))
        c = center(rng.standard_normal((n, p)) * rng.uniform(0.5, 2.0, size=p))
        L = c.n_components

        ell = int(rng.integers(L))
        series = component_series(c, ell)
        a, b = series.index.a, series.index.b
        fast = [v_k(series, k, n) for k in range(2, n - 1)]
        slow = [naive_vk(c, a, b, k) for k in range(2, n - 1)]
        worst["v_k"] = max(worst["v_k"], relative_deviation(fast, slow))

        worst["D"] = max(worst["D"], relative_deviation(compute_D(c).d, naive_D(c).d))

        m = int(rng.integers(1, min(3, L) + 1))
        ells = np.sort(rng.choice(L, size=m, replace=False))
        curve = u_curve(c, ells)
        slow = [naive_un_components(c, ells.tolist(), k) for k in range(2, n - 1)]
        worst["u_n"] = max(worst["u_n"], relative_deviation(curve.values, slow))
    return worst
