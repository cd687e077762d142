"""Change-point location on the screened components and the two-step pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bootstrap import (
    DEFAULT_SEED,
    ThresholdConfig,
    bootstrap_threshold,
    theoretical_threshold,
    variance_profile,
)
from .core import (
    CenteredData,
    ComponentSeries,
    DataMatrix,
    center,
    iter_product_blocks,
    prefix_sums,
)
from .reduction import DVector, SelectionSet, compute_D, select

CHANGE_ESTIMATED = "change-estimated"
NO_COMPONENTS = "no-components-selected"


@dataclass(frozen=True)
class UCurve:
    """U_n(k) for k = 2..n-2; ``values[k - 2]`` holds U_n(k)."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.n - 3,):
            raise ValueError(f"expected {self.n - 3} values for n={self.n}, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(2, self.n - 1)

    def __getitem__(self, k: int) -> float:
        if not (2 <= k <= self.n - 2):
            raise IndexError(f"U_n(k) undefined for k={k}")
        return float(self.values[k - 2])


def _u_coefficients(n: int):
    k = np.arange(2, n - 1, dtype=np.float64)
    return (n - k) * (n - k - 1), 2.0 * (k - 1) * (n - k - 1), k * (k - 1)


def _u_terms(S: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Per-k sums over columns of (S_k^2 - Q_k, S_k T_k, T_k^2 - R_k)."""
    n = S.shape[0] - 1
    Sk, Qk = S[2:n - 1], Q[2:n - 1]
    T, R = S[n] - Sk, Q[n] - Qk
    return np.stack([
        (Sk * Sk - Qk).sum(axis=1),
        (Sk * T).sum(axis=1),
        (T * T - R).sum(axis=1),
    ])


def _combine(n: int, terms: np.ndarray) -> np.ndarray:
    ca, cb, cc = _u_coefficients(n)
    return (ca * terms[0] - cb * terms[1] + cc * terms[2]) / float(n) ** 4


def u_n(selected: Sequence[ComponentSeries], k: int, n: int | None = None) -> float:
    """U_n(k) summed over the given component series."""
    if not selected:
        raise ValueError("U_n needs at least one selected component")
    n = selected[0].n if n is None else n
    if not (2 <= k <= n - 2):
        raise ValueError(f"split point k={k} outside 2..{n - 2} for n={n}")
    total = 0.0
    for s in selected:
        if s.n != n:
            raise ValueError("all series must have length n")
        Sk, Qk = s.S[k], s.Q[k]
        T, R = s.S[n] - Sk, s.Q[n] - Qk
        total += (
            (n - k) * (n - k - 1) * (Sk * Sk - Qk)
            - 2.0 * (k - 1) * (n - k - 1) * Sk * T
            + k * (k - 1) * (T * T - R)
        )
    return float(total / float(n) ** 4)


def u_curve(c: CenteredData, ells: np.ndarray | None = None) -> UCurve:
    """U_n(k) for every k over the components ``ells`` (all when None)."""
    n = c.n
    if ells is not None and len(ells) == 0:
        raise ValueError("U_n needs at least one selected component")
    terms = np.zeros((3, n - 3))
    for _, y in iter_product_blocks(c, ells):
        terms += _u_terms(*prefix_sums(y))
    return UCurve(n, _combine(n, terms))


def u_curve_from_series(selected: Sequence[ComponentSeries]) -> UCurve:
    if not selected:
        raise ValueError("U_n needs at least one selected component")
    n = selected[0].n
    y = np.column_stack([s.y for s in selected])
    return UCurve(n, _combine(n, _u_terms(*prefix_sums(y))))


def cusum_curve(c: CenteredData, ells: np.ndarray | None = None) -> UCurve:
    """The non-debiased form ||(n-k) sum_{i<=k} y_i - k sum_{j>k} y_j||^2 / n^4."""
    n = c.n
    out = np.zeros(n - 3)
    k = np.arange(2, n - 1, dtype=np.float64)[:, None]
    for _, y in iter_product_blocks(c, ells):
        S, _ = prefix_sums(y)
        Sk = S[2:n - 1]
        out += (((n - k) * Sk - k * (S[n] - Sk)) ** 2).sum(axis=1)
    return UCurve(n, out / float(n) ** 4)


def argmax_k(curve: UCurve) -> int:
    """Smallest k attaining the maximum of the curve."""
    if len(curve.values) == 0:
        raise ValueError("empty curve")
    return int(np.argmax(curve.values)) + 2


@dataclass(frozen=True)
class PipelineConfig:
    """``tau_rule`` is "bootstrap" or "theory"; ``C`` applies to the latter."""

    tau_rule: str = "bootstrap"
    C: float | None = None
    seed: int = DEFAULT_SEED
    boot_replicates: int = 1
    skip_reduction: bool = False
    fallback_all: bool = False
    keep_curve: bool = True

    def __post_init__(self):
        if self.tau_rule not in ("bootstrap", "theory"):
            raise ValueError(f"unknown tau rule {self.tau_rule!r}")
        if self.tau_rule == "theory" and not (self.C is not None and self.C > 0):
            raise ValueError("theory rule needs a positive constant C")

    @classmethod
    def from_rule(cls, rule: str, **kw) -> "PipelineConfig":
        """Parse "bootstrap" or "theory:C"."""
        if rule == "bootstrap":
            return cls(tau_rule="bootstrap", **kw)
        name, _, value = rule.partition(":")
        if name != "theory" or not value:
            raise ValueError(f"tau rule must be 'bootstrap' or 'theory:C', got {rule!r}")
        try:
            C = float(value)
        except ValueError:
            raise ValueError(f"invalid constant in tau rule {rule!r}") from None
        return cls(tau_rule="theory", C=C, **kw)


@dataclass
class DetectionResult:
    n: int
    p: int
    tau: float
    tau_rule: str
    selection: SelectionSet
    status: str
    curve: UCurve | None = None
    k_hat: int | None = None
    r_hat: float | None = None
    D: DVector | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.selection.m


def run_pipeline(data: DataMatrix | np.ndarray, cfg: PipelineConfig | None = None) -> DetectionResult:
    """Center, screen components by D > tau, then maximize U_n over the survivors."""
    cfg = cfg or PipelineConfig()
    if not isinstance(data, DataMatrix):
        data = DataMatrix(data)
    c = center(data)
    n, p = c.n, c.p
    D = compute_D(c)
    meta: dict = {}

    if cfg.skip_reduction:
        tau, rule = -np.inf, "none"
    elif cfg.tau_rule == "theory":
        tau, rule = theoretical_threshold(p, n, cfg.C), "theory"
        meta["C"] = cfg.C
    else:
        profile = variance_profile(c)
        tcfg = ThresholdConfig(replicates=cfg.boot_replicates, seed=cfg.seed)
        tau, rule = bootstrap_threshold(profile, n, tcfg), "bootstrap"
        meta.update(seed=cfg.seed, boot_replicates=tcfg.replicates, aggregation=tcfg.aggregation)
        if tcfg.is_extension:
            meta["extension"] = True
        if profile.degenerate:
            meta["degenerate_profile"] = True

    selection = select(D, tau)
    ells = selection.indices
    if selection.m == 0:
        if not cfg.fallback_all:
            return DetectionResult(n, p, tau, rule, selection, NO_COMPONENTS, D=D, meta=meta)
        meta["fallback_all"] = True
        ells = None

    curve = u_curve(c, ells)
    k_hat = argmax_k(curve)
    return DetectionResult(
        n, p, tau, rule, selection, CHANGE_ESTIMATED,
        curve=curve if cfg.keep_curve else None,
        k_hat=k_hat, r_hat=k_hat / n, D=D, meta=meta,
    )
