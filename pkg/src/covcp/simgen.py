"""Simulation scenarios and the replication harness.

Sigma_1 is always the identity. Sigma_2 is one of the four standard
alternatives (``case_sigma2``) or the random 2x2-block design
(``ab_sigma2``). Reports carry the mean, standard deviation and MSE of the
estimated change fraction r_hat = k_hat / n.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .core import DataMatrix
from .detect import CHANGE_ESTIMATED, PipelineConfig, run_pipeline

KINDS = ("identity-scaled", "single-entry-block", "explicit-block-diagonal")


class CovarianceError(ValueError):
    pass


def _sym_sqrt(block: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(block)
    if w.min() < -1e-10 * max(1.0, abs(w).max()):
        raise CovarianceError(f"block is not positive semi-definite (min eigenvalue {w.min():.3g})")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


@dataclass(frozen=True)
class CovSpec:
    """Structured covariance.

    identity-scaled: ``value`` * I_p.
    single-entry-block: blk(value, I_{p-1}).
    explicit-block-diagonal: blk(blocks[0], blocks[1], ..., I_rest), where the
    blocks fill the leading coordinates and any remainder is the identity.
    """

    kind: str
    p: int
    value: float = 1.0
    blocks: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CovarianceError(f"unknown covariance kind {self.kind!r}")
        if self.p < 1:
            raise CovarianceError("p must be >= 1")
        if self.kind in KINDS[:2] and not self.value > 0:
            raise CovarianceError(f"{self.kind} needs a positive value")
        if self.kind == "explicit-block-diagonal":
            blocks = tuple(np.array(b, dtype=np.float64, ndmin=2) for b in self.blocks)
            used = 0
            for b in blocks:
                if b.shape[0] != b.shape[1] or not np.allclose(b, b.T):
                    raise CovarianceError("blocks must be square and symmetric")
                used += b.shape[0]
            if used > self.p:
                raise CovarianceError(f"blocks span {used} coordinates, more than p={self.p}")
            object.__setattr__(self, "blocks", blocks)

    @classmethod
    def identity(cls, p: int, scale: float = 1.0) -> "CovSpec":
        return cls("identity-scaled", p, value=scale)

    def dense(self) -> np.ndarray:
        if self.kind == "identity-scaled":
            return self.value * np.eye(self.p)
        out = np.eye(self.p)
        if self.kind == "single-entry-block":
            out[0, 0] = self.value
            return out
        start = 0
        for b in self.blocks:
            s = b.shape[0]
            out[start:start + s, start:start + s] = b
            start += s
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` rows from N_p(0, self), factorizing block by block."""
        z = rng.standard_normal((size, self.p))
        if self.kind == "identity-scaled":
            return math.sqrt(self.value) * z
        if self.kind == "single-entry-block":
            z[:, 0] *= math.sqrt(self.value)
            return z
        start = 0
        for b in self.blocks:
            s = b.shape[0]
            z[:, start:start + s] = z[:, start:start + s] @ _sym_sqrt(b)
            start += s
        return z


def case_sigma2(case_id: int, p: int) -> CovSpec:
    """Post-change covariance of the four standard alternatives."""
    if p < 1:
        raise CovarianceError("p must be >= 1")
    if case_id == 1:
        return CovSpec.identity(p, 1.5)
    if case_id == 2:
        return CovSpec.identity(p, 2.0)
    if case_id == 3:
        return CovSpec("single-entry-block", p, value=4.0)
    if case_id == 4:
        return CovSpec("single-entry-block", p, value=8.0)
    raise ValueError(f"case must be 1, 2, 3 or 4, got {case_id!r}")


def ab_sigma2(p: int, rng: np.random.Generator) -> CovSpec:
    """Poisson(3) many 2x2 unit-diagonal blocks, off-diagonals uniform on
    [-0.6, -0.3] U [0.3, 0.6]; block count capped at p // 2."""
    if p < 2:
        raise CovarianceError("p must be >= 2")
    count = min(int(rng.poisson(3.0)), p // 2)
    blocks = []
    for _ in range(count):
        rho = rng.uniform(0.3, 0.6) * (1.0 if rng.random() < 0.5 else -1.0)
        blocks.append(np.array([[1.0, rho], [rho, 1.0]]))
    return CovSpec("explicit-block-diagonal", p, blocks=tuple(blocks))


@dataclass(frozen=True)
class Scenario:
    """Change at k0: rows 1..k0 ~ N(0, sigma1), rows k0+1..n ~ N(0, sigma2).

    ``case`` is a label; for "ab" a fresh sigma2 is drawn per dataset.
    """

    n: int
    p: int
    k0: int
    sigma1: CovSpec
    sigma2: CovSpec | None
    case: str = "custom"

    def __post_init__(self):
        if not (1 <= self.k0 < self.n):
            raise ValueError(f"need 1 <= k0 < n, got k0={self.k0}, n={self.n}")
        for s in (self.sigma1, self.sigma2):
            if s is not None and s.p != self.p:
                raise ValueError("covariance dimension does not match p")

    @property
    def r0(self) -> float:
        return self.k0 / self.n

    @classmethod
    def standard(cls, case, n: int, p: int, k0: int | None = None) -> "Scenario":
        k0 = n // 2 if k0 is None else k0
        case = str(case)
        if case == "ab":
            return cls(n, p, k0, CovSpec.identity(p), None, case="ab")
        return cls(n, p, k0, CovSpec.identity(p), case_sigma2(int(case), p), case=case)

    @classmethod
    def from_dict(cls, spec: dict) -> "Scenario":
        """Parse {n, p, k0, case} or {n, p, k0, sigma2: {...}}."""
        try:
            n, p = int(spec["n"]), int(spec["p"])
        except KeyError as e:
            raise ValueError(f"scenario is missing field {e.args[0]!r}") from None
        k0 = int(spec.get("k0", n // 2))
        if "case" in spec:
            return cls.standard(spec["case"], n, p, k0)
        if "sigma2" not in spec:
            raise ValueError("scenario needs 'case' or 'sigma2'")
        s2 = spec["sigma2"]
        sigma2 = CovSpec(
            s2["kind"], p, value=float(s2.get("value", 1.0)),
            blocks=tuple(s2.get("blocks", ())),
        )
        return cls(n, p, k0, CovSpec.identity(p), sigma2, case="custom")

    def to_dict(self) -> dict:
        out = {"n": self.n, "p": self.p, "k0": self.k0}
        if self.case != "custom":
            out["case"] = self.case
        else:
            out["sigma2"] = {
                "kind": self.sigma2.kind,
                "value": self.sigma2.value,
                "blocks": [b.tolist() for b in self.sigma2.blocks],
            }
        return out


def sample_dataset(s: Scenario, rng: np.random.Generator) -> DataMatrix:
    sigma2 = s.sigma2 if s.sigma2 is not None else ab_sigma2(s.p, rng)
    before = s.sigma1.sample(rng, s.k0)
    after = sigma2.sample(rng, s.n - s.k0)
    return DataMatrix(np.vstack([before, after]))


@dataclass
class ReplicationReport:
    K: int
    r0: float
    estimates: list[float]
    mean: float
    std: float
    mse: float
    n_no_detection: int = 0
    scenario: dict = field(default_factory=dict)


def summarize(estimates, r0: float, K: int | None = None, n_no_detection: int = 0) -> ReplicationReport:
    """Mean, std (ddof=1) and MSE of the estimates about r0."""
    r = np.asarray(estimates, dtype=np.float64)
    K = len(r) + n_no_detection if K is None else K
    if len(r) == 0:
        nan = float("nan")
        return ReplicationReport(K, r0, [], nan, nan, nan, n_no_detection)
    mean = float(r.mean())
    std = float(r.std(ddof=1)) if len(r) > 1 else float("nan")
    mse = float(np.mean((r - r0) ** 2))
    return ReplicationReport(K, r0, r.tolist(), mean, std, mse, n_no_detection)


def replicate_seeds(master_seed: int, index: int) -> tuple[np.random.Generator, int]:
    """Data generator and resampling seed for replicate ``index``."""
    ss = np.random.SeedSequence([master_seed & (2**64 - 1), index])
    data_ss, boot_ss = ss.spawn(2)
    return np.random.default_rng(data_ss), int(boot_ss.generate_state(1, np.uint64)[0])


def run_one(s: Scenario, master_seed: int, index: int, cfg: PipelineConfig):
    """k_hat / n for one replicate, or None when nothing was selected."""
    rng, boot_seed = replicate_seeds(master_seed, index)
    data = sample_dataset(s, rng)
    res = run_pipeline(data, replace(cfg, seed=boot_seed, keep_curve=False))
    return res.r_hat if res.status == CHANGE_ESTIMATED else None


def _run_one_star(args):
    return run_one(*args)


def resolve_workers(workers: int | None) -> int:
    if workers is None or workers <= 0:
        return os.cpu_count() or 1
    return workers


def run_replications(
    s: Scenario,
    K: int,
    master_seed: int,
    cfg: PipelineConfig | None = None,
    workers: int | None = 1,
    progress: Callable[[int], None] | None = None,
) -> ReplicationReport:
    if K < 2:
        raise ValueError("need at least 2 replicates")
    cfg = cfg or PipelineConfig()
    jobs = [(s, master_seed, i, cfg) for i in range(K)]
    workers = min(resolve_workers(workers), K)
    if workers == 1:
        outcomes = []
        for i, job in enumerate(jobs):
            outcomes.append(_run_one_star(job))
            if progress:
                progress(i + 1)
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            outcomes = list(ex.map(_run_one_star, jobs))
    estimates = [r for r in outcomes if r is not None]
    rep = summarize(estimates, s.r0, K, K - len(estimates))
    rep.scenario = s.to_dict()
    return rep
