"""Permutation two-sample test built on the FUSE-1 statistic.

The null distribution is formed from B uniformly random permutations of the
pooled sample plus the identity.  Each permutation only relabels indices, so
all Gram matrices are computed once and reused.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .statistics import (
    LOGSUMEXP,
    PooledGrams,
    fuse_values,
    indicator_rows,
    mmd2_batch,
    quantile,
    _check_index_sets,
)


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; used everywhere instead of the numpy default."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class PermutationPlan:
    permutations: np.ndarray  # (B + 1, n + m), last row is the identity
    seed: int | None
    B: int


@dataclass(frozen=True)
class TestConfig:
    alpha: float = 0.05
    B: int = 2000
    lam: float = 1.0
    seed: int = 0
    form: str = LOGSUMEXP
    strict: bool = False  # reject only when the statistic exceeds the threshold

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha!r}")
        if int(self.B) != self.B or self.B < 1:
            raise ConfigError(f"number of permutations must be a positive integer, got {self.B!r}")
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise ConfigError(f"lambda must be positive, got {self.lam!r}")


@dataclass
class TestResult:
    statistic: float
    threshold: float
    p_value: float
    reject: bool
    per_kernel_mmd: np.ndarray
    null_stats: np.ndarray | None = field(default=None, repr=False)

    __test__ = False

    def to_dict(self) -> dict:
        out = {
            "statistic": self.statistic,
            "threshold": self.threshold,
            "p_value": self.p_value,
            "reject": self.reject,
            "per_kernel_mmd": [None if math.isnan(v) else float(v) for v in self.per_kernel_mmd],
        }
        if self.null_stats is not None:
            out["null_stats"] = [float(v) for v in self.null_stats]
        return out


def make_plan(n: int, m: int, B: int, seed) -> PermutationPlan:
    """B i.i.d. uniform permutations of range(n + m) followed by the identity."""
    size = n + m
    if size < 2:
        raise ConfigError("need at least two pooled points to permute")
    if B < 1:
        raise ConfigError("B must be >= 1")
    rng = make_rng(seed)
    perms = rng.permuted(np.tile(np.arange(size), (B, 1)), axis=1)
    perms = np.vstack([perms, np.arange(size)])
    perms.setflags(write=False)
    return PermutationPlan(perms, seed, B)


def permuted_mmd2(
    pooled: PooledGrams, plan: PermutationPlan, idx_x=None, idx_y=None, kernels=None
) -> np.ndarray:
    """Per-kernel MMD^2 under every permutation of the plan, shape (r, B + 1).

    Only the kernels listed in ``kernels`` (default: those with positive
    prior weight) are evaluated; other rows are NaN.  The last column is the
    observed split (``idx_x``, ``idx_y``, defaulting to the pooled order).
    """
    n, m = pooled.n, pooled.m
    size = n + m
    if idx_x is None:
        idx_x = np.arange(n)
    if idx_y is None:
        idx_y = np.arange(n, size)
    ix, iy = _check_index_sets(size, idx_x, idx_y)
    if ix.size != n or iy.size != m or plan.permutations.shape[1] != size:
        raise ConfigError("observed split does not match the pooled sample sizes")
    x_sets = np.vstack([plan.permutations[:-1, :n], ix[None, :]])
    y_sets = np.vstack([plan.permutations[:-1, n:], iy[None, :]])
    wx = indicator_rows(size, x_sets)
    wy = indicator_rows(size, y_sets)
    if kernels is None:
        kernels = np.flatnonzero(pooled.pool.weights > 0)
    out = np.full((pooled.pool.size, plan.B + 1), np.nan)
    for k in kernels:
        out[k] = mmd2_batch(pooled.grams[k], wx, wy)
    return out


def decide(stats: np.ndarray, alpha: float, strict: bool = False) -> tuple[float, float, float, bool]:
    """Threshold, p-value and verdict from B + 1 statistics (observed last).

    The default rejects on ``statistic >= threshold``. Ties with the
    threshold then count as rejections, so a constant statistic always
    rejects and the size can exceed alpha by up to 1/(B + 1). ``strict``
    rejects only on ``>``, which keeps the size at most alpha.
    """
    observed = float(stats[-1])
    threshold = quantile(stats, 1 - alpha)
    B = stats.size - 1
    p_value = (1 + int(np.count_nonzero(stats[:-1] >= observed))) / (B + 1)
    reject = observed > threshold if strict else observed >= threshold
    return observed, threshold, p_value, reject


def permutation_test(
    pooled: PooledGrams,
    cfg: TestConfig = TestConfig(),
    idx_x=None,
    idx_y=None,
    keep_null: bool = False,
) -> TestResult:
    """Run the FUSE-1 permutation test on precomputed Gram matrices.

    By default the first ``n`` pooled points are X and the remaining ``m``
    are Y; pass ``idx_x``/``idx_y`` to test a different observed split of the
    same pooled sample.
    """
    plan = make_plan(pooled.n, pooled.m, cfg.B, cfg.seed)
    mmd = permuted_mmd2(pooled, plan, idx_x, idx_y)
    stats = fuse_values(mmd, pooled.pool.weights, cfg.lam, cfg.form)
    observed, threshold, p_value, reject = decide(stats, cfg.alpha, cfg.strict)
    return TestResult(
        statistic=observed,
        threshold=threshold,
        p_value=p_value,
        reject=bool(reject),
        per_kernel_mmd=mmd[:, -1].copy(),
        null_stats=stats if keep_null else None,
    )


def reject_decision(result: TestResult) -> bool:
    return result.reject
